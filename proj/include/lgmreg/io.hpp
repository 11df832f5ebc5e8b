#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "lgmreg/geom3d.hpp"
#include "lgmreg/latent_gmm.hpp"

namespace lgmreg::io {

// Text formats. Numbers are written with 17 significant digits so that a
// write/read cycle reproduces every double exactly; `#` starts a comment line.

/// One point per line: `x y z`.
PointCloud read_point_cloud(std::istream& in);
PointCloud read_point_cloud(const std::filesystem::path& path);
void write_point_cloud(std::ostream& out, const PointCloud& P);
void write_point_cloud(const std::filesystem::path& path, const PointCloud& P);

/// Four rows of four numbers, row-major homogeneous matrix ending in `0 0 0 1`.
RigidTransform read_transform(std::istream& in);
RigidTransform read_transform(const std::filesystem::path& path);
void write_transform(std::ostream& out, const RigidTransform& T);
void write_transform(const std::filesystem::path& path, const RigidTransform& T);

/// Header line `J`, then J lines `pi mux muy muz sigma2`.
Gmm read_gmm(std::istream& in);
Gmm read_gmm(const std::filesystem::path& path);
void write_gmm(std::ostream& out, const Gmm& gmm);
void write_gmm(const std::filesystem::path& path, const Gmm& gmm);

/// 17 significant digits (printf %.17g).
std::string format_double(double v);

}  // namespace lgmreg::io
