#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>

#include "lgmreg/geom3d.hpp"

namespace lgmreg {

/// N x d per-point network input.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class InputMode { kInvariantFeatures, kRawXyz };

std::string to_string(InputMode mode);
/// Accepts "invariant_features"/"rri" and "raw_xyz"/"xyz".
InputMode parse_input_mode(const std::string& name);

inline constexpr std::size_t kDefaultNeighbors = 8;

/// Rotation-invariant point descriptors. The cloud is centered at its centroid;
/// for each point p and each of its k nearest neighbors q (increasing distance,
/// ties by index) the row holds
///   |p|, |q|, angle(p, q), azimuthal gap of q about the p axis,
/// where the gap is the counter-clockwise angle (right-handed about p) from q's
/// projection to the next neighbor's projection on the plane normal to p.
/// Angular entries are zero when |p| < 1e-9; gaps are zero for projections
/// shorter than 1e-12 or when no other neighbor has a usable projection.
/// Throws InvalidArgument unless N > k >= 1.
FeatureMatrix invariant_features(const PointCloud& P, std::size_t k = kDefaultNeighbors);

/// Same contract, neighbors found by exhaustive search (test oracle).
FeatureMatrix invariant_features_brute_force(const PointCloud& P, std::size_t k = kDefaultNeighbors);

/// Centroid-centered coordinates, N x 3.
FeatureMatrix raw_xyz_features(const PointCloud& P);

/// Feature width produced by `mode`.
std::size_t feature_dimension(InputMode mode, std::size_t k);
FeatureMatrix compute_features(const PointCloud& P, InputMode mode, std::size_t k = kDefaultNeighbors);

}  // namespace lgmreg
