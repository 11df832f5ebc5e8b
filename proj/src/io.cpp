#include "lgmreg/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "lgmreg/error.hpp"

namespace lgmreg::io {
namespace {

// Non-empty, non-comment lines split into numbers.
std::vector<std::vector<double>> read_rows(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw IoError("line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

PointCloud read_point_cloud(std::istream& in) {
  const auto rows = read_rows(in);
  if (rows.empty()) throw IoError("point cloud file has no points");
  PointMatrix X(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 3) throw IoError("point " + std::to_string(i) + " does not have 3 coordinates");
    for (int c = 0; c < 3; ++c) X(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
  }
  try {
    return PointCloud(std::move(X));
  } catch (const InvalidArgument& e) {
    throw IoError(e.what());
  }
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_point_cloud(in);
}

void write_point_cloud(std::ostream& out, const PointCloud& P) {
  for (std::size_t i = 0; i < P.size(); ++i) {
    const Vec3 p = P.point(i);
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
  }
}

void write_point_cloud(const std::filesystem::path& path, const PointCloud& P) {
  auto out = open_out(path);
  write_point_cloud(out, P);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

RigidTransform read_transform(std::istream& in) {
  const auto rows = read_rows(in);
  if (rows.size() != 4) throw IoError("transform file must have 4 rows");
  Mat4 H;
  for (int r = 0; r < 4; ++r) {
    if (rows[static_cast<std::size_t>(r)].size() != 4) throw IoError("transform rows must have 4 numbers");
    for (int c = 0; c < 4; ++c) H(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  try {
    return RigidTransform::from_homogeneous(H);
  } catch (const InvalidArgument& e) {
    throw IoError(e.what());
  }
}

RigidTransform read_transform(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_transform(in);
}

void write_transform(std::ostream& out, const RigidTransform& T) {
  const Mat4 H = T.homogeneous();
  for (int r = 0; r < 4; ++r)
    out << format_double(H(r, 0)) << ' ' << format_double(H(r, 1)) << ' ' << format_double(H(r, 2)) << ' '
        << format_double(H(r, 3)) << '\n';
}

void write_transform(const std::filesystem::path& path, const RigidTransform& T) {
  auto out = open_out(path);
  write_transform(out, T);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Gmm read_gmm(std::istream& in) {
  const auto rows = read_rows(in);
  if (rows.empty() || rows[0].size() != 1) throw IoError("mixture file must start with the component count");
  const double Jd = rows[0][0];
  if (!(Jd >= 1.0) || Jd != static_cast<double>(static_cast<long>(Jd)) || rows.size() != static_cast<std::size_t>(Jd) + 1)
    throw IoError("mixture component count does not match the file");
  const auto J = static_cast<Eigen::Index>(Jd);
  Gmm g;
  g.weights.resize(J);
  g.means.resize(J, 3);
  g.variances.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const auto& row = rows[static_cast<std::size_t>(j) + 1];
    if (row.size() != 5) throw IoError("mixture rows must be 'pi mux muy muz sigma2'");
    g.weights(j) = row[0];
    g.means.row(j) << row[1], row[2], row[3];
    g.variances(j) = row[4];
  }
  try {
    g.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(e.what());
  }
  return g;
}

Gmm read_gmm(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_gmm(in);
}

void write_gmm(std::ostream& out, const Gmm& gmm) {
  out << gmm.size() << '\n';
  for (Eigen::Index j = 0; j < gmm.weights.size(); ++j)
    out << format_double(gmm.weights(j)) << ' ' << format_double(gmm.means(j, 0)) << ' '
        << format_double(gmm.means(j, 1)) << ' ' << format_double(gmm.means(j, 2)) << ' '
        << format_double(gmm.variances(j)) << '\n';
}

void write_gmm(const std::filesystem::path& path, const Gmm& gmm) {
  auto out = open_out(path);
  write_gmm(out, gmm);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace lgmreg::io
