#include "lgmreg/features.hpp"

#include <cmath>
#include <numbers>

#include "lgmreg/error.hpp"
#include "lgmreg/kdtree.hpp"

namespace lgmreg {
namespace {

constexpr double kAxisEps = 1e-9;
constexpr double kProjectionEps = 1e-12;

double vector_angle(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

template <typename NeighborFn>
FeatureMatrix build_features(const PointCloud& P, std::size_t k, NeighborFn&& neighbors_of) {
  const std::size_t N = P.size();
  if (k < 1 || N <= k) throw InvalidArgument("invariant features need N > k >= 1");
  const PointCloud C = P.centered();

  FeatureMatrix F(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(4 * k));
  std::vector<Vec3> proj(k);
  std::vector<bool> usable(k);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec3 p = C.point(i);
    const double pn = p.norm();
    const std::vector<Neighbor> nb = neighbors_of(C, i);
    const bool has_axis = pn >= kAxisEps;
    const Vec3 axis = has_axis ? Vec3(p / pn) : Vec3::Zero();

    for (std::size_t m = 0; m < k; ++m) {
      const Vec3 q = C.point(nb[m].index);
      proj[m] = q - q.dot(axis) * axis;
      usable[m] = has_axis && proj[m].norm() >= kProjectionEps;
    }
    auto row = F.row(static_cast<Eigen::Index>(i));
    for (std::size_t m = 0; m < k; ++m) {
      const Vec3 q = C.point(nb[m].index);
      const auto c = static_cast<Eigen::Index>(4 * m);
      row(c) = pn;
      row(c + 1) = q.norm();
      row(c + 2) = has_axis && q.norm() >= kAxisEps ? vector_angle(p, q) : 0.0;
      double gap = 0.0;
      if (usable[m]) {
        double best = 2.0 * std::numbers::pi;
        bool found = false;
        for (std::size_t n = 0; n < k; ++n) {
          if (n == m || !usable[n]) continue;
          double theta = std::atan2(axis.dot(proj[m].cross(proj[n])), proj[m].dot(proj[n]));
          if (theta < 0.0) theta += 2.0 * std::numbers::pi;
          if (theta < best) best = theta;
          found = true;
        }
        gap = found ? best : 0.0;
      }
      row(c + 3) = gap;
    }
  }
  return F;
}

}  // namespace

std::string to_string(InputMode mode) {
  return mode == InputMode::kInvariantFeatures ? "invariant_features" : "raw_xyz";
}

InputMode parse_input_mode(const std::string& name) {
  if (name == "invariant_features" || name == "rri") return InputMode::kInvariantFeatures;
  if (name == "raw_xyz" || name == "xyz") return InputMode::kRawXyz;
  throw InvalidArgument("unknown input mode '" + name + "'");
}

FeatureMatrix invariant_features(const PointCloud& P, std::size_t k) {
  if (k < 1 || P.size() <= k) throw InvalidArgument("invariant features need N > k >= 1");
  const KdTree tree(P.centered());
  return build_features(P, k, [&](const PointCloud& C, std::size_t i) { return tree.knn(C.point(i), k, i); });
}

FeatureMatrix invariant_features_brute_force(const PointCloud& P, std::size_t k) {
  return build_features(P, k, [&](const PointCloud& C, std::size_t i) { return brute_force_knn(C, C.point(i), k, i); });
}

FeatureMatrix raw_xyz_features(const PointCloud& P) { return P.centered().matrix(); }

std::size_t feature_dimension(InputMode mode, std::size_t k) {
  return mode == InputMode::kInvariantFeatures ? 4 * k : 3;
}

FeatureMatrix compute_features(const PointCloud& P, InputMode mode, std::size_t k) {
  return mode == InputMode::kInvariantFeatures ? invariant_features(P, k) : raw_xyz_features(P);
}

}  // namespace lgmreg
