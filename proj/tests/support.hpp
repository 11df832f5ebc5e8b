#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lgmreg/geom3d.hpp"
#include "lgmreg/latent_gmm.hpp"
#include "lgmreg/random.hpp"

namespace lgmreg::test {

inline PointCloud gaussian_cloud(std::size_t N, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  PointMatrix X(static_cast<Eigen::Index>(N), 3);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (int c = 0; c < 3; ++c) X(i, c) = g(rng);
  return PointCloud(std::move(X));
}

inline Vec3 gaussian_vec(Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  return Vec3(g(rng), g(rng), g(rng));
}

inline RigidTransform random_transform(Rng& rng, double translation = 1.0) {
  return {random_rotation(rng), gaussian_vec(rng, translation)};
}

/// Row-stochastic matrix with strictly positive entries.
inline Gamma random_gamma(std::size_t N, std::size_t J, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Gamma g(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(J));
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = u(rng);
    g.row(i) /= g.row(i).sum();
  }
  return g;
}

inline Gmm random_gmm(std::size_t J, Rng& rng) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Gmm m;
  const auto n = static_cast<Eigen::Index>(J);
  m.weights.resize(n);
  m.means.resize(n, 3);
  m.variances.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    m.weights(j) = u(rng);
    m.means.row(j) = gaussian_vec(rng).transpose();
    m.variances(j) = u(rng) * 0.5;
  }
  m.weights /= m.weights.sum();
  return m;
}

/// Angle of A B^T from the chord length, accurate near zero (unlike arccos).
inline double angle_between(const Mat3& A, const Mat3& B) {
  return 2.0 * std::asin(std::min(1.0, (A - B).norm() / (2.0 * std::sqrt(2.0))));
}

/// |a - b| / max(|a|, |b|, floor)
inline double rel_err(double a, double b, double floor = 1e-7) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace lgmreg::test
