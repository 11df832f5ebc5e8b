#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

#include "lgmreg/geom3d.hpp"

namespace lgmreg {

/// Lower bound applied to every component variance.
inline constexpr double kVarianceFloor = 1e-6;
/// Components with N * pi_j below kWeightFloorPerPoint * N are treated as empty.
inline constexpr double kWeightFloorPerPoint = 1e-6;

/// Mixture of J isotropic Gaussians N(mu_j, sigma_j^2 I).
struct Gmm {
  Eigen::VectorXd weights;    // J, sums to 1
  Eigen::MatrixX3d means;     // J x 3
  Eigen::VectorXd variances;  // J, >= kVarianceFloor

  std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
  Vec3 mean(std::size_t j) const { return means.row(static_cast<Eigen::Index>(j)).transpose(); }
  /// Throws InvalidArgument when shapes disagree, weights leave the simplex
  /// (1e-9) or a variance is below the floor.
  void validate() const;
};

/// Row-stochastic N x J matrix of point-to-component responsibilities.
using Gamma = Eigen::MatrixXd;

/// Throws InvalidArgument if some entry is negative or a row sum deviates from
/// one by more than `tolerance`.
void validate_gamma(const Gamma& gamma, double tolerance = 1e-7);

/// Log of N(x | mu, sigma2 I) in three dimensions.
double log_normal_isotropic(const Vec3& x, const Vec3& mu, double sigma2);

/// E-step posterior: softmax over j of log pi_j + log N(p_i | mu_j, sigma_j^2 I).
/// Throws DegenerateMixture when a row has no finite log term.
Gamma posterior_gamma(const PointCloud& P, const Gmm& gmm);

/// Closed-form M-step for isotropic components:
///   pi_j = sum_i g_ij / N,  mu_j = sum_i g_ij p_i / (N pi_j),
///   sigma_j^2 = sum_i g_ij |p_i - mu_j|^2 / (3 N pi_j)   (floored).
/// Components with N pi_j below the weight floor take the cloud centroid as
/// mean and the variance floor, keeping their computed weight.
Gmm m_theta(const Gamma& gamma, const PointCloud& P);

/// Upstream gradients with respect to the outputs of m_theta.
struct GmmGradient {
  Eigen::VectorXd weights;
  Eigen::MatrixX3d means;
  Eigen::VectorXd variances;

  static GmmGradient zeros(std::size_t J);
  GmmGradient& operator+=(const GmmGradient& other);
};

/// Gradient of a scalar with respect to the correspondence matrix, given its
/// gradient with respect to m_theta(gamma, P). Floored quantities are constant.
Gamma m_theta_backward(const Gamma& gamma, const PointCloud& P, const Gmm& out, const GmmGradient& grad);

/// sum_i log sum_j pi_j N(p_i | mu_j, sigma_j^2 I), log-sum-exp stabilized.
double log_likelihood(const PointCloud& P, const Gmm& gmm);

struct EmFitResult {
  Gmm gmm;
  /// Log-likelihood after initialization and after every iteration.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
};

/// k-means++ seeded EM. Stops after `iters` iterations or when the
/// log-likelihood gain drops below 1e-7 relative. Throws InvalidArgument if N < J.
EmFitResult em_fit_traced(const PointCloud& P, std::size_t J, int iters, Rng& rng);
Gmm em_fit(const PointCloud& P, std::size_t J, int iters, Rng& rng);

struct EmRegisterResult {
  RigidTransform transform;
  /// Weighted point-to-mean objective before and after each M_T step (pairs),
  /// evaluated with that iteration's posterior.
  std::vector<double> objective_before;
  std::vector<double> objective_after;
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
};

/// EM over the transform: posterior of T(P_src) under the fixed target
/// mixture, then the closed-form M_T update. Stops when the update rotates by
/// less than 1e-6 rad and translates by less than 1e-8.
EmRegisterResult em_register_traced(const PointCloud& source, const Gmm& target,
                                    const RigidTransform& initial, int iters);
RigidTransform em_register(const PointCloud& source, const Gmm& target,
                           const RigidTransform& initial, int iters);

}  // namespace lgmreg
