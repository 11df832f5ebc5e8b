#pragma once

#include <Eigen/Core>

#include "lgmreg/geom3d.hpp"
#include "lgmreg/latent_gmm.hpp"
#include "lgmreg/svd3.hpp"

namespace lgmreg {

/// Relative singular-value threshold below which the rotation is not unique.
inline constexpr double kDegeneracyRatio = 1e-12;

/// Which weights locate the two centroids of the weighted alignment.
enum class CentroidWeighting {
  /// The objective weights pi_hat_j / sigma_j^2: the exact minimizer of the
  /// weighted criterion.
  kObjective,
  /// The source mixture weights pi_hat_j alone. Not the exact minimizer
  /// when variances differ.
  kMixture,
};

/// J weighted pairs (source mean -> target mean).
struct WeightedCorrespondences {
  Eigen::MatrixX3d source;  // J x 3
  Eigen::MatrixX3d target;  // J x 3
  Eigen::VectorXd weights;  // J, > 0
  /// Optional centroid weights; empty means `weights`.
  Eigen::VectorXd centroid_weights;

  Eigen::Index size() const { return source.rows(); }
  void validate() const;
};

/// Everything the backward pass needs from a forward solve.
struct UmeyamaSolution {
  RigidTransform transform;
  Svd3 svd;              // of the cross-covariance
  Vec3 reflection;       // diagonal of the sign matrix, (1, 1, +-1)
  Vec3 source_centroid;
  Vec3 target_centroid;
  Mat3 cross_covariance;
};

/// argmin_{R,t} sum_j w_j |R s_j + t - d_j|^2 over proper rotations.
/// Cross-covariance M = sum_j w_j (d_j - d_c)(s_j - s_c)^T = U S V^T,
/// R = U diag(1, 1, det(U V^T)) V^T, t = d_c - R s_c.
/// Throws DegenerateConfiguration when the two smallest singular values are
/// both below 1e-12 of the largest.
UmeyamaSolution weighted_umeyama_solve(const WeightedCorrespondences& corr);
RigidTransform weighted_umeyama(const WeightedCorrespondences& corr);

struct UmeyamaGradient {
  Eigen::MatrixX3d source;
  Eigen::MatrixX3d target;
  Eigen::VectorXd weights;
  Eigen::VectorXd centroid_weights;  // empty when the solve used `weights`
  /// Set when the rotation differential is singular (reflected solution with
  /// nearly repeated singular values, or a near-zero pair sum); all gradients
  /// are then zero.
  bool clamped = false;
};

/// Reverse-mode differential of weighted_umeyama_solve. The reflection sign
/// is treated as locally constant. `relative_gap` is the relative singular
/// value separation below which a singular pair clamps the gradient.
UmeyamaGradient weighted_umeyama_backward(const WeightedCorrespondences& corr,
                                          const UmeyamaSolution& sol, const Mat3& grad_R,
                                          const Vec3& grad_t, double relative_gap = 1e-6);

/// sum_i sum_j g_ij |T(p_i) - mu_j|^2 / sigma_j^2.
double objective_double_sum(const RigidTransform& T, const Gamma& gamma, const PointCloud& source,
                            const Gmm& target);

/// sum_j (pi_hat_j / sigma_j^2) |T(mu_hat_j) - mu_j|^2.
double objective_single_sum(const RigidTransform& T, const Gmm& source, const Gmm& target);

/// Correspondences of the reduced objective: source means, target means,
/// weights pi_hat_j / sigma_j^2.
WeightedCorrespondences mt_correspondences(const Gmm& source, const Gmm& target,
                                           CentroidWeighting weighting = CentroidWeighting::kObjective);

/// Closed-form transform from matched source/target mixtures.
RigidTransform mt_block(const Gamma& source_gamma, const Gmm& source, const Gmm& target,
                        CentroidWeighting weighting = CentroidWeighting::kObjective);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// E_{x ~ src}[log p(x | tgt)] by ancestral sampling from `src`.
MonteCarloEstimate cross_entropy_mc(const Gmm& src, const Gmm& tgt, std::size_t samples, Rng& rng);

/// Mixture with every mean mapped through T (weights and variances kept).
Gmm transform_gmm(const RigidTransform& T, const Gmm& gmm);

}  // namespace lgmreg
