#include "lgmreg/mt_solver.hpp"

#include <cmath>
#include <limits>

#include "lgmreg/error.hpp"

namespace lgmreg {
namespace {

const Eigen::VectorXd& centroid_weights_of(const WeightedCorrespondences& corr) {
  return corr.centroid_weights.size() == 0 ? corr.weights : corr.centroid_weights;
}

double log_mixture_density(const Vec3& x, const Gmm& gmm) {
  double m = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd terms(static_cast<Eigen::Index>(gmm.size()));
  for (Eigen::Index j = 0; j < terms.size(); ++j) {
    terms(j) = gmm.weights(j) > 0.0
                   ? std::log(gmm.weights(j)) + log_normal_isotropic(x, gmm.means.row(j).transpose(), gmm.variances(j))
                   : -std::numeric_limits<double>::infinity();
    m = std::max(m, terms(j));
  }
  if (!std::isfinite(m)) return m;
  return m + std::log((terms.array() - m).exp().sum());
}

}  // namespace

void WeightedCorrespondences::validate() const {
  const auto J = source.rows();
  if (J == 0) throw InvalidArgument("weighted alignment needs at least one pair");
  if (target.rows() != J || weights.size() != J) throw InvalidArgument("weighted alignment shapes disagree");
  if (centroid_weights.size() != 0 && centroid_weights.size() != J)
    throw InvalidArgument("centroid weight count disagrees with pair count");
  if (!source.allFinite() || !target.allFinite() || !weights.allFinite())
    throw InvalidArgument("weighted alignment inputs must be finite");
  if ((weights.array() < 0.0).any() || !(weights.sum() > 0.0))
    throw InvalidArgument("alignment weights must be non-negative with a positive sum");
  const auto& c = centroid_weights_of(*this);
  if (!c.allFinite() || (c.array() < 0.0).any() || !(c.sum() > 0.0))
    throw InvalidArgument("centroid weights must be non-negative with a positive sum");
}

UmeyamaSolution weighted_umeyama_solve(const WeightedCorrespondences& corr) {
  corr.validate();
  const Eigen::VectorXd c = centroid_weights_of(corr) / centroid_weights_of(corr).sum();

  UmeyamaSolution sol;
  sol.source_centroid = corr.source.transpose() * c;
  sol.target_centroid = corr.target.transpose() * c;
  const Eigen::MatrixX3d a = corr.target.rowwise() - sol.target_centroid.transpose();
  const Eigen::MatrixX3d b = corr.source.rowwise() - sol.source_centroid.transpose();
  sol.cross_covariance = a.transpose() * corr.weights.asDiagonal() * b;

  sol.svd = svd3(sol.cross_covariance);
  const Vec3& S = sol.svd.S;
  if (!(S(0) > 0.0) || (S(1) < kDegeneracyRatio * S(0) && S(2) < kDegeneracyRatio * S(0)))
    throw DegenerateConfiguration("weighted alignment is degenerate: means are collinear or coincident");

  const double d = (sol.svd.U * sol.svd.V.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  sol.reflection = Vec3(1.0, 1.0, d);
  sol.transform.R = sol.svd.U * sol.reflection.asDiagonal() * sol.svd.V.transpose();
  sol.transform.t = sol.target_centroid - sol.transform.R * sol.source_centroid;
  return sol;
}

RigidTransform weighted_umeyama(const WeightedCorrespondences& corr) { return weighted_umeyama_solve(corr).transform; }

UmeyamaGradient weighted_umeyama_backward(const WeightedCorrespondences& corr, const UmeyamaSolution& sol,
                                          const Mat3& grad_R, const Vec3& grad_t, double relative_gap) {
  const auto J = corr.size();
  const bool shared = corr.centroid_weights.size() == 0;
  UmeyamaGradient g;
  g.source = Eigen::MatrixX3d::Zero(J, 3);
  g.target = Eigen::MatrixX3d::Zero(J, 3);
  g.weights = Eigen::VectorXd::Zero(J);
  if (!shared) g.centroid_weights = Eigen::VectorXd::Zero(J);

  const Mat3& R = sol.transform.R;
  const Mat3& U = sol.svd.U;
  const Mat3& V = sol.svd.V;
  const Vec3& S = sol.svd.S;
  const Vec3& D = sol.reflection;

  // t = d_c - R s_c
  const Mat3 gR = grad_R - grad_t * sol.source_centroid.transpose();
  Vec3 g_target_c = grad_t;
  Vec3 g_source_c = -R.transpose() * grad_t;

  // R = U D V^T as a function of M = U S V^T. With P = U^T dM V the rotation
  // moves by dR = U X V^T where X_ij = alpha_ij P_ij + beta_ij P_ji.
  const Mat3 Gh = U.transpose() * gR * V;
  Mat3 alpha = Mat3::Zero();
  Mat3 beta = Mat3::Zero();
  const double floor = relative_gap * S(0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      if (D(i) == D(j)) {
        const double den = S(i) + S(j);
        if (den <= floor) {
          g.clamped = true;
          return g;
        }
        alpha(i, j) = D(i) / den;
        beta(i, j) = -D(i) / den;
      } else {
        const double den = S(j) - S(i);
        if (std::abs(den) <= floor) {
          g.clamped = true;
          return g;
        }
        alpha(i, j) = -D(i) / den;
        beta(i, j) = -D(i) / den;
      }
    }
  }
  Mat3 gP = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) gP(i, j) = Gh(i, j) * alpha(i, j) + Gh(j, i) * beta(j, i);
  const Mat3 gM = U * gP * V.transpose();

  // M = sum_j w_j a_j b_j^T, a_j = d_j - d_c, b_j = s_j - s_c.
  const Eigen::VectorXd& cw = centroid_weights_of(corr);
  const double csum = cw.sum();
  const Eigen::VectorXd c = cw / csum;
  Vec3 sum_ga = Vec3::Zero();
  Vec3 sum_gb = Vec3::Zero();
  for (Eigen::Index j = 0; j < J; ++j) {
    const Vec3 a = corr.target.row(j).transpose() - sol.target_centroid;
    const Vec3 b = corr.source.row(j).transpose() - sol.source_centroid;
    const double w = corr.weights(j);
    g.weights(j) += a.dot(gM * b);
    const Vec3 ga = w * (gM * b);
    const Vec3 gb = w * (gM.transpose() * a);
    g.target.row(j) += ga.transpose();
    g.source.row(j) += gb.transpose();
    sum_ga += ga;
    sum_gb += gb;
  }
  g_target_c -= sum_ga;
  g_source_c -= sum_gb;

  // Centroids are c-weighted averages with c = cw / sum(cw).
  Eigen::VectorXd gc(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    g.target.row(j) += c(j) * g_target_c.transpose();
    g.source.row(j) += c(j) * g_source_c.transpose();
    gc(j) = corr.target.row(j).dot(g_target_c) + corr.source.row(j).dot(g_source_c);
  }
  const double mean_gc = c.dot(gc);
  const Eigen::VectorXd g_cw = (gc.array() - mean_gc) / csum;
  if (shared) {
    g.weights += g_cw;
  } else {
    g.centroid_weights = g_cw;
  }
  return g;
}

double objective_double_sum(const RigidTransform& T, const Gamma& gamma, const PointCloud& source,
                            const Gmm& target) {
  const auto N = static_cast<Eigen::Index>(source.size());
  const auto J = static_cast<Eigen::Index>(target.size());
  if (gamma.rows() != N || gamma.cols() != J) throw InvalidArgument("correspondence shape disagrees with inputs");
  double total = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    const Vec3 x = T(source.point(static_cast<std::size_t>(i)));
    for (Eigen::Index j = 0; j < J; ++j)
      total += gamma(i, j) * (x - target.means.row(j).transpose()).squaredNorm() / target.variances(j);
  }
  return total;
}

double objective_single_sum(const RigidTransform& T, const Gmm& source, const Gmm& target) {
  if (source.size() != target.size()) throw InvalidArgument("mixtures must have the same number of components");
  double total = 0.0;
  for (Eigen::Index j = 0; j < source.weights.size(); ++j) {
    const Vec3 r = T(source.means.row(j).transpose()) - target.means.row(j).transpose();
    total += source.weights(j) / target.variances(j) * r.squaredNorm();
  }
  return total;
}

WeightedCorrespondences mt_correspondences(const Gmm& source, const Gmm& target, CentroidWeighting weighting) {
  if (source.size() != target.size()) throw InvalidArgument("mixtures must have the same number of components");
  WeightedCorrespondences corr;
  corr.source = source.means;
  corr.target = target.means;
  corr.weights = source.weights.cwiseQuotient(target.variances);
  if (weighting == CentroidWeighting::kMixture) corr.centroid_weights = source.weights;
  return corr;
}

RigidTransform mt_block(const Gamma& source_gamma, const Gmm& source, const Gmm& target, CentroidWeighting weighting) {
  if (source_gamma.cols() != static_cast<Eigen::Index>(source.size()))
    throw InvalidArgument("correspondence columns must match component count");
  return weighted_umeyama(mt_correspondences(source, target, weighting));
}

MonteCarloEstimate cross_entropy_mc(const Gmm& src, const Gmm& tgt, std::size_t samples, Rng& rng) {
  if (samples == 0) throw InvalidArgument("cross_entropy_mc needs at least one sample");
  src.validate();
  tgt.validate();
  std::discrete_distribution<std::size_t> component(src.weights.data(), src.weights.data() + src.weights.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto j = static_cast<Eigen::Index>(component(rng));
    const double sigma = std::sqrt(src.variances(j));
    const Vec3 x = src.means.row(j).transpose() + sigma * Vec3(normal(rng), normal(rng), normal(rng));
    const double v = log_mixture_density(x, tgt);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(samples);
  MonteCarloEstimate est;
  est.mean = sum / n;
  const double var = samples > 1 ? std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1.0)) : 0.0;
  est.std_error = std::sqrt(var / n);
  return est;
}

Gmm transform_gmm(const RigidTransform& T, const Gmm& gmm) {
  Gmm out = gmm;
  out.means = (gmm.means * T.R.transpose()).rowwise() + T.t.transpose();
  return out;
}

}  // namespace lgmreg
