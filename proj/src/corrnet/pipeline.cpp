#include <algorithm>
#include <cmath>
#include <thread>

#include "lgmreg/corrnet.hpp"
#include "lgmreg/error.hpp"

namespace lgmreg {
namespace {

void split_homogeneous(const Mat4& G, TransformGradient& out) {
  out.R = G.topLeftCorner<3, 3>();
  out.t = G.topRightCorner<3, 1>();
}

// (1/n) sqrt(sum_i |T(p_i) - T_ref(p_i)|^2) and its gradient in (R, t).
double rmse_term(const RigidTransform& T, const RigidTransform& ref, const PointCloud& P, TransformGradient& g) {
  const Mat3 dR = T.R - ref.R;
  const Vec3 dt = T.t - ref.t;
  const PointMatrix E = (P.matrix() * dR.transpose()).rowwise() + dt.transpose();
  const double n = static_cast<double>(P.size());
  const double s = E.squaredNorm();
  const double root = std::sqrt(s);
  if (root > 0.0) {
    const double scale = 1.0 / (n * root);
    g.R += scale * E.transpose() * P.matrix();
    g.t += scale * E.colwise().sum().transpose();
  }
  return root / n;
}

}  // namespace

std::string to_string(LossKind kind) { return kind == LossKind::kMse ? "mse" : "rmse"; }

LossKind parse_loss_kind(const std::string& name) {
  if (name == "mse") return LossKind::kMse;
  if (name == "rmse") return LossKind::kRmse;
  throw InvalidArgument("unknown loss '" + name + "'");
}

double loss(const RigidTransform& T, const RigidTransform& T_inv, const RigidTransform& T_gt) {
  const Mat4 I = Mat4::Identity();
  const Mat4 A = T.homogeneous() * invert(T_gt).homogeneous() - I;
  const Mat4 B = T_inv.homogeneous() * T_gt.homogeneous() - I;
  return A.squaredNorm() + B.squaredNorm();
}

double loss_with_gradient(const RigidTransform& T, const RigidTransform& T_inv, const RigidTransform& T_gt,
                          TransformGradient& grad_T, TransformGradient& grad_T_inv) {
  const Mat4 I = Mat4::Identity();
  const Mat4 Hgt = T_gt.homogeneous();
  const Mat4 Hgt_inv = invert(T_gt).homogeneous();
  const Mat4 A = T.homogeneous() * Hgt_inv - I;
  const Mat4 B = T_inv.homogeneous() * Hgt - I;
  split_homogeneous(2.0 * A * Hgt_inv.transpose(), grad_T);
  split_homogeneous(2.0 * B * Hgt.transpose(), grad_T_inv);
  return A.squaredNorm() + B.squaredNorm();
}

double rmse_loss_with_gradient(const RigidTransform& T, const RigidTransform& T_inv, const RigidTransform& T_gt,
                               const PointCloud& source, const PointCloud& target, TransformGradient& grad_T,
                               TransformGradient& grad_T_inv) {
  grad_T = {};
  grad_T_inv = {};
  return rmse_term(T, T_gt, source, grad_T) + rmse_term(T_inv, invert(T_gt), target, grad_T_inv);
}

PairPrediction predict(const CorrNetParams& params, const PointCloud& source, const PointCloud& target,
                       const FeatureMatrix& source_features, const FeatureMatrix& target_features,
                       CentroidWeighting weighting) {
  PairPrediction out;
  out.source_gamma = forward(params, source_features);
  out.target_gamma = forward(params, target_features);
  out.source_gmm = m_theta(out.source_gamma, source);
  out.target_gmm = m_theta(out.target_gamma, target);
  out.T = weighted_umeyama(mt_correspondences(out.source_gmm, out.target_gmm, weighting));
  out.T_inv = weighted_umeyama(mt_correspondences(out.target_gmm, out.source_gmm, weighting));
  return out;
}

PairPrediction register_pair(const CorrNetParams& params, const PointCloud& source, const PointCloud& target,
                             const PipelineOptions& options) {
  return predict(params, source, target, compute_features(source, options.input_mode, options.neighbors),
                 compute_features(target, options.input_mode, options.neighbors), options.centroid_weighting);
}

TrainingSample make_training_sample(const RegistrationPair& pair, const PipelineOptions& options) {
  return {pair.source, pair.target, compute_features(pair.source, options.input_mode, options.neighbors),
          compute_features(pair.target, options.input_mode, options.neighbors), pair.gt};
}

double sample_loss(const CorrNetParams& params, const TrainingSample& s, const PipelineOptions& options) {
  const PairPrediction p =
      predict(params, s.source, s.target, s.source_features, s.target_features, options.centroid_weighting);
  if (options.loss == LossKind::kMse) return loss(p.T, p.T_inv, s.gt);
  TransformGradient a, b;
  return rmse_loss_with_gradient(p.T, p.T_inv, s.gt, s.source, s.target, a, b);
}

SampleGradient sample_gradient(const CorrNetParams& params, const TrainingSample& s, const PipelineOptions& options) {
  SampleGradient out;
  out.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));

  ForwardCache cache_src, cache_tgt;
  const Gamma gamma_src = forward(params, s.source_features, cache_src);
  const Gamma gamma_tgt = forward(params, s.target_features, cache_tgt);
  const Gmm gmm_src = m_theta(gamma_src, s.source);
  const Gmm gmm_tgt = m_theta(gamma_tgt, s.target);

  const WeightedCorrespondences fwd = mt_correspondences(gmm_src, gmm_tgt, options.centroid_weighting);
  const WeightedCorrespondences rev = mt_correspondences(gmm_tgt, gmm_src, options.centroid_weighting);
  UmeyamaSolution sol_fwd, sol_rev;
  try {
    sol_fwd = weighted_umeyama_solve(fwd);
    sol_rev = weighted_umeyama_solve(rev);
  } catch (const DegenerateConfiguration&) {
    out.degenerate = true;
    return out;
  }

  TransformGradient g_fwd, g_rev;
  out.loss = options.loss == LossKind::kMse
                 ? loss_with_gradient(sol_fwd.transform, sol_rev.transform, s.gt, g_fwd, g_rev)
                 : rmse_loss_with_gradient(sol_fwd.transform, sol_rev.transform, s.gt, s.source, s.target, g_fwd,
                                           g_rev);

  const UmeyamaGradient u_fwd = weighted_umeyama_backward(fwd, sol_fwd, g_fwd.R, g_fwd.t, options.svd_gap);
  const UmeyamaGradient u_rev = weighted_umeyama_backward(rev, sol_rev, g_rev.R, g_rev.t, options.svd_gap);
  if (u_fwd.clamped || u_rev.clamped) {
    out.clamped = true;
    return out;
  }

  const std::size_t J = params.components();
  GmmGradient d_src = GmmGradient::zeros(J);
  GmmGradient d_tgt = GmmGradient::zeros(J);
  // Forward direction: weights pi_src / var_tgt.
  d_src.means += u_fwd.source;
  d_tgt.means += u_fwd.target;
  d_src.weights += u_fwd.weights.cwiseQuotient(gmm_tgt.variances);
  d_tgt.variances -= u_fwd.weights.cwiseProduct(gmm_src.weights).cwiseQuotient(gmm_tgt.variances.cwiseAbs2());
  if (u_fwd.centroid_weights.size() != 0) d_src.weights += u_fwd.centroid_weights;
  // Reverse direction: weights pi_tgt / var_src.
  d_tgt.means += u_rev.source;
  d_src.means += u_rev.target;
  d_tgt.weights += u_rev.weights.cwiseQuotient(gmm_src.variances);
  d_src.variances -= u_rev.weights.cwiseProduct(gmm_tgt.weights).cwiseQuotient(gmm_src.variances.cwiseAbs2());
  if (u_rev.centroid_weights.size() != 0) d_tgt.weights += u_rev.centroid_weights;

  backward(params, cache_src, m_theta_backward(gamma_src, s.source, gmm_src, d_src), out.grad);
  backward(params, cache_tgt, m_theta_backward(gamma_tgt, s.target, gmm_tgt, d_tgt), out.grad);
  return out;
}

BatchGradient grad(const CorrNetParams& params, const std::vector<const TrainingSample*>& batch,
                   const PipelineOptions& options) {
  if (batch.empty()) throw InvalidArgument("gradient batch is empty");
  std::vector<SampleGradient> per(batch.size());
  parallel_for(batch.size(), options.threads,
               [&](std::size_t k) { per[k] = sample_gradient(params, *batch[k], options); });

  BatchGradient out;
  out.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  double total = 0.0;
  for (std::size_t k = 0; k < per.size(); ++k) {
    if (per[k].degenerate) {
      if (!options.skip_degenerate)
        throw DegenerateConfiguration("batch sample " + std::to_string(k) + " has a degenerate alignment");
      ++out.skipped;
      out.warnings.push_back("sample " + std::to_string(k) + " skipped: degenerate alignment");
      continue;
    }
    if (per[k].clamped)
      out.warnings.push_back("sample " + std::to_string(k) + " gradient zeroed: near-repeated singular values");
    total += per[k].loss;
    out.grad += per[k].grad;
    ++out.used;
  }
  if (out.used > 0) {
    out.mean_loss = total / static_cast<double>(out.used);
    out.grad /= static_cast<double>(out.used);
  }
  return out;
}

BatchGradient grad(const CorrNetParams& params, const std::vector<TrainingSample>& batch,
                   const PipelineOptions& options) {
  std::vector<const TrainingSample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& s : batch) ptrs.push_back(&s);
  return grad(params, ptrs, options);
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace lgmreg
