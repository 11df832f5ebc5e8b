// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fails.

#include <Eigen/Geometry>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "lgmreg/corrnet.hpp"
#include "lgmreg/datagen.hpp"
#include "lgmreg/evalbench.hpp"
#include "lgmreg/features.hpp"
#include "lgmreg/latent_gmm.hpp"
#include "lgmreg/mt_solver.hpp"
#include "../support.hpp"

using namespace lgmreg;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail, double seconds) {
  std::printf("%s %2d %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, name, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

void info(const std::string& line) {
  std::printf("     info: %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double weighted_objective(const RigidTransform& T, const WeightedCorrespondences& c) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j)
    s += c.weights(j) * (T(c.source.row(j).transpose()) - c.target.row(j).transpose()).squaredNorm();
  return s;
}

WeightedCorrespondences random_correspondences(Eigen::Index J, Rng& rng) {
  std::uniform_real_distribution<double> u(0.1, 2.0);
  WeightedCorrespondences c;
  c.source.resize(J, 3);
  c.target.resize(J, 3);
  c.weights.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    c.source.row(j) = test::gaussian_vec(rng).transpose();
    c.target.row(j) = test::gaussian_vec(rng).transpose();
    c.weights(j) = u(rng);
  }
  return c;
}

// Nearly planar source mirrored through its plane: the unconstrained
// orthogonal fit is a reflection.
WeightedCorrespondences reflected_planar(Rng& rng) {
  WeightedCorrespondences c;
  const Eigen::Index J = 8;
  c.source.resize(J, 3);
  c.target.resize(J, 3);
  c.weights.resize(J);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::normal_distribution<double> g;
  const Mat3 Q = random_rotation(rng);
  const Vec3 shift = test::gaussian_vec(rng);
  for (Eigen::Index j = 0; j < J; ++j) {
    const Vec3 p(g(rng), g(rng), 0.05 * g(rng));
    c.source.row(j) = p.transpose();
    c.target.row(j) = (Q * Vec3(p.x(), p.y(), -p.z()) + shift).transpose();
    c.weights(j) = u(rng);
  }
  return c;
}

void reduction_identity() {
  const auto t0 = Clock::now();
  Rng rng = make_rng(1, "acceptance");
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const PointCloud P = test::gaussian_cloud(64, rng);
    const Gamma g = test::random_gamma(64, 8, rng);
    const Gmm target = test::random_gmm(8, rng);
    const Gmm source = m_theta(g, P);
    double lo = INFINITY, hi = -INFINITY, scale = 0.0;
    for (int t = 0; t < 20; ++t) {
      const RigidTransform T = test::random_transform(rng, 2.0);
      const double d = objective_double_sum(T, g, P, target);
      const double diff = d - 64.0 * objective_single_sum(T, source, target);
      lo = std::min(lo, diff);
      hi = std::max(hi, diff);
      scale = std::max(scale, std::abs(d));
    }
    worst = std::max(worst, (hi - lo) / scale);
  }
  const double s = seconds_since(t0);
  report(1, "reduction identity", worst < 1e-8 && s < 5.0,
         fmt("max relative spread %.3g over 100 instances x 20 transforms (< 1e-8, < 5 s)", worst), s);
}

void solver_optimality() {
  const auto t0 = Clock::now();
  Rng rng = make_rng(2, "acceptance");
  int beaten = 0, bad_det = 0, raw_reflections = 0;
  for (int k = 0; k < 100; ++k) {
    const bool adversarial = k < 10;
    const WeightedCorrespondences c = adversarial ? reflected_planar(rng) : random_correspondences(16, rng);
    const UmeyamaSolution sol = weighted_umeyama_solve(c);
    if (adversarial && sol.reflection(2) == -1.0) ++raw_reflections;
    if (std::abs(sol.transform.R.determinant() - 1.0) > 1e-12) ++bad_det;
    const double best = weighted_objective(sol.transform, c);
    const double slack = 1e-12 * std::max(1.0, best);
    for (int t = 0; t < 10000; ++t) {
      // Half global draws, half perturbations near the solution.
      RigidTransform T;
      if (t % 2 == 0) {
        T = test::random_transform(rng, 2.0);
      } else {
        std::uniform_real_distribution<double> a(1e-6, 0.2);
        T = {axis_angle(test::gaussian_vec(rng), a(rng)) * sol.transform.R,
             sol.transform.t + test::gaussian_vec(rng, 0.05)};
      }
      beaten += weighted_objective(T, c) < best - slack;
    }
  }
  const double s = seconds_since(t0);
  report(2, "solver optimality", beaten == 0 && bad_det == 0 && raw_reflections == 10 && s < 30.0,
         fmt("beaten %d of 1e6 trials, det != +1 in %d, raw reflections %d/10 (< 30 s)", beaten, bad_det,
             raw_reflections),
         s);
}

void em_monotonicity() {
  const auto t0 = Clock::now();
  int violations = 0;
  double worst_drop = 0.0;
  std::size_t steps = 0;
  for (std::uint64_t run = 0; run < 50; ++run) {
    const ShapeFamily family = all_shape_families()[run % kShapeFamilyCount];
    const PointCloud P = sample_shape(ShapeSpec::random(family, run), 256);
    Rng rng = make_rng(run, "em_fit");
    const EmFitResult r = em_fit_traced(P, 8, 100, rng);
    for (std::size_t i = 1; i < r.log_likelihood_trace.size(); ++i) {
      const double drop = r.log_likelihood_trace[i - 1] - r.log_likelihood_trace[i];
      worst_drop = std::max(worst_drop, drop);
      violations += drop > 1e-9;
      ++steps;
    }
  }
  report(3, "EM monotonicity", violations == 0,
         fmt("%d decreases beyond 1e-9 in %zu steps over 50 runs, largest drop %.3g", violations, steps, worst_drop),
         seconds_since(t0));
}

void gradient_fidelity() {
  const auto t0 = Clock::now();
  PipelineOptions opt;
  std::size_t total = 0, within = 0;
  double worst = 0.0;
  int clamped = 0;
  for (std::uint64_t state = 0; state < 5; ++state) {
    Rng rng = make_rng(state, "acceptance_fd");
    CorrNetParams p = CorrNetParams::initialize(feature_dimension(opt.input_mode, opt.neighbors), 16, rng);
    const ShapeFamily family = all_shape_families()[(3 * state + 1) % kShapeFamilyCount];
    const PointCloud P = sample_shape(ShapeSpec::random(family, state), 96);
    const TrainingSample sample = make_training_sample(make_pair(P, kProtocolNoiseVariance, rng), opt);
    const SampleGradient g = sample_gradient(p, sample, opt);
    if (g.degenerate || g.clamped) {
      ++clamped;
      continue;
    }
    std::uniform_int_distribution<Eigen::Index> pick(0, static_cast<Eigen::Index>(p.size()) - 1);
    const double h = 1e-5;
    for (int k = 0; k < 40; ++k) {
      const Eigen::Index c = pick(rng);
      const double keep = p.values()(c);
      p.values()(c) = keep + h;
      const double up = sample_loss(p, sample, opt);
      p.values()(c) = keep - h;
      const double down = sample_loss(p, sample, opt);
      p.values()(c) = keep;
      const double e = test::rel_err((up - down) / (2 * h), g.grad(c));
      worst = std::max(worst, e);
      within += e < 1e-4;
      ++total;
    }
  }
  const double s = seconds_since(t0);
  const bool ok = clamped == 0 && total == 200 && within >= 190 && worst < 1e-2 && s < 120.0;
  report(4, "gradient fidelity", ok,
         fmt("%zu/%zu coordinates within 1e-4 (need 190), worst %.3g (< 1e-2), unusable states %d (< 120 s)", within,
             total, worst, clamped),
         s);
}

void pose_invariance() {
  const auto t0 = Clock::now();
  Rng rng = make_rng(5, "acceptance");
  const PointCloud P = sample_shape(ShapeSpec::random(ShapeFamily::kLamp, 5), 256);
  const CorrNetParams params = CorrNetParams::initialize(4 * kDefaultNeighbors, 16, rng);
  const FeatureMatrix F = invariant_features(P, kDefaultNeighbors);
  const Gamma G = forward(params, F);
  double feature_dev = 0.0, gamma_dev = 0.0;
  for (int k = 0; k < 100; ++k) {
    const PointCloud Q = apply_transform(RigidTransform::rotation(random_rotation(rng)), P);
    const FeatureMatrix Fq = invariant_features(Q, kDefaultNeighbors);
    feature_dev = std::max(feature_dev, (Fq - F).cwiseAbs().maxCoeff());
    gamma_dev = std::max(gamma_dev, (forward(params, Fq) - G).cwiseAbs().maxCoeff());
  }
  report(5, "pose invariance", feature_dev <= 1e-6 && gamma_dev <= 1e-6,
         fmt("max feature change %.3g, max correspondence change %.3g over 100 rotations (<= 1e-6)", feature_dev,
             gamma_dev),
         seconds_since(t0));
}

struct TrainedRun {
  PairDataset data;
  CorrNetParams params;
  EvalResult latent;
  double seconds = 0.0;
};

TrainConfig desk_config() {
  TrainConfig c;
  c.epochs = 30;
  c.batch_size = 16;
  c.components = 16;
  c.seed = 7;
  c.pipeline.threads = 1;
  return c;
}

MethodOptions latent_options(const CorrNetParams& params) {
  MethodOptions m;
  m.params = &params;
  return m;
}

TrainedRun train_and_evaluate(Protocol protocol) {
  const auto t0 = Clock::now();
  TrainedRun run;
  run.data = build_dataset(protocol, {500, 100, 256}, 2024);
  const TrainConfig config = desk_config();
  const TrainResult tr = train(run.data.train, config);
  run.params = tr.params;
  info(fmt("%s training: best epoch %zu, final train loss %.4g, best val loss %.4g", to_string(protocol).c_str(),
           tr.best_epoch, tr.history.back().train_loss,
           tr.best_epoch > 0 ? tr.history[tr.best_epoch - 1].val_loss : NAN));
  run.latent = evaluate(run.data.test, Method::kLatent, latent_options(run.params), EvalOptions{});
  run.seconds = seconds_since(t0);
  info(fmt("%s pipeline: recall %.3f, mean rmse %.4g; conventional rmse: recall %.3f, mean %.4g; failures %zu",
           to_string(protocol).c_str(), run.latent.recall, run.latent.mean_rmse, run.latent.recall_conventional,
           run.latent.mean_rmse_conventional, run.latent.failures));
  return run;
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  reduction_identity();
  solver_optimality();
  em_monotonicity();
  gradient_fidelity();
  pose_invariance();

  const TrainedRun clean = train_and_evaluate(Protocol::kClean);
  report(6, "clean protocol", clean.latent.recall >= 0.9 && clean.latent.mean_rmse <= 0.05 && clean.seconds < 1200.0,
         fmt("recall@0.2 %.3f (>= 0.90), mean rmse %.4g (<= 0.05) (< 1200 s)", clean.latent.recall,
             clean.latent.mean_rmse),
         clean.seconds);

  const TrainedRun noisy = train_and_evaluate(Protocol::kNoisy);
  report(7, "noise robustness", noisy.latent.recall >= 0.8 * clean.latent.recall,
         fmt("noisy recall %.3f vs 0.8 x clean %.3f", noisy.latent.recall, 0.8 * clean.latent.recall), noisy.seconds);

  const TrainedRun unseen = train_and_evaluate(Protocol::kUnseen);
  report(8, "unseen families", unseen.latent.recall >= 0.85 * noisy.latent.recall,
         fmt("unseen recall %.3f vs 0.85 x seen (noisy, all families) %.3f", unseen.latent.recall,
             0.85 * noisy.latent.recall),
         unseen.seconds);

  {
    const auto t0 = Clock::now();
    const EvalResult icp = evaluate(clean.data.test, Method::kIcp, MethodOptions{}, EvalOptions{});
    info(fmt("icp from identity: conventional rmse recall %.3f, mean %.4g", icp.recall_conventional,
             icp.mean_rmse_conventional));
    report(9, "baseline contrast", icp.recall <= 0.6 && icp.recall < clean.latent.recall,
           fmt("icp recall %.3f (<= 0.6) vs pipeline %.3f (strictly greater)", icp.recall, clean.latent.recall),
           seconds_since(t0));
  }

  {
    const auto t0 = Clock::now();
    const std::vector<std::size_t> sizes{1000, 2000, 3000, 4000, 5000};
    const auto rows = bench_runtime(Method::kLatent, sizes, 5, latent_options(clean.params));
    std::vector<double> x, y;
    std::string ms;
    for (const BenchRow& r : rows) {
      x.push_back(static_cast<double>(r.points));
      y.push_back(r.mean_ms);
      ms += fmt(" %.1f", r.mean_ms);
    }
    const LinearFit fit = linear_fit(x, y);
    report(10, "runtime linearity", fit.r2 > 0.95, fmt("R^2 %.4f (> 0.95), ms per size:%s", fit.r2, ms.c_str()),
           seconds_since(t0));
  }

  {
    const TrainedRun partial = train_and_evaluate(Protocol::kPartial);
    const auto t0 = Clock::now();
    MethodOptions refined = latent_options(partial.params);
    refined.refine = true;
    const EvalResult chained = evaluate(partial.data.test, Method::kLatent, refined, EvalOptions{});
    const EvalResult icp = evaluate(partial.data.test, Method::kIcp, MethodOptions{}, EvalOptions{});
    info(fmt("partial, conventional rmse recall: pipeline %.3f, refined %.3f, icp %.3f",
             partial.latent.recall_conventional, chained.recall_conventional, icp.recall_conventional));
    report(11, "partial overlap", chained.recall >= partial.latent.recall && chained.recall >= icp.recall,
           fmt("refined recall %.3f vs pipeline %.3f and icp %.3f", chained.recall, partial.latent.recall, icp.recall),
           partial.seconds + seconds_since(t0));
  }

  {
    const auto t0 = Clock::now();
    Rng rng = make_rng(12, "acceptance");
    const PointCloud P = test::gaussian_cloud(1000, rng);
    const RigidTransform G = test::random_transform(rng);
    const RigidTransform off = compose(RigidTransform::translation(Vec3(0.0, 0.0, 0.2)), G);
    const double e = rmse(off, G, P, 500, rng);
    const double expected = 0.2 / std::sqrt(500.0);
    report(12, "metric form", std::abs(e - expected) <= 1e-12,
           fmt("rmse %.17g vs 0.2/sqrt(500) = %.17g", e, expected), seconds_since(t0));
  }

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
