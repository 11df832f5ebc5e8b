#include "lgmreg/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "lgmreg/error.hpp"
#include "lgmreg/io.hpp"
#include "lgmreg/kdtree.hpp"
#include "lgmreg/latent_gmm.hpp"
#include "lgmreg/mt_solver.hpp"

namespace lgmreg {
namespace {

std::vector<std::size_t> sample_indices(std::size_t N, std::size_t n, Rng& rng) {
  if (n == 0 || n > N) throw InvalidArgument("rmse sample size must lie in [1, N]");
  std::vector<std::size_t> idx(N);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first n entries are a uniform sample.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, N - 1)(rng);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

double squared_error_sum(const RigidTransform& T, const RigidTransform& T_gt, const PointCloud& P,
                         const std::vector<std::size_t>& idx) {
  double sum = 0.0;
  for (std::size_t i : idx) {
    const Vec3 p = P.point(i);
    sum += (T(p) - T_gt(p)).squaredNorm();
  }
  return sum;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

double rmse(const RigidTransform& T, const RigidTransform& T_gt, const PointCloud& P, std::size_t n, Rng& rng) {
  const auto idx = sample_indices(P.size(), n, rng);
  return std::sqrt(squared_error_sum(T, T_gt, P, idx)) / static_cast<double>(n);
}

double rmse_conventional(const RigidTransform& T, const RigidTransform& T_gt, const PointCloud& P, std::size_t n,
                         Rng& rng) {
  const auto idx = sample_indices(P.size(), n, rng);
  return std::sqrt(squared_error_sum(T, T_gt, P, idx) / static_cast<double>(n));
}

double recall(const std::vector<double>& errors, double tau) {
  if (errors.empty()) throw InvalidArgument("recall of an empty error list");
  const auto hits = std::count_if(errors.begin(), errors.end(), [&](double e) { return e < tau; });
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

std::vector<CdfPoint> error_cdf(const std::vector<double>& errors) {
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  std::vector<CdfPoint> cdf;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) cdf.push_back({sorted[i], static_cast<double>(i + 1) / n});
  return cdf;
}

IcpResult icp_point2point_traced(const PointCloud& source, const PointCloud& target, const RigidTransform& initial,
                                 int iters) {
  const KdTree tree(target);
  IcpResult result;
  result.transform = initial;
  const auto N = static_cast<Eigen::Index>(source.size());
  WeightedCorrespondences corr;
  corr.source = source.matrix();
  corr.target.resize(N, 3);
  corr.weights = Eigen::VectorXd::Ones(N);
  for (int it = 0; it < iters; ++it) {
    for (Eigen::Index i = 0; i < N; ++i) {
      const Neighbor nb = tree.nearest(result.transform(source.point(static_cast<std::size_t>(i))));
      corr.target.row(i) = target.point(nb.index).transpose();
    }
    RigidTransform next;
    try {
      next = weighted_umeyama(corr);
    } catch (const DegenerateConfiguration&) {
      break;
    }
    const double angle = rotation_angle(next.R * result.transform.R.transpose());
    result.transform = next;
    ++result.iterations;
    if (angle < 1e-6) {
      result.converged = true;
      break;
    }
  }
  return result;
}

RigidTransform icp_point2point(const PointCloud& source, const PointCloud& target, const RigidTransform& initial,
                               int iters) {
  return icp_point2point_traced(source, target, initial, iters).transform;
}

RigidTransform refine(const RigidTransform& global, const PointCloud& source, const PointCloud& target, int iters) {
  return icp_point2point(source, target, global, iters);
}

std::string to_string(Method method) {
  switch (method) {
    case Method::kLatent: return "latent";
    case Method::kEm: return "em";
    case Method::kIcp: return "icp";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kLatent, Method::kEm, Method::kIcp})
    if (name == to_string(m)) return m;
  throw InvalidArgument("unknown method '" + name + "' (expected latent, em or icp)");
}

RigidTransform run_method(Method method, const PointCloud& source, const PointCloud& target,
                          const MethodOptions& options) {
  RigidTransform T;
  switch (method) {
    case Method::kLatent:
      if (options.params == nullptr) throw InvalidArgument("the latent method needs network parameters");
      T = register_pair(*options.params, source, target, options.pipeline).T;
      break;
    case Method::kEm: {
      Rng rng = make_rng(options.seed, "em_fit");
      const Gmm target_gmm = em_fit(target, std::min(options.em_components, target.size()), options.em_iters, rng);
      T = em_register(source, target_gmm, RigidTransform::identity(), options.em_iters);
      break;
    }
    case Method::kIcp:
      T = icp_point2point(source, target, RigidTransform::identity(), options.icp_iters);
      break;
  }
  if (options.refine && method != Method::kIcp) T = refine(T, source, target, options.icp_iters);
  return T;
}

std::vector<double> EvalResult::errors() const {
  std::vector<double> out;
  for (const auto& p : pairs) out.push_back(p.rmse);
  return out;
}

EvalResult evaluate(const std::vector<RegistrationPair>& pairs, Method method, const MethodOptions& options,
                    const EvalOptions& eval) {
  if (pairs.empty()) throw InvalidArgument("evaluation split is empty");
  EvalResult result;
  result.method = method;
  result.tau = eval.tau;
  result.pairs.resize(pairs.size());
  parallel_for(pairs.size(), eval.threads, [&](std::size_t k) {
    const RegistrationPair& pair = pairs[k];
    PairRecord& rec = result.pairs[k];
    rec.id = k;
    RigidTransform T = pair.gt;
    const auto start = std::chrono::steady_clock::now();
    if (!eval.oracle) {
      try {
        T = run_method(method, pair.source, pair.target, options);
      } catch (const DegenerateConfiguration&) {
        T = RigidTransform::identity();
        rec.failed = true;
      } catch (const DegenerateMixture&) {
        T = RigidTransform::identity();
        rec.failed = true;
      }
    }
    rec.ms = elapsed_ms(start);
    const std::size_t n = std::min(eval.rmse_samples, pair.source.size());
    Rng rng = make_rng(options.seed, "rmse", k);
    Rng rng_conv = rng;
    rec.rmse = rmse(T, pair.gt, pair.source, n, rng);
    rec.rmse_conventional = rmse_conventional(T, pair.gt, pair.source, n, rng_conv);
  });

  std::vector<double> conv;
  for (const auto& rec : result.pairs) {
    if (rec.failed) ++result.failures;
    conv.push_back(rec.rmse_conventional);
  }
  const std::vector<double> errs = result.errors();
  result.recall = recall(errs, eval.tau);
  result.mean_rmse = std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
  result.recall_conventional = recall(conv, eval.tau);
  result.mean_rmse_conventional = std::accumulate(conv.begin(), conv.end(), 0.0) / static_cast<double>(conv.size());
  result.cdf = error_cdf(errs);
  return result;
}

std::vector<BenchRow> bench_runtime(Method method, const std::vector<std::size_t>& sizes, std::size_t repeats,
                                    const MethodOptions& options) {
  if (repeats == 0) throw InvalidArgument("bench needs at least one repeat");
  MethodOptions opt = options;
  opt.pipeline.threads = 1;
  std::vector<BenchRow> rows;
  for (std::size_t N : sizes) {
    Rng rng = make_rng(options.seed, "bench", N);
    const ShapeSpec spec = ShapeSpec::random(ShapeFamily::kCompositeTwoPart, rng());
    const RegistrationPair pair = make_pair(sample_shape(spec, N), 0.0, rng);
    run_method(method, pair.source, pair.target, opt);  // warm-up
    std::vector<double> ms;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      run_method(method, pair.source, pair.target, opt);
      ms.push_back(elapsed_ms(start));
    }
    const double mean = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
    double var = 0.0;
    for (double v : ms) var += (v - mean) * (v - mean);
    const double sd = ms.size() > 1 ? std::sqrt(var / static_cast<double>(ms.size() - 1)) : 0.0;
    rows.push_back({method, N, mean, sd, repeats});
  }
  return rows;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("linear fit needs at least two (x, y) pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("linear fit needs distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

void write_per_pair_csv(const std::filesystem::path& path, const std::vector<EvalResult>& results) {
  auto out = open_csv(path);
  out << "pair_id,method,rmse,rmse_conventional,ms,failed\n";
  for (const auto& r : results)
    for (const auto& p : r.pairs)
      out << p.id << ',' << to_string(r.method) << ',' << io::format_double(p.rmse) << ','
          << io::format_double(p.rmse_conventional) << ',' << io::format_double(p.ms) << ',' << (p.failed ? 1 : 0)
          << '\n';
}

void write_cdf_csv(const std::filesystem::path& path, const std::vector<CdfPoint>& cdf) {
  auto out = open_csv(path);
  out << "x,y\n";
  for (const auto& c : cdf) out << io::format_double(c.x) << ',' << io::format_double(c.y) << '\n';
}

void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchRow>& rows) {
  auto out = open_csv(path);
  out << "method,N,ms,std_ms,repeats\n";
  for (const auto& r : rows)
    out << to_string(r.method) << ',' << r.points << ',' << io::format_double(r.mean_ms) << ','
        << io::format_double(r.std_ms) << ',' << r.repeats << '\n';
}

}  // namespace lgmreg
