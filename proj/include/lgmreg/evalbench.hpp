#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lgmreg/corrnet.hpp"
#include "lgmreg/datagen.hpp"
#include "lgmreg/geom3d.hpp"

namespace lgmreg {

inline constexpr std::size_t kRmseSamples = 500;
inline constexpr double kRecallThreshold = 0.2;
inline constexpr int kDefaultIcpIterations = 50;

/// Registration error on n points drawn without replacement from `P`:
///   (1/n) sqrt(sum_i |T(p_i) - T_gt(p_i)|^2).
/// The 1/n sits outside the root, so the value is the conventional RMSE
/// divided by sqrt(n); thresholds are calibrated to this form.
/// Throws InvalidArgument if n == 0 or n > N.
double rmse(const RigidTransform& T, const RigidTransform& T_gt, const PointCloud& P, std::size_t n, Rng& rng);
/// sqrt((1/n) sum_i |T(p_i) - T_gt(p_i)|^2) on the same kind of sample.
double rmse_conventional(const RigidTransform& T, const RigidTransform& T_gt, const PointCloud& P, std::size_t n,
                         Rng& rng);

/// Fraction of errors strictly below tau. Throws InvalidArgument on an empty list.
double recall(const std::vector<double>& errors, double tau);

struct CdfPoint {
  double x;
  double y;
};
/// Empirical CDF: sorted errors against (i + 1) / n. Non-decreasing, ends at 1.
std::vector<CdfPoint> error_cdf(const std::vector<double>& errors);

struct IcpResult {
  RigidTransform transform;
  int iterations = 0;
  bool converged = false;
};

/// Point-to-point ICP: nearest target point per transformed source point
/// (k-d tree), then an unweighted rigid fit. Stops when an update rotates by
/// less than 1e-6 rad or after `iters` iterations.
IcpResult icp_point2point_traced(const PointCloud& source, const PointCloud& target, const RigidTransform& initial,
                                 int iters = kDefaultIcpIterations);
RigidTransform icp_point2point(const PointCloud& source, const PointCloud& target, const RigidTransform& initial,
                               int iters = kDefaultIcpIterations);

/// Local refinement of a global estimate (ICP started from `global`).
RigidTransform refine(const RigidTransform& global, const PointCloud& source, const PointCloud& target,
                      int iters = kDefaultIcpIterations);

enum class Method { kLatent, kEm, kIcp };
std::string to_string(Method method);
/// Accepts "latent", "em", "icp".
Method parse_method(const std::string& name);

struct MethodOptions {
  /// Required for Method::kLatent.
  const CorrNetParams* params = nullptr;
  PipelineOptions pipeline;
  std::size_t em_components = 16;
  int em_iters = 100;
  int icp_iters = kDefaultIcpIterations;
  /// Chain ICP after the method's own estimate.
  bool refine = false;
  std::uint64_t seed = 0;
};

/// Source-to-target estimate by `method`, starting from identity for the
/// local methods. Propagates DegenerateConfiguration.
RigidTransform run_method(Method method, const PointCloud& source, const PointCloud& target,
                          const MethodOptions& options);

struct PairRecord {
  std::size_t id = 0;
  double rmse = 0.0;
  double rmse_conventional = 0.0;
  double ms = 0.0;
  bool failed = false;  // method threw; identity was scored instead
};

struct EvalResult {
  Method method = Method::kLatent;
  std::vector<PairRecord> pairs;
  double tau = kRecallThreshold;
  double recall = 0.0;
  double mean_rmse = 0.0;
  double recall_conventional = 0.0;
  double mean_rmse_conventional = 0.0;
  std::vector<CdfPoint> cdf;
  std::size_t failures = 0;

  std::vector<double> errors() const;
};

struct EvalOptions {
  std::size_t rmse_samples = kRmseSamples;
  double tau = kRecallThreshold;
  /// Score the ground truth itself (harness check).
  bool oracle = false;
  std::size_t threads = 1;
};

/// Runs `method` on every pair and scores it. Each pair samples its RMSE
/// points from its own stream (seed, "rmse", index); clouds smaller than
/// rmse_samples use all of their points. Throws InvalidArgument on an empty split.
EvalResult evaluate(const std::vector<RegistrationPair>& pairs, Method method, const MethodOptions& options,
                    const EvalOptions& eval = {});

struct BenchRow {
  Method method = Method::kLatent;
  std::size_t points = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  std::size_t repeats = 0;
};

/// Mean wall-clock time per registration for each N, after one warm-up run,
/// on a seeded random pair. Single-threaded regardless of options.
std::vector<BenchRow> bench_runtime(Method method, const std::vector<std::size_t>& sizes, std::size_t repeats,
                                    const MethodOptions& options);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

void write_per_pair_csv(const std::filesystem::path& path, const std::vector<EvalResult>& results);
void write_cdf_csv(const std::filesystem::path& path, const std::vector<CdfPoint>& cdf);
void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchRow>& rows);

}  // namespace lgmreg
