#include "lgmreg/latent_gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "lgmreg/error.hpp"
#include "lgmreg/mt_solver.hpp"

namespace lgmreg {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

// log pi_j + log N(x | mu_j, sigma_j^2 I) for every j.
void component_log_terms(const Vec3& x, const Gmm& gmm, Eigen::VectorXd& out) {
  const auto J = static_cast<Eigen::Index>(gmm.size());
  out.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const double w = gmm.weights(j);
    out(j) = w > 0.0 ? std::log(w) + log_normal_isotropic(x, gmm.means.row(j).transpose(), gmm.variances(j))
                     : -std::numeric_limits<double>::infinity();
  }
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

void Gmm::validate() const {
  const auto J = weights.size();
  if (J == 0) throw InvalidArgument("mixture must have at least one component");
  if (means.rows() != J || variances.size() != J) throw InvalidArgument("mixture parameter shapes disagree");
  if (!weights.allFinite() || !means.allFinite() || !variances.allFinite())
    throw InvalidArgument("mixture has non-finite parameters");
  if ((weights.array() < 0.0).any()) throw InvalidArgument("mixture weights must be non-negative");
  if (std::abs(weights.sum() - 1.0) > 1e-9) throw InvalidArgument("mixture weights must sum to one");
  if ((variances.array() < kVarianceFloor * (1.0 - 1e-12)).any())
    throw InvalidArgument("mixture variance below floor");
}

void validate_gamma(const Gamma& gamma, double tolerance) {
  if (gamma.rows() == 0 || gamma.cols() == 0) throw InvalidArgument("empty correspondence matrix");
  if (!gamma.allFinite() || (gamma.array() < 0.0).any())
    throw InvalidArgument("correspondence matrix must be finite and non-negative");
  const Eigen::VectorXd rows = gamma.rowwise().sum();
  if ((rows.array() - 1.0).abs().maxCoeff() > tolerance)
    throw InvalidArgument("correspondence matrix rows must sum to one");
}

double log_normal_isotropic(const Vec3& x, const Vec3& mu, double sigma2) {
  return -0.5 * (3.0 * (kLog2Pi + std::log(sigma2)) + (x - mu).squaredNorm() / sigma2);
}

Gamma posterior_gamma(const PointCloud& P, const Gmm& gmm) {
  gmm.validate();
  const auto N = static_cast<Eigen::Index>(P.size());
  const auto J = static_cast<Eigen::Index>(gmm.size());
  Gamma gamma(N, J);
  Eigen::VectorXd terms;
  for (Eigen::Index i = 0; i < N; ++i) {
    component_log_terms(P.point(static_cast<std::size_t>(i)), gmm, terms);
    const double m = terms.maxCoeff();
    if (!std::isfinite(m))
      throw DegenerateMixture("posterior underflow at point " + std::to_string(i) + ": no reachable component");
    const Eigen::ArrayXd e = (terms.array() - m).exp();
    gamma.row(i) = (e / e.sum()).transpose();
  }
  return gamma;
}

Gmm m_theta(const Gamma& gamma, const PointCloud& P) {
  const auto N = static_cast<Eigen::Index>(P.size());
  if (gamma.rows() != N) throw InvalidArgument("correspondence rows must match point count");
  const auto J = gamma.cols();
  const PointMatrix& X = P.matrix();
  const double weight_floor = kWeightFloorPerPoint * static_cast<double>(N);
  const Vec3 centroid = P.centroid();

  Gmm out;
  out.weights.resize(J);
  out.means.resize(J, 3);
  out.variances.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const double mass = gamma.col(j).sum();
    out.weights(j) = mass / static_cast<double>(N);
    if (mass < weight_floor) {
      out.means.row(j) = centroid.transpose();
      out.variances(j) = kVarianceFloor;
      continue;
    }
    const Vec3 mu = (X.transpose() * gamma.col(j)) / mass;
    double spread = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) spread += gamma(i, j) * (X.row(i).transpose() - mu).squaredNorm();
    out.means.row(j) = mu.transpose();
    out.variances(j) = std::max(spread / (3.0 * mass), kVarianceFloor);
  }
  return out;
}

GmmGradient GmmGradient::zeros(std::size_t J) {
  const auto n = static_cast<Eigen::Index>(J);
  return {Eigen::VectorXd::Zero(n), Eigen::MatrixX3d::Zero(n, 3), Eigen::VectorXd::Zero(n)};
}

GmmGradient& GmmGradient::operator+=(const GmmGradient& other) {
  weights += other.weights;
  means += other.means;
  variances += other.variances;
  return *this;
}

Gamma m_theta_backward(const Gamma& gamma, const PointCloud& P, const Gmm& out, const GmmGradient& grad) {
  const auto N = static_cast<Eigen::Index>(P.size());
  const auto J = gamma.cols();
  const PointMatrix& X = P.matrix();
  const double n = static_cast<double>(N);
  const double weight_floor = kWeightFloorPerPoint * n;

  Gamma g(N, J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const double mass = gamma.col(j).sum();
    g.col(j).setConstant(grad.weights(j) / n);
    if (mass < weight_floor) continue;

    const Vec3 mu = out.means.row(j).transpose();
    const Vec3 gmu = grad.means.row(j).transpose() / mass;
    const Eigen::VectorXd d2 = (X.rowwise() - mu.transpose()).rowwise().squaredNorm();
    const double raw_variance = gamma.col(j).dot(d2) / (3.0 * mass);
    g.col(j) += (X.rowwise() - mu.transpose()) * gmu;
    if (raw_variance > kVarianceFloor)
      g.col(j).array() += grad.variances(j) * (d2.array() - 3.0 * raw_variance) / (3.0 * mass);
  }
  return g;
}

double log_likelihood(const PointCloud& P, const Gmm& gmm) {
  gmm.validate();
  double total = 0.0;
  Eigen::VectorXd terms;
  for (std::size_t i = 0; i < P.size(); ++i) {
    component_log_terms(P.point(i), gmm, terms);
    total += log_sum_exp(terms);
  }
  return total;
}

EmFitResult em_fit_traced(const PointCloud& P, std::size_t J, int iters, Rng& rng) {
  const std::size_t N = P.size();
  if (J == 0) throw InvalidArgument("em_fit needs at least one component");
  if (N < J) throw InvalidArgument("em_fit needs at least as many points as components");

  // k-means++ seeding.
  std::vector<std::size_t> seeds;
  seeds.reserve(J);
  std::uniform_int_distribution<std::size_t> pick(0, N - 1);
  seeds.push_back(pick(rng));
  std::vector<double> d2(N);
  for (std::size_t i = 0; i < N; ++i) d2[i] = (P.point(i) - P.point(seeds[0])).squaredNorm();
  while (seeds.size() < J) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t next = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      next = N - 1;
      for (std::size_t i = 0; i < N; ++i) {
        target -= d2[i];
        if (target < 0.0 && d2[i] > 0.0) {
          next = i;
          break;
        }
      }
    } else {
      next = pick(rng);  // all points coincide with a seed
    }
    seeds.push_back(next);
    for (std::size_t i = 0; i < N; ++i) d2[i] = std::min(d2[i], (P.point(i) - P.point(next)).squaredNorm());
  }

  EmFitResult result;
  Gmm& gmm = result.gmm;
  const auto Ji = static_cast<Eigen::Index>(J);
  gmm.weights = Eigen::VectorXd::Constant(Ji, 1.0 / static_cast<double>(J));
  gmm.means.resize(Ji, 3);
  for (std::size_t j = 0; j < J; ++j) gmm.means.row(static_cast<Eigen::Index>(j)) = P.point(seeds[j]).transpose();
  double mean_d2 = 0.0;
  for (double v : d2) mean_d2 += v;
  mean_d2 /= static_cast<double>(N);
  gmm.variances = Eigen::VectorXd::Constant(Ji, std::max(mean_d2, kVarianceFloor));

  double ll = log_likelihood(P, gmm);
  result.log_likelihood_trace.push_back(ll);
  for (int it = 0; it < iters; ++it) {
    gmm = m_theta(posterior_gamma(P, gmm), P);
    const double next = log_likelihood(P, gmm);
    result.log_likelihood_trace.push_back(next);
    ++result.iterations;
    const bool converged = next - ll < 1e-7 * std::max(1.0, std::abs(ll));
    ll = next;
    if (converged) break;
  }
  return result;
}

Gmm em_fit(const PointCloud& P, std::size_t J, int iters, Rng& rng) { return em_fit_traced(P, J, iters, rng).gmm; }

EmRegisterResult em_register_traced(const PointCloud& source, const Gmm& target, const RigidTransform& initial,
                                    int iters) {
  target.validate();
  EmRegisterResult result;
  RigidTransform T = initial;
  result.log_likelihood_trace.push_back(log_likelihood(apply_transform(T, source), target));
  for (int it = 0; it < iters; ++it) {
    const Gamma gamma = posterior_gamma(apply_transform(T, source), target);
    const Gmm source_gmm = m_theta(gamma, source);
    const RigidTransform next = mt_block(gamma, source_gmm, target);
    result.objective_before.push_back(objective_double_sum(T, gamma, source, target));
    result.objective_after.push_back(objective_double_sum(next, gamma, source, target));
    const double angle = rotation_angle(next.R * T.R.transpose());
    const double shift = (next.t - T.t).norm();
    T = next;
    result.log_likelihood_trace.push_back(log_likelihood(apply_transform(T, source), target));
    ++result.iterations;
    if (angle < 1e-6 && shift < 1e-8) break;
  }
  result.transform = T;
  return result;
}

RigidTransform em_register(const PointCloud& source, const Gmm& target, const RigidTransform& initial, int iters) {
  return em_register_traced(source, target, initial, iters).transform;
}

}  // namespace lgmreg
