#include "lgmreg/svd3.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace lgmreg {
namespace {

constexpr int kMaxSweeps = 60;
constexpr double kOffDiagonalTol = 1e-14;

// Unit vector orthogonal to u.
Vec3 any_orthogonal(const Vec3& u) {
  const Vec3 axis = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return u.cross(axis).normalized();
}

}  // namespace

Svd3 svd3(const Mat3& M) {
  Mat3 A = M;
  Mat3 V = Mat3::Identity();

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double alpha = A.col(p).squaredNorm();
        const double beta = A.col(q).squaredNorm();
        const double gamma = A.col(p).dot(A.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= kOffDiagonalTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int r = 0; r < 3; ++r) {
          const double ap = A(r, p);
          const double aq = A(r, q);
          A(r, p) = c * ap - s * aq;
          A(r, q) = s * ap + c * aq;
          const double vp = V(r, p);
          const double vq = V(r, q);
          V(r, p) = c * vp - s * vq;
          V(r, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::array<double, 3> norms{A.col(0).norm(), A.col(1).norm(), A.col(2).norm()};
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return norms[a] > norms[b]; });

  Svd3 out;
  for (int k = 0; k < 3; ++k) {
    out.S(k) = norms[order[k]];
    out.V.col(k) = V.col(order[k]);
    out.U.col(k) = A.col(order[k]);
  }

  // Columns with negligible norm carry no direction; complete U orthonormally.
  const double scale = out.S(0);
  const double tiny = scale * 1e-15;
  if (scale == 0.0) {
    out.U = Mat3::Identity();
    return out;
  }
  out.U.col(0) /= out.S(0);
  if (out.S(1) > tiny) {
    out.U.col(1) /= out.S(1);
  } else {
    out.U.col(1) = any_orthogonal(out.U.col(0));
  }
  if (out.S(2) > tiny) {
    out.U.col(2) /= out.S(2);
  } else {
    out.U.col(2) = out.U.col(0).cross(out.U.col(1)).normalized();
  }
  return out;
}

}  // namespace lgmreg
