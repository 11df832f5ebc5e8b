#include <doctest.h>

#include <Eigen/SVD>

#include "lgmreg/svd3.hpp"
#include "support.hpp"

using namespace lgmreg;

namespace {

void check_svd(const Mat3& M) {
  const Svd3 s = svd3(M);
  const double scale = std::max(1.0, M.norm());
  CHECK((s.U * s.S.asDiagonal() * s.V.transpose() - M).norm() < 1e-12 * scale);
  CHECK((s.U.transpose() * s.U - Mat3::Identity()).norm() < 1e-12);
  CHECK((s.V.transpose() * s.V - Mat3::Identity()).norm() < 1e-12);
  CHECK(s.S(0) >= s.S(1));
  CHECK(s.S(1) >= s.S(2));
  CHECK(s.S(2) >= 0.0);
  const Eigen::JacobiSVD<Mat3> ref(M);
  CHECK((s.S - ref.singularValues()).norm() < 1e-12 * scale);
}

}  // namespace

TEST_CASE("random matrices") {
  Rng rng(1);
  std::normal_distribution<double> g;
  for (int k = 0; k < 500; ++k) {
    Mat3 M;
    for (int i = 0; i < 9; ++i) M(i / 3, i % 3) = g(rng);
    check_svd(M);
  }
}

TEST_CASE("rank-deficient and repeated singular values") {
  Rng rng(2);
  const Mat3 Q1 = random_rotation(rng), Q2 = random_rotation(rng);
  for (const Vec3 d : {Vec3(3, 2, 0), Vec3(1, 0, 0), Vec3(2, 2, 2), Vec3(5, 1, 1), Vec3(0, 0, 0), Vec3(1, 1, 0)})
    check_svd(Q1 * d.asDiagonal() * Q2);
  check_svd(Mat3::Zero());
  Mat3 outer = Vec3(1, 2, 3) * Vec3(-1, 0.5, 2).transpose();
  check_svd(outer);
}
