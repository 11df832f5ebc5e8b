#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "lgmreg/error.hpp"
#include "lgmreg/geom3d.hpp"
#include "support.hpp"

using namespace lgmreg;

namespace {

// Independent homogeneous-coordinate multiply.
std::array<double, 3> homogeneous_apply(const RigidTransform& T, const Vec3& p) {
  double H[4][4] = {};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) H[r][c] = T.R(r, c);
    H[r][3] = T.t(r);
  }
  H[3][3] = 1.0;
  const double x[4] = {p.x(), p.y(), p.z(), 1.0};
  std::array<double, 3> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) out[static_cast<std::size_t>(r)] += H[r][c] * x[c];
  return out;
}

}  // namespace

TEST_CASE("point cloud validation") {
  CHECK_THROWS_AS(PointCloud(PointMatrix(0, 3)), InvalidArgument);
  PointMatrix bad(1, 3);
  bad << 0.0, NAN, 1.0;
  CHECK_THROWS_AS(PointCloud{bad}, InvalidArgument);
  const PointCloud P(std::vector<Vec3>{Vec3(0, 0, 0), Vec3(2, 0, 0)});
  CHECK(P.centroid().isApprox(Vec3(1, 0, 0)));
  CHECK(P.centered().centroid().norm() < 1e-15);
  CHECK_THROWS_AS(P.subset({2}), InvalidArgument);
}

TEST_CASE("apply_transform") {
  Rng rng(1);
  const PointCloud P = test::gaussian_cloud(50, rng);
  const PointCloud same = apply_transform(RigidTransform::identity(), P);
  CHECK(same.matrix() == P.matrix());

  const PointCloud origin(std::vector<Vec3>{Vec3::Zero()});
  CHECK(apply_transform(RigidTransform::translation(Vec3(1, 0, 0)), origin).point(0) == Vec3(1, 0, 0));

  for (int k = 0; k < 20; ++k) {
    const RigidTransform T = test::random_transform(rng);
    const PointCloud Q = apply_transform(T, P);
    for (std::size_t i = 0; i < P.size(); ++i) {
      const auto h = homogeneous_apply(T, P.point(i));
      for (int c = 0; c < 3; ++c) CHECK(std::abs(Q.point(i)(c) - h[static_cast<std::size_t>(c)]) < 1e-12);
    }
    // Distances are preserved.
    CHECK(std::abs((Q.point(0) - Q.point(1)).norm() - (P.point(0) - P.point(1)).norm()) < 1e-9);
  }
}

TEST_CASE("compose and invert") {
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const RigidTransform A = test::random_transform(rng), B = test::random_transform(rng),
                         C = test::random_transform(rng);
    const RigidTransform AB = compose(A, B);
    for (int i = 0; i < 100; ++i) {
      const Vec3 p = test::gaussian_vec(rng);
      CHECK((AB(p) - A(B(p))).norm() < 1e-12);
      CHECK((invert(A)(A(p)) - p).norm() < 1e-12);
    }
    const RigidTransform I = compose(A, invert(A));
    CHECK((I.R - Mat3::Identity()).norm() < 1e-10);
    CHECK(I.t.norm() < 1e-10);
    CHECK((compose(A, RigidTransform::identity()).R - A.R).norm() == 0.0);
    const RigidTransform left = compose(compose(A, B), C), right = compose(A, compose(B, C));
    CHECK((left.R - right.R).norm() < 1e-10);
    CHECK((left.t - right.t).norm() < 1e-10);
    const RigidTransform Ai = invert(A);
    CHECK((Ai.R - A.R.transpose()).norm() < 1e-15);
    CHECK((Ai.t + A.R.transpose() * A.t).norm() < 1e-15);
  }
  const RigidTransform t = invert(RigidTransform::translation(Vec3(1, 2, 3)));
  CHECK(t.t == Vec3(-1, -2, -3));
  CHECK(t.R == Mat3::Identity());
}

TEST_CASE("random rotations are proper and reproducible") {
  Rng a(7), b(7);
  for (int k = 0; k < 100; ++k) {
    const Mat3 R = random_rotation(a);
    CHECK(orthonormality_defect(R) < 1e-9);
    CHECK(std::abs(R.determinant() - 1.0) < 1e-9);
    CHECK(R == random_rotation(b));
  }
}

TEST_CASE("rotation angles follow the Haar density") {
  // P(angle <= x) = (x - sin x) / pi.
  Rng rng(11);
  constexpr int kBins = 20;
  constexpr int kSamples = 100000;
  std::array<int, kBins> counts{};
  for (int s = 0; s < kSamples; ++s) {
    const double a = rotation_angle(random_rotation(rng));
    counts[static_cast<std::size_t>(std::min(kBins - 1, static_cast<int>(a / std::numbers::pi * kBins)))]++;
  }
  auto cdf = [](double x) { return (x - std::sin(x)) / std::numbers::pi; };
  double chi2 = 0.0;
  for (int b = 0; b < kBins; ++b) {
    const double lo = std::numbers::pi * b / kBins, hi = std::numbers::pi * (b + 1) / kBins;
    const double expect = kSamples * (cdf(hi) - cdf(lo));
    chi2 += (counts[static_cast<std::size_t>(b)] - expect) * (counts[static_cast<std::size_t>(b)] - expect) / expect;
  }
  // 99th percentile of chi-square with 19 degrees of freedom.
  CHECK(chi2 < 36.191);
}

TEST_CASE("rotation_angle") {
  CHECK(rotation_angle(Mat3::Identity()) == 0.0);
  CHECK(std::abs(rotation_angle(axis_angle(Vec3::UnitZ(), std::numbers::pi)) - std::numbers::pi) < 1e-12);
  CHECK(std::abs(rotation_angle(axis_angle(Vec3(1, 2, 3), 1.234)) - 1.234) < 1e-9);
  // Angles about one axis add.
  const Vec3 axis(0.3, -0.2, 0.9);
  CHECK(std::abs(rotation_angle(axis_angle(axis, 0.7) * axis_angle(axis, 1.1)) - 1.8) < 1e-8);
  CHECK(std::abs(rotation_angle(axis_angle(axis, 2.0) * axis_angle(axis, 2.0)) - (2 * std::numbers::pi - 4.0)) <
        1e-8);
  // Slightly over-unit trace does not produce NaN.
  CHECK(rotation_angle(Mat3::Identity() * (1.0 + 1e-15)) == 0.0);
}

TEST_CASE("orthonormalization") {
  Rng rng(3);
  Mat3 R = random_rotation(rng);
  const Mat3 drifted = R + 1e-5 * Mat3::Random();
  CHECK(orthonormality_defect(drifted) > 1e-7);
  const Mat3 fixed = sanitize_rotation(drifted);
  CHECK(orthonormality_defect(fixed) < 1e-12);
  CHECK(std::abs(fixed.determinant() - 1.0) < 1e-12);
  CHECK((fixed - R).norm() < 1e-4);
  CHECK(sanitize_rotation(R) == R);

  // Long compositions stay on the group.
  RigidTransform acc;
  const RigidTransform step = test::random_transform(rng);
  for (int k = 0; k < 10000; ++k) acc = compose(step, acc);
  CHECK(acc.is_valid(1e-9));
}

TEST_CASE("homogeneous round trip and validation") {
  Rng rng(4);
  const RigidTransform T = test::random_transform(rng);
  const RigidTransform back = RigidTransform::from_homogeneous(T.homogeneous());
  CHECK(back.R == T.R);
  CHECK(back.t == T.t);
  Mat4 H = T.homogeneous();
  H(3, 0) = 0.5;
  CHECK_THROWS_AS(RigidTransform::from_homogeneous(H), InvalidArgument);
  H = Mat4::Identity();
  H(0, 0) = -1.0;
  CHECK_THROWS_AS(RigidTransform::from_homogeneous(H), InvalidArgument);
}
