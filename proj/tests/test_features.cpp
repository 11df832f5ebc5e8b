#include <doctest.h>

#include "lgmreg/datagen.hpp"
#include "lgmreg/error.hpp"
#include "lgmreg/features.hpp"
#include "support.hpp"

using namespace lgmreg;

TEST_CASE("invariant features do not change under rotation") {
  Rng rng(1);
  const PointCloud P = sample_shape(ShapeSpec::random(ShapeFamily::kHelix, 2), 400);
  const FeatureMatrix F = invariant_features(P);
  CHECK(F.cols() == 4 * static_cast<Eigen::Index>(kDefaultNeighbors));
  CHECK(F.allFinite());
  double worst = 0.0;
  for (int k = 0; k < 100; ++k)
    worst = std::max(worst, (invariant_features(apply_transform(test::random_transform(rng), P)) - F)
                                .cwiseAbs()
                                .maxCoeff());
  CHECK(worst < 1e-6);
}

TEST_CASE("two points on the unit sphere") {
  const PointCloud P(std::vector<Vec3>{Vec3(1, 0, 0), Vec3(-1, 0, 0)});
  const FeatureMatrix F = invariant_features(P, 1);
  for (int i = 0; i < 2; ++i) {
    CHECK(F(i, 0) == doctest::Approx(1.0));
    CHECK(F(i, 1) == doctest::Approx(1.0));
  }
}

TEST_CASE("accelerated neighbor search matches exhaustive search") {
  Rng rng(2);
  for (std::size_t k : {1u, 4u, 8u}) {
    const PointCloud P = test::gaussian_cloud(300, rng);
    CHECK(invariant_features(P, k) == invariant_features_brute_force(P, k));
  }
  // Lattice with many distance ties.
  std::vector<Vec3> pts;
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 4; ++z) pts.emplace_back(x, y, z);
  const PointCloud L(pts);
  CHECK(invariant_features(L, 6) == invariant_features_brute_force(L, 6));
  CHECK(invariant_features(L, 6) == invariant_features(L, 6));
}

TEST_CASE("argument checks and input modes") {
  Rng rng(3);
  const PointCloud P = test::gaussian_cloud(8, rng);
  CHECK_THROWS_AS(invariant_features(P, 8), InvalidArgument);
  CHECK_THROWS_AS(invariant_features(P, 0), InvalidArgument);
  const FeatureMatrix X = raw_xyz_features(P);
  CHECK(X.cols() == 3);
  CHECK(X.colwise().sum().norm() < 1e-12);
  CHECK(feature_dimension(InputMode::kRawXyz, 8) == 3);
  CHECK(feature_dimension(InputMode::kInvariantFeatures, 5) == 20);
  CHECK(parse_input_mode("rri") == InputMode::kInvariantFeatures);
  CHECK(parse_input_mode("xyz") == InputMode::kRawXyz);
  CHECK_THROWS_AS(parse_input_mode("normals"), InvalidArgument);
}

TEST_CASE("point at the centroid gets zero angular entries") {
  const PointCloud P(std::vector<Vec3>{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0)});
  const FeatureMatrix F = invariant_features(P, 2);
  CHECK(F(0, 0) == 0.0);
  CHECK(F(0, 2) == 0.0);
  CHECK(F(0, 3) == 0.0);
}
