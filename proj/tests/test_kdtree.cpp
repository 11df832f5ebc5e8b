#include <doctest.h>

#include "lgmreg/kdtree.hpp"
#include "support.hpp"

using namespace lgmreg;

TEST_CASE("k-d tree agrees with exhaustive search") {
  Rng rng(1);
  for (std::size_t N : {1u, 5u, 40u, 500u}) {
    const PointCloud P = test::gaussian_cloud(N, rng);
    const KdTree tree(P, 4);
    for (int q = 0; q < 50; ++q) {
      const Vec3 x = test::gaussian_vec(rng);
      const std::size_t k = std::min<std::size_t>(N, 7);
      const auto a = tree.knn(x, k), b = brute_force_knn(P, x, k);
      REQUIRE(a.size() == b.size());
      for (std::size_t m = 0; m < a.size(); ++m) {
        CHECK(a[m].index == b[m].index);
        CHECK(a[m].distance2 == b[m].distance2);
      }
      CHECK(tree.nearest(x).index == b[0].index);
    }
  }
}

TEST_CASE("ties are broken by index and exclusion works") {
  // Lattice points are equidistant from the origin in many ways.
  std::vector<Vec3> pts;
  for (int x = -2; x <= 2; ++x)
    for (int y = -2; y <= 2; ++y)
      for (int z = -2; z <= 2; ++z) pts.emplace_back(x, y, z);
  const PointCloud P(pts);
  const KdTree tree(P, 2);
  const std::size_t center = 62;  // (0, 0, 0)
  const auto nb = tree.knn(P.point(center), 10, center);
  const auto ref = brute_force_knn(P, P.point(center), 10, center);
  for (std::size_t m = 0; m < nb.size(); ++m) {
    CHECK(nb[m].index == ref[m].index);
    CHECK(nb[m].index != center);
  }
  for (std::size_t m = 1; m < nb.size(); ++m) CHECK(neighbor_less(nb[m - 1], nb[m]));
}
