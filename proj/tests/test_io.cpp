#include <doctest.h>

#include <sstream>

#include "lgmreg/error.hpp"
#include "lgmreg/io.hpp"
#include "support.hpp"

using namespace lgmreg;

TEST_CASE("point clouds round trip exactly") {
  Rng rng(1);
  const PointCloud P = test::gaussian_cloud(100, rng);
  std::stringstream ss;
  io::write_point_cloud(ss, P);
  CHECK(io::read_point_cloud(ss).matrix() == P.matrix());
}

TEST_CASE("comments and blank lines are ignored") {
  std::istringstream in("# header\n\n1 2 3\n  # indented comment\n4 5 6\n");
  const PointCloud P = io::read_point_cloud(in);
  CHECK(P.size() == 2);
  CHECK(P.point(1) == Vec3(4, 5, 6));
}

TEST_CASE("malformed point files") {
  std::istringstream two("1 2\n");
  CHECK_THROWS_AS(io::read_point_cloud(two), IoError);
  std::istringstream word("1 2 x\n");
  CHECK_THROWS_AS(io::read_point_cloud(word), IoError);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(io::read_point_cloud(empty), IoError);
  CHECK_THROWS_AS(io::read_point_cloud(std::filesystem::path("/nonexistent/cloud.txt")), IoError);
}

TEST_CASE("transforms round trip and are validated") {
  Rng rng(2);
  const RigidTransform T = test::random_transform(rng);
  std::stringstream ss;
  io::write_transform(ss, T);
  const RigidTransform back = io::read_transform(ss);
  CHECK(back.R == T.R);
  CHECK(back.t == T.t);
  std::istringstream bad("1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 1 1\n");
  CHECK_THROWS_AS(io::read_transform(bad), IoError);
  std::istringstream shear("1 1 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n");
  CHECK_THROWS_AS(io::read_transform(shear), IoError);
}

TEST_CASE("mixtures round trip and are validated") {
  Rng rng(3);
  const Gmm g = test::random_gmm(5, rng);
  std::stringstream ss;
  io::write_gmm(ss, g);
  const Gmm back = io::read_gmm(ss);
  CHECK(back.weights == g.weights);
  CHECK(back.means == g.means);
  CHECK(back.variances == g.variances);
  std::istringstream wrong_count("2\n1 0 0 0 1\n");
  CHECK_THROWS_AS(io::read_gmm(wrong_count), IoError);
  std::istringstream not_simplex("1\n0.5 0 0 0 1\n");
  CHECK_THROWS_AS(io::read_gmm(not_simplex), IoError);
}
