#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "lgmreg/datagen.hpp"
#include "lgmreg/error.hpp"
#include "lgmreg/evalbench.hpp"
#include "support.hpp"

using namespace lgmreg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lgmreg_datagen_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("box faces receive points in proportion to their areas") {
  const double dims[3] = {1.0, 2.0, 0.5};
  const std::size_t N = 60000;
  const PointCloud P = sample_shape(ShapeSpec::box(dims[0], dims[1], dims[2], 3), N);
  // Normalization shifts by the sample centroid, so each face is located by
  // the extreme coordinate on its own side.
  Vec3 lo, hi;
  for (int c = 0; c < 3; ++c) {
    lo(c) = P.matrix().col(c).minCoeff();
    hi(c) = P.matrix().col(c).maxCoeff();
  }
  int counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < N; ++i)
    for (int c = 0; c < 3; ++c)
      if (std::abs(P.point(i)(c) - lo(c)) < 1e-9 || std::abs(P.point(i)(c) - hi(c)) < 1e-9) {
        ++counts[c];
        break;
      }
  const double areas[3] = {2 * dims[1] * dims[2], 2 * dims[0] * dims[2], 2 * dims[0] * dims[1]};
  const double total = areas[0] + areas[1] + areas[2];
  for (int c = 0; c < 3; ++c) {
    const double p = areas[c] / total;
    const double sigma = std::sqrt(N * p * (1 - p));
    CHECK(std::abs(counts[c] - N * p) < 3 * sigma);
  }
}

TEST_CASE("every family fits the unit cube and is deterministic") {
  for (ShapeFamily f : all_shape_families()) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const ShapeSpec spec = ShapeSpec::random(f, seed);
      const PointCloud P = sample_shape(spec, 500);
      CHECK(P.matrix().cwiseAbs().maxCoeff() <= 1.0);
      CHECK(P.matrix() == sample_shape(spec, 500).matrix());
    }
    CHECK(parse_shape_family(to_string(f)) == f);
  }
  CHECK(all_shape_families().size() >= 12);
  CHECK_THROWS_AS(sample_shape(ShapeSpec::box(1, 1, -1, 0), 10), InvalidArgument);
  CHECK_THROWS_AS(sample_shape(ShapeSpec{ShapeFamily::kTorus, {0.5}, 0}, 10), InvalidArgument);
  CHECK_THROWS_AS(sample_shape(ShapeSpec::box(1, 1, 1, 0), 0), InvalidArgument);
}

TEST_CASE("make_pair without noise is exact") {
  Rng rng(1);
  const PointCloud P = sample_shape(ShapeSpec::random(ShapeFamily::kTable, 1), 300);
  for (int k = 0; k < 20; ++k) {
    const RegistrationPair pair = make_pair(P, 0.0, rng);
    CHECK((apply_transform(pair.gt, pair.source).matrix() - pair.target.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(pair.gt.is_valid(1e-9));
  }
}

TEST_CASE("noise is independent with the stated variance") {
  const PointCloud P = sample_shape(ShapeSpec::random(ShapeFamily::kCone, 2), 1024);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    Rng noisy_rng(k), clean_rng(k);
    const RegistrationPair noisy = make_pair(P, 0.01, noisy_rng);
    const RegistrationPair clean = make_pair(P, 0.0, clean_rng);
    const PointMatrix e1 = noisy.source.matrix() - clean.source.matrix();
    const PointMatrix e2 = noisy.target.matrix() - clean.target.matrix();
    sxy += (e1.array() * e2.array()).sum();
    sxx += e1.squaredNorm();
    syy += e2.squaredNorm();
    if (k == 0) {
      const PointMatrix r = noisy.target.matrix() - apply_transform(noisy.gt, noisy.source).matrix();
      const double per_coordinate = r.squaredNorm() / static_cast<double>(r.size());
      CHECK(std::abs(per_coordinate - 0.02) < 0.1 * 0.02);
    }
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.05);
}

TEST_CASE("relative rotation angles follow the Haar density") {
  Rng rng(5);
  const PointCloud P(std::vector<Vec3>{Vec3(0, 0, 0), Vec3(1, 0, 0)});
  constexpr int kBins = 10;
  constexpr int kPairs = 10000;
  int counts[kBins] = {};
  for (int k = 0; k < kPairs; ++k) {
    const double a = rotation_angle(make_pair(P, 0.0, rng).gt.R);
    counts[std::min(kBins - 1, static_cast<int>(a / std::numbers::pi * kBins))]++;
  }
  auto cdf = [](double x) { return (x - std::sin(x)) / std::numbers::pi; };
  double chi2 = 0.0;
  for (int b = 0; b < kBins; ++b) {
    const double e = kPairs * (cdf(std::numbers::pi * (b + 1) / kBins) - cdf(std::numbers::pi * b / kBins));
    chi2 += (counts[b] - e) * (counts[b] - e) / e;
  }
  // 99th percentile of chi-square with 9 degrees of freedom.
  CHECK(chi2 < 21.666);
}

TEST_CASE("partial views keep the nearest point per cell") {
  Rng rng(3);
  const PointCloud single(std::vector<Vec3>{Vec3(0.3, -0.2, 0.5)});
  CHECK(make_partial(single, 0.0, rng).matrix() == single.matrix());

  const PointCloud stacked(std::vector<Vec3>{Vec3(0.001, 0.001, 0.9), Vec3(0.002, 0.002, 0.1)});
  const PointCloud kept = make_partial_view(stacked, Mat3::Identity(), 0.0, rng);
  REQUIRE(kept.size() == 1);
  CHECK(kept.point(0).z() == 0.1);

  // Dense sphere: re-bin the output and check the min-depth rule against the input.
  std::normal_distribution<double> g;
  std::vector<Vec3> pts;
  for (int i = 0; i < 50000; ++i) pts.push_back(Vec3(g(rng), g(rng), g(rng)).normalized() * 0.9);
  const PointCloud sphere(pts);
  const Mat3 view = random_rotation(rng);
  const PointCloud out = make_partial_view(sphere, view, 0.0, rng);
  auto cell_of = [&](const Vec3& p) {
    const Vec3 q = view * p;
    const double w = 2.0 / kPartialGrid;
    return std::make_pair(static_cast<int>(std::floor((q.x() + 1) / w)), static_cast<int>(std::floor((q.y() + 1) / w)));
  };
  std::map<std::pair<int, int>, double> min_z;
  for (const Vec3& p : pts) {
    const auto c = cell_of(p);
    const double z = (view * p).z();
    auto it = min_z.find(c);
    if (it == min_z.end() || z < it->second) min_z[c] = z;
  }
  CHECK(out.size() <= min_z.size());
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto c = cell_of(out.point(i));
    CHECK(seen.insert(c).second);
    CHECK((view * out.point(i)).z() == min_z[c]);
  }
}

TEST_CASE("datasets") {
  const DatasetSizes sizes{6, 4, 128};
  const PairDataset unseen = build_dataset(Protocol::kUnseen, sizes, 9);
  std::set<ShapeFamily> train(unseen.train_families.begin(), unseen.train_families.end());
  for (ShapeFamily f : unseen.test_families) CHECK(train.count(f) == 0);
  for (const auto& p : unseen.train) CHECK(train.count(p.family) == 1);
  for (const auto& p : unseen.test) CHECK(train.count(p.family) == 0);

  const PairDataset clean = build_dataset(Protocol::kClean, sizes, 9);
  Rng rng(1);
  for (const auto& p : clean.test) {
    CHECK(rmse(p.gt, p.gt, p.source, 100, rng) == 0.0);
    CHECK(p.noise_variance == 0.0);
    CHECK(p.gt.is_valid(1e-9));
  }
  const PairDataset noisy = build_dataset(Protocol::kNoisy, sizes, 9);
  for (const auto& p : noisy.train) CHECK(p.noise_variance == kProtocolNoiseVariance);
  const PairDataset partial = build_dataset(Protocol::kPartial, sizes, 9);
  for (const auto& p : partial.train) {
    CHECK(p.partial);
    CHECK(p.source.size() <= 128);
  }
  CHECK(parse_protocol("unseen") == Protocol::kUnseen);
  CHECK_THROWS_AS(parse_protocol("modelnet"), InvalidArgument);
}

TEST_CASE("dataset files are byte-identical across runs and read back") {
  const PairDataset ds = build_dataset(Protocol::kNoisy, {3, 2, 64}, 4);
  const auto a = scratch("a"), b = scratch("b");
  write_dataset(ds, a);
  write_dataset(build_dataset(Protocol::kNoisy, {3, 2, 64}, 4), b);
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    CHECK(slurp(entry.path()) == slurp(b / fs::relative(entry.path(), a)));
  }
  const auto back = read_split(a / "test");
  REQUIRE(back.size() == 2);
  CHECK(back[1].source.matrix() == ds.test[1].source.matrix());
  CHECK(back[1].gt.R == ds.test[1].gt.R);
  CHECK(back[1].family == ds.test[1].family);
  CHECK_THROWS_AS(read_split(a / "missing"), IoError);
  fs::remove_all(a);
  fs::remove_all(b);
}
