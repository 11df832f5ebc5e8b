#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lgmreg/geom3d.hpp"

namespace lgmreg {

/// Procedural surface families standing in for CAD model categories.
enum class ShapeFamily {
  kBox,
  kCylinder,
  kCone,
  kTorus,
  kLBracket,
  kStairs,
  kTable,
  kLamp,
  kSphereCluster,
  kExtrudedPolygon,
  kHelix,
  kCompositeTwoPart,
};

inline constexpr std::size_t kShapeFamilyCount = 12;

const std::vector<ShapeFamily>& all_shape_families();
std::string to_string(ShapeFamily family);
ShapeFamily parse_shape_family(const std::string& name);

/// A family plus its parameter vector. Parameter meaning per family is listed
/// in datagen.cpp next to each surface builder.
struct ShapeSpec {
  ShapeFamily family = ShapeFamily::kBox;
  std::vector<double> params;
  std::uint64_t seed = 0;

  /// Parameters drawn from the family's ranges using `seed`.
  static ShapeSpec random(ShapeFamily family, std::uint64_t seed);
  /// Axis-aligned box with full side lengths (x, y, z).
  static ShapeSpec box(double x, double y, double z, std::uint64_t seed);
};

/// N points area-uniform on the surface, centered at their centroid and scaled
/// so that the farthest point lies on the unit sphere (hence inside [-1,1]^3).
/// Throws InvalidArgument for N == 0 or invalid parameters.
PointCloud sample_shape(const ShapeSpec& spec, std::size_t N);

struct RegistrationPair {
  PointCloud source;
  PointCloud target;
  RigidTransform gt;  // maps source to target
  ShapeFamily family = ShapeFamily::kBox;
  double noise_variance = 0.0;
  bool partial = false;
};

/// Translations of generated poses are drawn uniformly from this cube.
inline constexpr double kDefaultTranslationRange = 0.5;

/// Rigid transform with Haar rotation and translation uniform in [-range, range]^3.
RigidTransform random_rigid_transform(Rng& rng, double translation_range = kDefaultTranslationRange);

/// source = T1(P) + e1, target = T2(P) + e2 with independent T1, T2 and
/// per-coordinate noise N(0, noise_variance); gt = T2 o T1^-1.
RegistrationPair make_pair(const PointCloud& P, double noise_variance, Rng& rng,
                           double translation_range = kDefaultTranslationRange);

/// Orthographic depth view from direction `view`: points are rotated by
/// `view`, binned on a 200 x 200 grid spanning [-1,1]^2 in x-y, and the
/// smallest-z point of every occupied cell is kept (returned in the input
/// frame, in input order). Noise N(0, noise_variance) is then added.
PointCloud make_partial_view(const PointCloud& P, const Mat3& view, double noise_variance, Rng& rng);
/// As above with a Haar-random view.
PointCloud make_partial(const PointCloud& P, double noise_variance, Rng& rng);

inline constexpr std::size_t kPartialGrid = 200;

enum class Protocol { kClean, kNoisy, kUnseen, kPartial };
std::string to_string(Protocol protocol);
Protocol parse_protocol(const std::string& name);

/// Noise variance used by the noisy, unseen and partial protocols.
inline constexpr double kProtocolNoiseVariance = 0.01;

struct DatasetSizes {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t points = 1024;
};

struct PairDataset {
  Protocol protocol = Protocol::kClean;
  std::uint64_t seed = 0;
  std::vector<ShapeFamily> train_families;
  std::vector<ShapeFamily> test_families;
  std::vector<RegistrationPair> train;
  std::vector<RegistrationPair> test;
};

/// Deterministic dataset for one protocol. `unseen` splits the families in
/// half (disjointly, by seed); every other protocol uses all families for both
/// splits. Pair k of a split draws from its own stream derived from
/// (seed, split, k).
PairDataset build_dataset(Protocol protocol, const DatasetSizes& sizes, std::uint64_t seed);

/// Writes `<root>/<split>/manifest.json` and per-pair text files.
void write_dataset(const PairDataset& dataset, const std::filesystem::path& root);
/// Reads one split directory written by write_dataset.
std::vector<RegistrationPair> read_split(const std::filesystem::path& split_dir);

}  // namespace lgmreg
