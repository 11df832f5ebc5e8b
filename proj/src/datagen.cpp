#include "lgmreg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lgmreg/error.hpp"
#include "lgmreg/io.hpp"

namespace lgmreg {
namespace {

constexpr double kPi = std::numbers::pi;

// One piece of surface: its area and an area-uniform sampler.
struct Patch {
  double area;
  std::function<Vec3(Rng&)> sample;
};

double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Orthonormal pair spanning the plane normal to `axis`.
std::pair<Vec3, Vec3> plane_basis(const Vec3& axis) {
  const Vec3 a = axis.normalized();
  const Vec3 helper = std::abs(a.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = a.cross(helper).normalized();
  return {e1, a.cross(e1)};
}

Patch parallelogram(const Vec3& o, const Vec3& u, const Vec3& v) {
  return {u.cross(v).norm(), [=](Rng& rng) {
            const double a = uniform(rng), b = uniform(rng);
            return Vec3(o + a * u + b * v);
          }};
}

Patch triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
  return {0.5 * (b - a).cross(c - a).norm(), [=](Rng& rng) {
            const double s = std::sqrt(uniform(rng)), r = uniform(rng);
            return Vec3((1.0 - s) * a + s * (1.0 - r) * b + s * r * c);
          }};
}

Patch disk(const Vec3& center, const Vec3& normal, double radius) {
  const auto [e1, e2] = plane_basis(normal);
  return {kPi * radius * radius, [=](Rng& rng) {
            const double r = radius * std::sqrt(uniform(rng)), phi = uniform(rng, 0.0, 2.0 * kPi);
            return Vec3(center + r * (std::cos(phi) * e1 + std::sin(phi) * e2));
          }};
}

// Lateral surface of a cylinder from `base` along `axis` (length = |axis|).
Patch cylinder_side(const Vec3& base, const Vec3& axis, double radius) {
  const auto [e1, e2] = plane_basis(axis);
  return {2.0 * kPi * radius * axis.norm(), [=](Rng& rng) {
            const double h = uniform(rng), phi = uniform(rng, 0.0, 2.0 * kPi);
            return Vec3(base + h * axis + radius * (std::cos(phi) * e1 + std::sin(phi) * e2));
          }};
}

// Lateral surface of a cone with base circle at `base` and apex at base + axis.
Patch cone_side(const Vec3& base, const Vec3& axis, double radius) {
  const auto [e1, e2] = plane_basis(axis);
  const double slant = std::hypot(radius, axis.norm());
  return {kPi * radius * slant, [=](Rng& rng) {
            const double s = std::sqrt(uniform(rng));  // fraction of the way from apex, density ~ s
            const double phi = uniform(rng, 0.0, 2.0 * kPi);
            return Vec3(base + (1.0 - s) * axis + s * radius * (std::cos(phi) * e1 + std::sin(phi) * e2));
          }};
}

Patch sphere(const Vec3& center, double radius) {
  return {4.0 * kPi * radius * radius, [=](Rng& rng) {
            std::normal_distribution<double> g(0.0, 1.0);
            Vec3 d;
            do {
              d = Vec3(g(rng), g(rng), g(rng));
            } while (d.norm() < 1e-12);
            return Vec3(center + radius * d.normalized());
          }};
}

// Torus around z with major radius R and tube radius r; the tube angle is
// drawn by rejection against the area density (R + r cos v).
Patch torus(double R, double r) {
  return {4.0 * kPi * kPi * R * r, [=](Rng& rng) {
            double v;
            do {
              v = uniform(rng, 0.0, 2.0 * kPi);
            } while (uniform(rng, 0.0, R + r) > R + r * std::cos(v));
            const double u = uniform(rng, 0.0, 2.0 * kPi);
            return Vec3((R + r * std::cos(v)) * std::cos(u), (R + r * std::cos(v)) * std::sin(u), r * std::sin(v));
          }};
}

// Six faces of the axis-aligned box [lo, hi].
void add_box(std::vector<Patch>& out, const Vec3& lo, const Vec3& hi) {
  const Vec3 d = hi - lo;
  const Vec3 ex(d.x(), 0, 0), ey(0, d.y(), 0), ez(0, 0, d.z());
  out.push_back(parallelogram(lo, ex, ey));
  out.push_back(parallelogram(lo + ez, ex, ey));
  out.push_back(parallelogram(lo, ex, ez));
  out.push_back(parallelogram(lo + ey, ex, ez));
  out.push_back(parallelogram(lo, ey, ez));
  out.push_back(parallelogram(lo + ex, ey, ez));
}

void add_closed_cylinder(std::vector<Patch>& out, const Vec3& base, const Vec3& axis, double radius) {
  out.push_back(cylinder_side(base, axis, radius));
  out.push_back(disk(base, axis, radius));
  out.push_back(disk(base + axis, axis, radius));
}

struct FamilyInfo {
  ShapeFamily family;
  const char* name;
  // Parameter ranges [lo, hi] in order; integer-valued entries are rounded.
  std::vector<std::pair<double, double>> ranges;
};

const std::vector<FamilyInfo>& family_table() {
  static const std::vector<FamilyInfo> table = {
      // x, y, z side lengths
      {ShapeFamily::kBox, "box", {{0.3, 1.5}, {0.3, 1.5}, {0.3, 1.5}}},
      // radius, height, cut fraction (a slab removed from one side)
      {ShapeFamily::kCylinder, "cylinder", {{0.2, 0.6}, {0.4, 1.6}, {0.2, 0.5}}},
      // base radius, height, side knob radius
      {ShapeFamily::kCone, "cone", {{0.3, 0.7}, {0.5, 1.5}, {0.08, 0.18}}},
      // major radius, tube radius, handle length
      {ShapeFamily::kTorus, "torus", {{0.5, 0.8}, {0.1, 0.25}, {0.3, 0.7}}},
      // long arm, short arm, thickness, width
      {ShapeFamily::kLBracket, "l_bracket", {{0.8, 1.5}, {0.5, 1.1}, {0.1, 0.25}, {0.3, 0.8}}},
      // steps, tread depth, riser height, width
      {ShapeFamily::kStairs, "stairs", {{3, 5}, {0.2, 0.4}, {0.15, 0.3}, {0.4, 1.0}}},
      // top x, top y, top thickness, leg height, leg width
      {ShapeFamily::kTable, "table", {{0.8, 1.6}, {0.5, 1.0}, {0.04, 0.1}, {0.4, 0.9}, {0.05, 0.12}}},
      // base radius, stem height, stem radius, shade radius, shade height, arm offset
      {ShapeFamily::kLamp, "lamp", {{0.25, 0.45}, {0.8, 1.4}, {0.02, 0.05}, {0.2, 0.4}, {0.2, 0.4}, {0.1, 0.35}}},
      // count, then per sphere (x, y, z, radius) for up to 5 spheres
      {ShapeFamily::kSphereCluster,
       "sphere_cluster",
       {{3, 5},
        {-0.6, 0.6}, {-0.6, 0.6}, {-0.6, 0.6}, {0.15, 0.4},
        {-0.6, 0.6}, {-0.6, 0.6}, {-0.6, 0.6}, {0.15, 0.4},
        {-0.6, 0.6}, {-0.6, 0.6}, {-0.6, 0.6}, {0.15, 0.4},
        {-0.6, 0.6}, {-0.6, 0.6}, {-0.6, 0.6}, {0.15, 0.4},
        {-0.6, 0.6}, {-0.6, 0.6}, {-0.6, 0.6}, {0.15, 0.4}}},
      // star points, outer radius, inner/outer ratio, height, angular jitter
      {ShapeFamily::kExtrudedPolygon, "extruded_polygon", {{5, 8}, {0.5, 1.0}, {0.35, 0.7}, {0.2, 0.8}, {0.0, 0.3}}},
      // coil radius, pitch per turn, turns, tube radius
      {ShapeFamily::kHelix, "helix", {{0.3, 0.6}, {0.2, 0.5}, {2, 4}, {0.04, 0.1}}},
      // box x, box y, box z, attached radius, attached height
      {ShapeFamily::kCompositeTwoPart,
       "composite_two_part",
       {{0.5, 1.2}, {0.3, 0.8}, {0.2, 0.5}, {0.15, 0.35}, {0.3, 0.8}}},
  };
  return table;
}

const FamilyInfo& info(ShapeFamily family) {
  for (const auto& f : family_table())
    if (f.family == family) return f;
  throw InvalidArgument("unknown shape family");
}

bool is_integer_param(ShapeFamily f, std::size_t k) {
  return (f == ShapeFamily::kStairs && k == 0) || (f == ShapeFamily::kSphereCluster && k == 0) ||
         (f == ShapeFamily::kExtrudedPolygon && k == 0) || (f == ShapeFamily::kHelix && k == 2);
}

std::vector<Patch> build_surface(const ShapeSpec& spec) {
  const auto& fi = info(spec.family);
  const auto& p = spec.params;
  if (p.size() != fi.ranges.size())
    throw InvalidArgument(std::string("shape '") + fi.name + "' expects " + std::to_string(fi.ranges.size()) +
                          " parameters");
  for (double v : p)
    if (!std::isfinite(v)) throw InvalidArgument("shape parameters must be finite");
  auto positive = [&](std::initializer_list<std::size_t> idx) {
    for (std::size_t k : idx)
      if (!(p[k] > 0.0)) throw InvalidArgument(std::string("shape '") + fi.name + "' needs positive sizes");
  };

  std::vector<Patch> s;
  switch (spec.family) {
    case ShapeFamily::kBox:
      positive({0, 1, 2});
      add_box(s, Vec3(-p[0], -p[1], -p[2]) / 2, Vec3(p[0], p[1], p[2]) / 2);
      break;
    case ShapeFamily::kCylinder: {
      // Cylinder with a flat cut along one side, removing the rotational symmetry.
      positive({0, 1});
      if (!(p[2] > 0.0 && p[2] < 1.0)) throw InvalidArgument("cylinder cut fraction must lie in (0, 1)");
      const double r = p[0], h = p[1];
      const double c = r * (1.0 - 2.0 * p[2]);  // cut plane x = c
      const double half = std::acos(c / r);     // arc half-angle removed
      const double arc = 2.0 * kPi - 2.0 * half;
      s.push_back({arc * r * h, [=](Rng& rng) {
                     const double phi = half + uniform(rng, 0.0, arc);
                     return Vec3(r * std::cos(phi), r * std::sin(phi), uniform(rng, -h / 2, h / 2));
                   }});
      const double chord = 2.0 * std::sqrt(r * r - c * c);
      s.push_back(parallelogram(Vec3(c, -chord / 2, -h / 2), Vec3(0, chord, 0), Vec3(0, 0, h)));
      const double cap_area = kPi * r * r - (r * r * half - c * std::sqrt(r * r - c * c));
      for (double z : {-h / 2, h / 2}) {
        s.push_back({cap_area, [=](Rng& rng) {
                       Vec3 q;
                       do {
                         const double rr = r * std::sqrt(uniform(rng)), phi = uniform(rng, 0.0, 2.0 * kPi);
                         q = Vec3(rr * std::cos(phi), rr * std::sin(phi), z);
                       } while (q.x() > c);
                       return q;
                     }});
      }
      break;
    }
    case ShapeFamily::kCone: {
      positive({0, 1, 2});
      const double r = p[0], h = p[1];
      s.push_back(cone_side(Vec3(0, 0, -h / 2), Vec3(0, 0, h), r));
      s.push_back(disk(Vec3(0, 0, -h / 2), Vec3::UnitZ(), r));
      // Knob on the base rim breaks the axial symmetry.
      s.push_back(sphere(Vec3(r, 0, -h / 2), p[2]));
      break;
    }
    case ShapeFamily::kTorus: {
      positive({0, 1, 2});
      if (p[1] >= p[0]) throw InvalidArgument("torus tube radius must be below the major radius");
      s.push_back(torus(p[0], p[1]));
      // Straight handle leaving the ring radially.
      s.push_back(cylinder_side(Vec3(p[0] + p[1], 0, 0), Vec3(p[2], 0, 0), 0.6 * p[1]));
      break;
    }
    case ShapeFamily::kLBracket: {
      positive({0, 1, 2, 3});
      const double a = p[0], b = p[1], t = p[2], w = p[3];
      add_box(s, Vec3(0, 0, 0), Vec3(a, t, w));
      add_box(s, Vec3(0, t, 0), Vec3(t, b, w));
      break;
    }
    case ShapeFamily::kStairs: {
      positive({0, 1, 2, 3});
      const int n = static_cast<int>(std::lround(p[0]));
      if (n < 1) throw InvalidArgument("stairs need at least one step");
      for (int k = 0; k < n; ++k) add_box(s, Vec3(k * p[1], 0, 0), Vec3((k + 1) * p[1], (k + 1) * p[2], p[3]));
      break;
    }
    case ShapeFamily::kTable: {
      positive({0, 1, 2, 3, 4});
      const double x = p[0], y = p[1], th = p[2], lh = p[3], lw = p[4];
      if (2 * lw >= x || 2 * lw >= y) throw InvalidArgument("table legs wider than the top");
      add_box(s, Vec3(-x / 2, -y / 2, lh), Vec3(x / 2, y / 2, lh + th));
      // One leg is shorter-set inward, so the table is not mirror symmetric.
      const double inset[4] = {0.0, 0.0, 0.0, 0.25 * x};
      int leg = 0;
      for (double sx : {-1.0, 1.0})
        for (double sy : {-1.0, 1.0}) {
          const double cx = sx * (x / 2 - lw / 2 - (sx > 0 ? inset[leg] : 0.0)), cy = sy * (y / 2 - lw / 2);
          add_box(s, Vec3(cx - lw / 2, cy - lw / 2, 0), Vec3(cx + lw / 2, cy + lw / 2, lh));
          ++leg;
        }
      break;
    }
    case ShapeFamily::kLamp: {
      positive({0, 1, 2, 3, 4, 5});
      const double rb = p[0], hs = p[1], rs = p[2], rsh = p[3], hsh = p[4], arm = p[5];
      add_closed_cylinder(s, Vec3(0, 0, 0), Vec3(0, 0, 0.05), rb);
      s.push_back(cylinder_side(Vec3(0, 0, 0.05), Vec3(0, 0, hs), rs));
      s.push_back(cylinder_side(Vec3(0, 0, 0.05 + hs), Vec3(arm, 0, 0), rs));
      const Vec3 shade_base(arm, 0, 0.05 + hs - hsh);
      s.push_back(cone_side(shade_base, Vec3(0, 0, hsh), rsh));
      break;
    }
    case ShapeFamily::kSphereCluster: {
      const int n = static_cast<int>(std::lround(p[0]));
      if (n < 1 || n > 5) throw InvalidArgument("sphere cluster needs 1 to 5 spheres");
      for (int k = 0; k < n; ++k) {
        const std::size_t o = 1 + 4 * static_cast<std::size_t>(k);
        positive({o + 3});
        s.push_back(sphere(Vec3(p[o], p[o + 1], p[o + 2]), p[o + 3]));
      }
      break;
    }
    case ShapeFamily::kExtrudedPolygon: {
      positive({1, 2, 3});
      const int m = static_cast<int>(std::lround(p[0]));
      if (m < 3) throw InvalidArgument("extruded star needs at least 3 points");
      const double R = p[1], ratio = p[2], h = p[3], jitter = p[4];
      std::vector<Vec3> ring;
      for (int k = 0; k < 2 * m; ++k) {
        // Deterministic per-vertex jitter breaks the m-fold symmetry.
        const double wobble = 1.0 + jitter * std::sin(1.7 * k + 0.3 * k * k);
        const double radius = (k % 2 == 0 ? R : R * ratio) * wobble;
        const double ang = kPi * k / m;
        ring.emplace_back(radius * std::cos(ang), radius * std::sin(ang), 0.0);
      }
      const Vec3 up(0, 0, h);
      for (std::size_t k = 0; k < ring.size(); ++k) {
        const Vec3& a = ring[k];
        const Vec3& b = ring[(k + 1) % ring.size()];
        s.push_back(triangle(Vec3::Zero(), a, b));
        s.push_back(triangle(up, a + up, b + up));
        s.push_back(parallelogram(a, b - a, up));
      }
      break;
    }
    case ShapeFamily::kHelix: {
      positive({0, 1, 2, 3});
      const double R = p[0], pitch = p[1], turns = std::round(p[2]), tube = p[3];
      const int segments = static_cast<int>(48 * turns);
      auto at = [&](double u) {
        const double ang = 2.0 * kPi * turns * u;
        return Vec3(R * std::cos(ang), R * std::sin(ang), pitch * turns * u);
      };
      for (int k = 0; k < segments; ++k) {
        const Vec3 a = at(static_cast<double>(k) / segments), b = at(static_cast<double>(k + 1) / segments);
        s.push_back(cylinder_side(a, b - a, tube));
      }
      break;
    }
    case ShapeFamily::kCompositeTwoPart: {
      positive({0, 1, 2, 3, 4});
      const double x = p[0], y = p[1], z = p[2];
      add_box(s, Vec3(-x / 2, -y / 2, 0), Vec3(x / 2, y / 2, z));
      // Cylinder standing off-center on the top face.
      add_closed_cylinder(s, Vec3(x / 4, 0, z), Vec3(0, 0, p[4]), std::min(p[3], y / 2));
      break;
    }
  }
  return s;
}

std::string pair_file(std::size_t id, const char* what) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "pair_%05zu_%s.txt", id, what);
  return buf;
}

}  // namespace

const std::vector<ShapeFamily>& all_shape_families() {
  static const std::vector<ShapeFamily> families = [] {
    std::vector<ShapeFamily> out;
    for (const auto& f : family_table()) out.push_back(f.family);
    return out;
  }();
  return families;
}

std::string to_string(ShapeFamily family) { return info(family).name; }

ShapeFamily parse_shape_family(const std::string& name) {
  for (const auto& f : family_table())
    if (name == f.name) return f.family;
  throw InvalidArgument("unknown shape family '" + name + "'");
}

ShapeSpec ShapeSpec::random(ShapeFamily family, std::uint64_t seed) {
  ShapeSpec spec;
  spec.family = family;
  spec.seed = seed;
  Rng rng = make_rng(seed, "shape_params");
  const auto& ranges = info(family).ranges;
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    const double v = uniform(rng, ranges[k].first, ranges[k].second);
    spec.params.push_back(is_integer_param(family, k) ? std::round(v) : v);
  }
  return spec;
}

ShapeSpec ShapeSpec::box(double x, double y, double z, std::uint64_t seed) {
  return {ShapeFamily::kBox, {x, y, z}, seed};
}

PointCloud sample_shape(const ShapeSpec& spec, std::size_t N) {
  if (N == 0) throw InvalidArgument("sample_shape needs N >= 1");
  const std::vector<Patch> surface = build_surface(spec);
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& patch : surface) {
    total += patch.area;
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw InvalidArgument("shape has zero surface area");

  Rng rng = make_rng(spec.seed, "surface");
  PointMatrix X(static_cast<Eigen::Index>(N), 3);
  for (std::size_t i = 0; i < N; ++i) {
    const double u = uniform(rng, 0.0, total);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), surface.size() - 1);
    X.row(static_cast<Eigen::Index>(i)) = surface[k].sample(rng).transpose();
  }
  const Eigen::RowVector3d c = X.colwise().mean();
  X.rowwise() -= c;
  const double radius = X.rowwise().norm().maxCoeff();
  if (radius > 0.0) X /= radius * (1.0 + 1e-12);
  return PointCloud(std::move(X));
}

RigidTransform random_rigid_transform(Rng& rng, double translation_range) {
  RigidTransform T;
  T.R = random_rotation(rng);
  std::uniform_real_distribution<double> u(-translation_range, translation_range);
  T.t = Vec3(u(rng), u(rng), u(rng));
  return T;
}

namespace {

PointCloud add_noise(const PointCloud& P, double noise_variance, Rng& rng) {
  if (noise_variance == 0.0) return P;
  std::normal_distribution<double> g(0.0, std::sqrt(noise_variance));
  PointMatrix X = P.matrix();
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (int c = 0; c < 3; ++c) X(i, c) += g(rng);
  return PointCloud(std::move(X));
}

}  // namespace

RegistrationPair make_pair(const PointCloud& P, double noise_variance, Rng& rng, double translation_range) {
  if (!(noise_variance >= 0.0)) throw InvalidArgument("noise variance must be non-negative");
  const RigidTransform T1 = random_rigid_transform(rng, translation_range);
  const RigidTransform T2 = random_rigid_transform(rng, translation_range);
  RegistrationPair pair;
  pair.source = add_noise(apply_transform(T1, P), noise_variance, rng);
  pair.target = add_noise(apply_transform(T2, P), noise_variance, rng);
  pair.gt = compose(T2, invert(T1));
  pair.noise_variance = noise_variance;
  return pair;
}

PointCloud make_partial_view(const PointCloud& P, const Mat3& view, double noise_variance, Rng& rng) {
  const double cell = 2.0 / static_cast<double>(kPartialGrid);
  std::vector<std::ptrdiff_t> best(kPartialGrid * kPartialGrid, -1);
  std::vector<double> best_z(kPartialGrid * kPartialGrid, 0.0);
  for (std::size_t i = 0; i < P.size(); ++i) {
    const Vec3 q = view * P.point(i);
    const double fx = std::floor((q.x() + 1.0) / cell), fy = std::floor((q.y() + 1.0) / cell);
    if (fx < 0 || fy < 0 || fx >= kPartialGrid || fy >= kPartialGrid) continue;
    const std::size_t c = static_cast<std::size_t>(fy) * kPartialGrid + static_cast<std::size_t>(fx);
    if (best[c] < 0 || q.z() < best_z[c]) {
      best[c] = static_cast<std::ptrdiff_t>(i);
      best_z[c] = q.z();
    }
  }
  std::vector<std::size_t> keep;
  for (std::ptrdiff_t b : best)
    if (b >= 0) keep.push_back(static_cast<std::size_t>(b));
  if (keep.empty()) throw InvalidArgument("partial view is empty: cloud lies outside [-1,1]^2");
  std::sort(keep.begin(), keep.end());
  return add_noise(P.subset(keep), noise_variance, rng);
}

PointCloud make_partial(const PointCloud& P, double noise_variance, Rng& rng) {
  const Mat3 view = random_rotation(rng);
  return make_partial_view(P, view, noise_variance, rng);
}

std::string to_string(Protocol protocol) {
  switch (protocol) {
    case Protocol::kClean: return "clean";
    case Protocol::kNoisy: return "noisy";
    case Protocol::kUnseen: return "unseen";
    case Protocol::kPartial: return "partial";
  }
  return "?";
}

Protocol parse_protocol(const std::string& name) {
  for (Protocol p : {Protocol::kClean, Protocol::kNoisy, Protocol::kUnseen, Protocol::kPartial})
    if (name == to_string(p)) return p;
  throw InvalidArgument("unknown protocol '" + name + "'");
}

namespace {

// Points sampled per shape before taking partial views; 200 x 200 cells keep
// roughly a quarter of a dense sample, which still leaves more than N.
constexpr std::size_t kPartialDenseFactor = 64;

RegistrationPair generate_pair(Protocol protocol, const std::vector<ShapeFamily>& families, std::size_t points,
                               std::uint64_t seed, const char* split, std::size_t k) {
  Rng rng = make_rng(seed, std::string("pair/") + split, k);
  const ShapeFamily family = families[std::uniform_int_distribution<std::size_t>(0, families.size() - 1)(rng)];
  const ShapeSpec spec = ShapeSpec::random(family, rng());
  const double noise = protocol == Protocol::kClean ? 0.0 : kProtocolNoiseVariance;

  RegistrationPair pair;
  if (protocol != Protocol::kPartial) {
    pair = make_pair(sample_shape(spec, points), noise, rng);
  } else {
    const PointCloud dense = sample_shape(spec, points * kPartialDenseFactor);
    auto view_subset = [&](Rng& r) {
      const PointCloud view = make_partial(dense, 0.0, r);
      std::vector<std::size_t> idx(view.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::shuffle(idx.begin(), idx.end(), r);
      idx.resize(std::min(points, idx.size()));
      std::sort(idx.begin(), idx.end());
      return view.subset(idx);
    };
    const PointCloud a = view_subset(rng);
    const PointCloud b = view_subset(rng);
    const RigidTransform T1 = random_rigid_transform(rng);
    const RigidTransform T2 = random_rigid_transform(rng);
    pair.source = add_noise(apply_transform(T1, a), noise, rng);
    pair.target = add_noise(apply_transform(T2, b), noise, rng);
    pair.gt = compose(T2, invert(T1));
    pair.noise_variance = noise;
    pair.partial = true;
  }
  pair.family = family;
  return pair;
}

}  // namespace

PairDataset build_dataset(Protocol protocol, const DatasetSizes& sizes, std::uint64_t seed) {
  if (sizes.points < 2) throw InvalidArgument("dataset clouds need at least 2 points");
  PairDataset ds;
  ds.protocol = protocol;
  ds.seed = seed;
  std::vector<ShapeFamily> families = all_shape_families();
  if (protocol == Protocol::kUnseen) {
    Rng rng = make_rng(seed, "family_split");
    std::shuffle(families.begin(), families.end(), rng);
    const auto half = static_cast<std::ptrdiff_t>(families.size() / 2);
    ds.train_families.assign(families.begin(), families.begin() + half);
    ds.test_families.assign(families.begin() + half, families.end());
    std::sort(ds.train_families.begin(), ds.train_families.end());
    std::sort(ds.test_families.begin(), ds.test_families.end());
  } else {
    ds.train_families = families;
    ds.test_families = families;
  }
  for (std::size_t k = 0; k < sizes.train; ++k)
    ds.train.push_back(generate_pair(protocol, ds.train_families, sizes.points, seed, "train", k));
  for (std::size_t k = 0; k < sizes.test; ++k)
    ds.test.push_back(generate_pair(protocol, ds.test_families, sizes.points, seed, "test", k));
  return ds;
}

void write_dataset(const PairDataset& dataset, const std::filesystem::path& root) {
  auto write_split = [&](const char* split, const std::vector<RegistrationPair>& pairs,
                         const std::vector<ShapeFamily>& families) {
    const auto dir = root / split;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    nlohmann::ordered_json manifest;
    manifest["format"] = "lgmreg-dataset";
    manifest["version"] = 1;
    manifest["protocol"] = to_string(dataset.protocol);
    manifest["seed"] = dataset.seed;
    manifest["split"] = split;
    std::vector<std::string> names;
    for (ShapeFamily f : families) names.push_back(to_string(f));
    manifest["families"] = names;
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& p = pairs[k];
      nlohmann::ordered_json e;
      e["id"] = k;
      e["family"] = to_string(p.family);
      e["noise_variance"] = p.noise_variance;
      e["partial"] = p.partial;
      e["source"] = pair_file(k, "source");
      e["target"] = pair_file(k, "target");
      e["gt"] = pair_file(k, "gt");
      io::write_point_cloud(dir / pair_file(k, "source"), p.source);
      io::write_point_cloud(dir / pair_file(k, "target"), p.target);
      io::write_transform(dir / pair_file(k, "gt"), p.gt);
      entries.push_back(std::move(e));
    }
    manifest["pairs"] = std::move(entries);
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest in '" + dir.string() + "'");
    out << manifest.dump(2) << '\n';
  };
  write_split("train", dataset.train, dataset.train_families);
  write_split("test", dataset.test, dataset.test_families);
}

std::vector<RegistrationPair> read_split(const std::filesystem::path& split_dir) {
  const auto path = split_dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest '" + path.string() + "': " + e.what());
  }
  std::vector<RegistrationPair> pairs;
  try {
    for (const auto& e : manifest.at("pairs")) {
      RegistrationPair p;
      p.source = io::read_point_cloud(split_dir / e.at("source").get<std::string>());
      p.target = io::read_point_cloud(split_dir / e.at("target").get<std::string>());
      p.gt = io::read_transform(split_dir / e.at("gt").get<std::string>());
      p.family = parse_shape_family(e.at("family").get<std::string>());
      p.noise_variance = e.at("noise_variance").get<double>();
      p.partial = e.at("partial").get<bool>();
      pairs.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest '" + path.string() + "': " + e.what());
  } catch (const InvalidArgument& e) {
    throw IoError("manifest '" + path.string() + "': " + e.what());
  }
  return pairs;
}

}  // namespace lgmreg
