#include <array>
#include <cstring>
#include <fstream>

#include "lgmreg/corrnet.hpp"
#include "lgmreg/error.hpp"

// Layout (all integers little-endian):
//   8  bytes  magic "LGMRCKPT"
//   u32       format version
//   u32       input mode (0 invariant features, 1 raw xyz)
//   u64 x 3   input dim, components, neighbors
//   u64       slot count, then per slot: u32 name length, name, u64 offset, u64 length
//   u64       parameter count, then that many IEEE-754 doubles

namespace lgmreg {
namespace {

constexpr std::array<char, 8> kMagic = {'L', 'G', 'M', 'R', 'C', 'K', 'P', 'T'};

template <typename U>
void put(std::ostream& out, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw IoError("checkpoint is truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

void put_double(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put(out, bits);
}

double get_double(std::istream& in) {
  const auto bits = get<std::uint64_t>(in);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const CorrNetParams& p = checkpoint.params;
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, checkpoint.input_mode == InputMode::kInvariantFeatures ? 0 : 1);
  put<std::uint64_t>(out, p.input_dim());
  put<std::uint64_t>(out, p.components());
  put<std::uint64_t>(out, checkpoint.neighbors);
  put<std::uint64_t>(out, p.layout().size());
  for (const ParamSlot& s : p.layout()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    put<std::uint64_t>(out, s.offset);
    put<std::uint64_t>(out, s.length());
  }
  put<std::uint64_t>(out, p.size());
  for (Eigen::Index i = 0; i < p.values().size(); ++i) put_double(out, p.values()(i));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw IoError("not a checkpoint file");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto mode = get<std::uint32_t>(in);
  if (mode > 1) throw IoError("checkpoint has an unknown input mode");
  const auto input_dim = get<std::uint64_t>(in);
  const auto components = get<std::uint64_t>(in);
  Checkpoint ck;
  ck.input_mode = mode == 0 ? InputMode::kInvariantFeatures : InputMode::kRawXyz;
  ck.neighbors = get<std::uint64_t>(in);
  if (input_dim == 0 || components == 0 || input_dim > (1u << 20) || components > (1u << 20))
    throw IoError("checkpoint has implausible dimensions");
  ck.params = CorrNetParams(input_dim, components);

  const auto slots = get<std::uint64_t>(in);
  if (slots != ck.params.layout().size()) throw IoError("checkpoint layout does not match the network");
  for (const ParamSlot& expect : ck.params.layout()) {
    const auto len = get<std::uint32_t>(in);
    if (len > 256) throw IoError("checkpoint slot name too long");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw IoError("checkpoint is truncated");
    const auto offset = get<std::uint64_t>(in);
    const auto length = get<std::uint64_t>(in);
    if (name != expect.name || offset != expect.offset || length != expect.length())
      throw IoError("checkpoint slot '" + name + "' does not match the network layout");
  }
  const auto count = get<std::uint64_t>(in);
  if (count != ck.params.size()) throw IoError("checkpoint parameter count mismatch");
  for (std::uint64_t i = 0; i < count; ++i) ck.params.values()(static_cast<Eigen::Index>(i)) = get_double(in);
  if (!ck.params.values().allFinite()) throw IoError("checkpoint has non-finite parameters");
  return ck;
}

}  // namespace lgmreg
