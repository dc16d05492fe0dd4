#pragma once

#include <array>
#include <cstdint>

namespace iterlil {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Pure: counter and key in, four words out.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// SplitMix64 finalizer, used only to derive substream identifiers.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Counter-based random stream. The value of the n-th draw is a pure
/// function of (master seed, stream id, n), so results never depend on which
/// thread runs a replicate or in what order.
///
/// The Philox key is the master seed; the 128-bit counter is
/// (block index, stream id).
class Stream {
 public:
  Stream(std::uint64_t master_seed, std::uint64_t stream_id) : seed_(master_seed), id_(stream_id) {}

  /// Stream of replicate `index` under `master_seed`.
  static Stream replicate(std::uint64_t master_seed, std::uint64_t index) {
    return Stream(master_seed, mix64(index ^ 0x5245504C49434154ull));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t id() const { return id_; }
  std::uint64_t draws() const { return draws_; }

  /// Independent child stream; depends on the parent's identity only, not on
  /// how far the parent has been consumed.
  static std::uint64_t child_id(std::uint64_t parent_id, std::uint64_t ordinal) {
    return mix64(parent_id ^ mix64(ordinal + 0x632BE59BD9B4E019ull));
  }
  Stream child(std::uint64_t ordinal) const { return Stream(seed_, child_id(id_, ordinal)); }

  std::uint64_t next_u64() {
    if ((draws_ & 1u) == 0) {
      const std::uint64_t block = draws_ >> 1;
      block_ = philox4x32({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                           static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(id_ >> 32)},
                          {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    }
    const std::size_t half = (draws_ & 1u) * 2;
    ++draws_;
    return (static_cast<std::uint64_t>(block_[half + 1]) << 32) | block_[half];
  }

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform() {
    constexpr double kScale = 1.0 / 4503599627370496.0;  // 2^-52
    return (static_cast<double>(next_u64() >> 12) + 0.5) * kScale;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t id_;
  std::uint64_t draws_ = 0;
  std::array<std::uint32_t, 4> block_{};
};

}  // namespace iterlil
