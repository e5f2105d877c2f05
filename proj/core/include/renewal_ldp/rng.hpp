#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace rldp {

/// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3").
///
/// The 64-bit key is the master seed. The 128-bit counter is split into a
/// 64-bit block index (low words) and a 64-bit stream id (high words), so
/// `Philox::substream(seed, i)` yields independent, reproducible streams for
/// parallel workers regardless of scheduling.
class Philox {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static Philox substream(std::uint64_t master_seed, std::uint64_t stream) noexcept {
    return Philox(master_seed, stream);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (used_ >= 4) {
      buffer_ = generate_block(block_++);
      used_ = 0;
    }
    const std::uint64_t lo = buffer_[used_];
    const std::uint64_t hi = buffer_[used_ + 1];
    used_ += 2;
    return (hi << 32) | lo;
  }

  /// Raw Philox4x32-10 bijection; exposed for known-answer tests.
  static Block bijection(Block counter, std::array<std::uint32_t, 2> key) noexcept {
    constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = std::uint64_t{kM0} * counter[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * counter[2];
      counter = {static_cast<std::uint32_t>(p1 >> 32) ^ counter[1] ^ key[0],
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ counter[3] ^ key[1],
                 static_cast<std::uint32_t>(p0)};
    }
    return counter;
  }

 private:
  Block generate_block(std::uint64_t block) const noexcept {
    return bijection({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                     key_);
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  int used_ = 4;
};

/// Uniform double in the open interval ]0,1[ built from the top 53 bits.
inline double uniform_open01(Philox& rng) noexcept {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace rldp
