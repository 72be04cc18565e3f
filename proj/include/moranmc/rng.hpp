#pragma once

// Counter-based random number generation (Philox4x32-10, Salmon et al.,
// "Parallel random numbers: as easy as 1, 2, 3", SC 2011).
//
// A stream is addressed by (master_seed, stream_id). The master seed is the
// cipher key, the stream id sits in the upper half of the 128-bit counter,
// and the lower half counts blocks within the stream. Distinct stream ids
// therefore give non-overlapping, statistically independent sequences, and
// a replicate's sequence depends only on its own (seed, index) pair -- never
// on thread scheduling.

#include <array>
#include <cmath>
#include <cstdint>

namespace moranmc {

/// Address of one replicate's random stream.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate_index = 0;
};

class Philox4x32 {
 public:
  Philox4x32(std::uint64_t key, std::uint64_t stream_id) noexcept
      : counter_{0u, 0u, static_cast<std::uint32_t>(stream_id),
                 static_cast<std::uint32_t>(stream_id >> 32)},
        key_{static_cast<std::uint32_t>(key),
             static_cast<std::uint32_t>(key >> 32)} {}

  explicit Philox4x32(const SeedSpec& seed) noexcept
      : Philox4x32(seed.master_seed, seed.replicate_index) {}

  /// Next 64 random bits.
  std::uint64_t next_u64() noexcept {
    if (block_pos_ == 0) {
      refill();
      block_pos_ = 1;
      return (static_cast<std::uint64_t>(block_[1]) << 32) | block_[0];
    }
    block_pos_ = 0;
    return (static_cast<std::uint64_t>(block_[3]) << 32) | block_[2];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; never returns 0.
  double uniform01_pos() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Exponential with the given rate; finite, never NaN.
  double exponential(double rate) noexcept {
    return -std::log(uniform01_pos()) / rate;
  }

  /// One raw 4x32 block for the given counter/key (10 rounds). Exposed for
  /// known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = kMul0 * static_cast<std::uint64_t>(ctr[0]);
      const std::uint64_t p1 = kMul1 * static_cast<std::uint64_t>(ctr[2]);
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  void refill() noexcept {
    block_ = block(counter_, key_);
    // 64-bit increment of the in-stream block counter.
    if (++counter_[0] == 0) ++counter_[1];
  }

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 0;
};

using Rng = Philox4x32;

inline Rng make_rng(const SeedSpec& seed) noexcept { return Rng(seed); }

}  // namespace moranmc
