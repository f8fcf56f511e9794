#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace marketlab {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The stream is a pure function of (key, counter), so a replication's
/// generator can be rebuilt from its seed alone and independent streams
/// never share state. Satisfies UniformRandomBitGenerator with 64-bit output.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  explicit Philox4x32(std::uint64_t seed = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  int next_ = 4;
};

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of the child stream for replication `index` under `master_seed`.
std::uint64_t child_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

}  // namespace marketlab
