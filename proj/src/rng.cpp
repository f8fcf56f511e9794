#include "marketlab/rng.hpp"
#include "marketlab/errors.hpp"

namespace marketlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveParameter: return "NonPositiveParameter";
    case ErrorKind::ShareSumMismatch: return "ShareSumMismatch";
    case ErrorKind::StateOutOfBounds: return "StateOutOfBounds";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NTooSmall: return "NTooSmall";
    case ErrorKind::DegenerateArm: return "DegenerateArm";
    case ErrorKind::TooFewReplications: return "TooFewReplications";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ReplicationFailure: return "ReplicationFailure";
  }
  return "Unknown";
}

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t child_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
  return mix64(mix64(master_seed) ^ (index * 0xD1B54A32D192ED03ull + 1));
}

Philox4x32::Philox4x32(std::uint64_t seed) noexcept
    : seed_(seed),
      key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

void Philox4x32::refill() noexcept {
  std::array<std::uint32_t, 4> x = counter_;
  std::array<std::uint32_t, 2> k = key_;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, x[0], hi0, lo0);
    mulhilo(kMul1, x[2], hi1, lo1);
    x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  block_ = x;
  // 128-bit counter increment
  for (auto& word : counter_) {
    if (++word != 0) break;
  }
  next_ = 0;
}

Philox4x32::result_type Philox4x32::operator()() noexcept {
  if (next_ >= 4) refill();
  const std::uint64_t lo = block_[next_];
  const std::uint64_t hi = block_[next_ + 1];
  next_ += 2;
  return (hi << 32) | lo;
}

}  // namespace marketlab
