#pragma once

#include <cstdint>
#include <limits>

namespace subrl {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator (SplitMix64). A stream is fully determined by the
/// key it was derived from, so batches can be sampled in any order or in
/// parallel and still reproduce bit-for-bit.
///
/// Satisfies UniformRandomBitGenerator, so <random> distributions work too.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) noexcept : counter_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  /// Stream for rollout `index` of `epoch` under `master_seed`.
  static RandomStream derive(std::uint64_t master_seed, std::uint64_t epoch, std::uint64_t index) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return mix64(counter_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  std::uint64_t counter_;
};

/// Epoch tag reserved for evaluation rollouts, distinct from any training epoch.
inline constexpr std::uint64_t kEvaluationEpoch = std::numeric_limits<std::uint64_t>::max();

}  // namespace subrl
