#include "subrl/random.hpp"

namespace subrl {

RandomStream RandomStream::derive(std::uint64_t master_seed, std::uint64_t epoch,
                                  std::uint64_t index) noexcept {
  std::uint64_t key = mix64(master_seed + 0x243f6a8885a308d3ULL);
  key = mix64(key ^ (epoch + 0x13198a2e03707344ULL));
  key = mix64(key ^ (index + 0xa4093822299f31d0ULL));
  return RandomStream(key);
}

std::uint64_t RandomStream::below(std::uint64_t n) noexcept {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = (*this)();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = (*this)();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace subrl
