#pragma once

// 32-bit maximal-length Fibonacci LFSR, taps (32, 22, 2, 1), i.e. feedback
// polynomial x^32 + x^22 + x^2 + x + 1. This is the single randomness source
// of the whole engine: table construction, centroid seeding, synthetic data.
// A zero state is a dead state and is rejected up front.

#include <cstdint>
#include <stdexcept>

namespace imagehd {

class Lfsr32 {
 public:
  explicit Lfsr32(std::uint32_t seed) : state_(seed) {
    if (seed == 0) throw std::invalid_argument("Lfsr32: seed must be nonzero");
  }

  std::uint32_t state() const { return state_; }

  // Advances 32 single-bit shifts and returns the new state, so successive
  // outputs are non-overlapping windows of the underlying bit sequence.
  std::uint32_t next() {
    std::uint32_t s = state_;
    for (int i = 0; i < 32; ++i) {
      const std::uint32_t fb = ((s >> 0) ^ (s >> 10) ^ (s >> 30) ^ (s >> 31)) & 1u;
      s = (s >> 1) | (fb << 31);
    }
    state_ = s;
    return s;
  }

  // Unbiased draw in [0, n) via rejection sampling on next().
  std::uint32_t uniform(std::uint32_t n) {
    if (n == 0) throw std::invalid_argument("Lfsr32::uniform: n must be positive");
    const std::uint64_t range = 1ull << 32;
    const std::uint64_t bound = range - range % n;
    for (;;) {
      const std::uint64_t w = next();
      if (w < bound) return static_cast<std::uint32_t>(w % n);
    }
  }

 private:
  std::uint32_t state_;  // never zero
};

}  // namespace imagehd
