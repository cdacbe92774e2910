#pragma once

// Packed binary hypervectors and the HDC algebra: bind (XOR), bundle
// (per-bit majority), permutation (cyclic shift), Hamming distance, and the
// per-bit vote accumulator used for streaming bundling.
//
// Layout: bit i of a D-bit hypervector lives in 64-bit word i/64 at position
// i%64 (bit 0 = LSB of word 0). Bits at positions >= D in the final word are
// always zero; every operation returns vectors in this canonical form.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "imagehd/lfsr.hpp"

namespace imagehd {

struct PackedHV {
  static constexpr std::uint32_t kWordBits = 64;

  std::uint32_t dim = 0;
  std::vector<std::uint64_t> words;

  PackedHV() = default;
  explicit PackedHV(std::uint32_t d) : dim(d), words(word_count(d), 0) {}

  static std::uint32_t word_count(std::uint32_t d) {
    return (d + kWordBits - 1) / kWordBits;
  }

  bool get_bit(std::uint32_t i) const {
    return (words[i / kWordBits] >> (i % kWordBits)) & 1u;
  }
  void set_bit(std::uint32_t i, bool v) {
    const std::uint64_t mask = 1ull << (i % kWordBits);
    if (v)
      words[i / kWordBits] |= mask;
    else
      words[i / kWordBits] &= ~mask;
  }

  // Mask of the meaningful bits of the final word.
  std::uint64_t tail_mask() const {
    const std::uint32_t used = dim % kWordBits;
    return used == 0 ? ~0ull : (1ull << used) - 1;
  }

  // Zeroes padding bits beyond dim in the final word.
  void canonicalize() {
    if (!words.empty()) words.back() &= tail_mask();
  }

  std::uint32_t popcount() const;

  friend bool operator==(const PackedHV&, const PackedHV&) = default;
};

// Per-bit ones-counter for streaming majority bundling. A cluster prototype
// is always threshold() of its accumulator, which makes updates
// order-insensitive up to tie bits.
struct VoteAccumulator {
  std::uint32_t dim = 0;
  std::vector<std::uint32_t> counts;  // counts[i] <= total
  std::uint64_t total = 0;

  VoteAccumulator() = default;
  explicit VoteAccumulator(std::uint32_t d) : dim(d), counts(d, 0) {}
};

// Fresh hypervector with every bit drawn from the rng word stream (two 32-bit
// draws per 64-bit word, low half first); padding bits zeroed.
PackedHV random_hv(Lfsr32& rng, std::uint32_t dim);

// All-ones hypervector (canonical padding).
PackedHV ones_hv(std::uint32_t dim);

// Element-wise XOR. bind(bind(a, b), b) == a.
PackedHV bind(const PackedHV& a, const PackedHV& b);

// Per-bit majority vote; ties (even counts split exactly in half) resolve
// to 1. Errors on an empty input.
PackedHV bundle(std::span<const PackedHV> hvs);

// Adds each bit of h to the accumulator and bumps the total.
void accumulate(VoteAccumulator& acc, const PackedHV& h);

// Sums another accumulator element-wise (used when merging clusters).
void accumulate(VoteAccumulator& acc, const VoteAccumulator& other);

// Majority vote over the accumulated multiset: bit i = 1 iff
// 2*counts[i] >= total (ties to 1). Errors when total == 0.
PackedHV threshold(const VoteAccumulator& acc);

// Cyclic shift: result bit (i + rho) mod D = h bit i. rho is taken mod D;
// negative shifts rotate the other way.
PackedHV permute(const PackedHV& h, std::int64_t rho);

// Exact count of differing bits (word-wise XOR + popcount).
std::uint32_t hamming(const PackedHV& a, const PackedHV& b);

// 1 - hamming/D, the similarity used by the learner.
double normalized_similarity(const PackedHV& a, const PackedHV& b);

// Debug dump: D as decimal, newline, then ceil(D/64) lowercase-hex 16-digit
// words separated by single spaces, newline.
void dump_hv(std::ostream& os, const PackedHV& h);

}  // namespace imagehd
