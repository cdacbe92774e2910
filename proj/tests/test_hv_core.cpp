#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bitset>
#include <sstream>
#include <vector>

#include "imagehd/hv.hpp"
#include "imagehd/lfsr.hpp"

using namespace imagehd;

namespace {

// Independent single-bit reference of the tap equation (32, 22, 2, 1),
// simulated on an explicit bit register instead of word arithmetic.
std::uint32_t ref_lfsr_step(std::uint32_t state) {
  std::bitset<32> reg(state);
  const bool fb = reg[0] ^ reg[10] ^ reg[30] ^ reg[31];
  std::bitset<32> next = reg >> 1;
  next[31] = fb;
  return static_cast<std::uint32_t>(next.to_ulong());
}

std::uint32_t ref_lfsr_next(std::uint32_t state) {
  for (int i = 0; i < 32; ++i) state = ref_lfsr_step(state);
  return state;
}

std::uint32_t naive_hamming(const PackedHV& a, const PackedHV& b) {
  std::uint32_t n = 0;
  for (std::uint32_t i = 0; i < a.dim; ++i) n += a.get_bit(i) != b.get_bit(i);
  return n;
}

PackedHV naive_bundle(const std::vector<PackedHV>& hvs) {
  PackedHV out(hvs[0].dim);
  for (std::uint32_t i = 0; i < out.dim; ++i) {
    std::uint64_t ones = 0;
    for (const auto& h : hvs) ones += h.get_bit(i);
    out.set_bit(i, 2 * ones >= hvs.size());
  }
  return out;
}

PackedHV from_byte(std::uint8_t byte) {
  PackedHV h(8);
  h.words[0] = byte;
  return h;
}

}  // namespace

TEST_CASE("lfsr matches the hand-iterated tap reference") {
  // First outputs from seed 1, frozen from the bit-register reference.
  Lfsr32 rng(1);
  CHECK(rng.next() == 0x8a2db6dbu);
  CHECK(rng.next() == 0x909909e7u);
  CHECK(rng.next() == 0x44d2b93au);

  std::uint32_t ref = 1;
  Lfsr32 rng2(1);
  for (int i = 0; i < 100; ++i) {
    ref = ref_lfsr_next(ref);
    CHECK(rng2.next() == ref);
  }
}

TEST_CASE("lfsr determinism and state health") {
  Lfsr32 a(0xdeadbeef), b(0xdeadbeef);
  for (int i = 0; i < 1000; ++i) CHECK(a.next() == b.next());

  Lfsr32 c(42);
  for (int i = 0; i < 100000; ++i) {
    CHECK(c.next() != 0);
  }
}

TEST_CASE("lfsr rejects a zero seed") {
  CHECK_THROWS_AS(Lfsr32(0), std::invalid_argument);
}

TEST_CASE("lfsr uniform draws") {
  Lfsr32 rng(7);
  for (int i = 0; i < 100; ++i) CHECK(rng.uniform(1) == 0);
  CHECK_THROWS_AS(rng.uniform(0), std::invalid_argument);
  for (int i = 0; i < 10000; ++i) {
    const auto v = rng.uniform(13);
    CHECK(v < 13);
  }
  // Every residue reachable.
  std::vector<bool> seen(13, false);
  Lfsr32 rng2(99);
  for (int i = 0; i < 2000; ++i) seen[rng2.uniform(13)] = true;
  for (bool s : seen) CHECK(s);
}

TEST_CASE("random_hv determinism and padding canon") {
  Lfsr32 a(5), b(5);
  CHECK(random_hv(a, 4096) == random_hv(b, 4096));

  Lfsr32 c(5);
  const PackedHV h = random_hv(c, 65);
  REQUIRE(h.words.size() == 2);
  CHECK((h.words[1] & ~1ull) == 0);  // bits 1..63 of word 1 are padding

  CHECK_THROWS_AS(random_hv(c, 0), std::invalid_argument);
}

TEST_CASE("quasi-orthogonality of independent draws at D=4096") {
  Lfsr32 rng(2024);
  double sum = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const PackedHV a = random_hv(rng, 4096);
    const PackedHV b = random_hv(rng, 4096);
    const double nd = hamming(a, b) / 4096.0;
    CHECK(nd >= 0.44);
    CHECK(nd <= 0.56);
    sum += nd;
  }
  const double mean = sum / 1000.0;
  CHECK(mean >= 0.49);
  CHECK(mean <= 0.51);
}

TEST_CASE("bind is a self-inverse involution") {
  Lfsr32 rng(11);
  const PackedHV a = random_hv(rng, 1000);
  const PackedHV b = random_hv(rng, 1000);

  const PackedHV self = bind(a, a);
  CHECK(self.popcount() == 0);
  CHECK(bind(bind(a, b), b) == a);

  PackedHV c(999);
  CHECK_THROWS_AS(bind(a, c), std::invalid_argument);
}

TEST_CASE("binding decorrelates") {
  Lfsr32 rng(12);
  for (int i = 0; i < 50; ++i) {
    const PackedHV a = random_hv(rng, 4096);
    const PackedHV b = random_hv(rng, 4096);
    const double nd = hamming(bind(a, b), a) / 4096.0;
    CHECK(nd >= 0.44);
    CHECK(nd <= 0.56);
  }
}

TEST_CASE("bundle majority vote") {
  Lfsr32 rng(13);
  const PackedHV a = random_hv(rng, 256);
  const PackedHV b = random_hv(rng, 256);

  std::vector<PackedHV> single{a};
  CHECK(bundle(single) == a);

  std::vector<PackedHV> two_of_three{a, a, b};
  CHECK(bundle(two_of_three) == a);

  // Frozen 8-bit case: {00001111, 00110011, 01010101} -> 00010111.
  std::vector<PackedHV> bits{from_byte(0x0F), from_byte(0x33), from_byte(0x55)};
  CHECK(bundle(bits).words[0] == 0x17u);

  CHECK_THROWS_AS(bundle(std::span<const PackedHV>{}), std::invalid_argument);
}

TEST_CASE("bundle equals per-bit counting oracle") {
  Lfsr32 rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    const std::uint32_t dim = 1 + rng.uniform(200);
    const std::uint32_t n = 1 + rng.uniform(9);
    std::vector<PackedHV> hvs;
    for (std::uint32_t i = 0; i < n; ++i) hvs.push_back(random_hv(rng, dim));
    CHECK(bundle(hvs) == naive_bundle(hvs));
  }
}

TEST_CASE("threshold equals bundle over the same multiset") {
  Lfsr32 rng(15);
  for (int trial = 0; trial < 30; ++trial) {
    const std::uint32_t dim = 1 + rng.uniform(300);
    const std::uint32_t n = 1 + rng.uniform(12);
    std::vector<PackedHV> hvs;
    VoteAccumulator acc(dim);
    for (std::uint32_t i = 0; i < n; ++i) {
      hvs.push_back(random_hv(rng, dim));
      accumulate(acc, hvs.back());
    }
    CHECK(acc.total == n);
    CHECK(threshold(acc) == bundle(hvs));
  }
}

TEST_CASE("accumulate/threshold unanimity and strict majority") {
  Lfsr32 rng(16);
  const PackedHV h = random_hv(rng, 100);
  VoteAccumulator acc(100);
  for (int i = 0; i < 7; ++i) accumulate(acc, h);
  CHECK(threshold(acc) == h);

  // counts = [1, 2], total = 3 -> bits [0, 1].
  VoteAccumulator small(2);
  small.counts = {1, 2};
  small.total = 3;
  const PackedHV out = threshold(small);
  CHECK_FALSE(out.get_bit(0));
  CHECK(out.get_bit(1));

  VoteAccumulator empty(8);
  CHECK_THROWS_AS(threshold(empty), std::invalid_argument);
}

TEST_CASE("even-count majority ties resolve to 1") {
  VoteAccumulator acc(3);
  acc.counts = {1, 2, 0};
  acc.total = 2;
  const PackedHV out = threshold(acc);
  CHECK(out.get_bit(0));  // 2*1 == 2: tie -> 1
  CHECK(out.get_bit(1));
  CHECK_FALSE(out.get_bit(2));
}

TEST_CASE("permute is a cyclic shift") {
  Lfsr32 rng(17);
  const PackedHV h = random_hv(rng, 100);
  CHECK(permute(h, 0) == h);
  CHECK(permute(h, 100) == h);
  CHECK(permute(permute(h, 37), 100 - 37) == h);
  CHECK(permute(h, -3) == permute(h, 97));

  PackedHV single(8);
  single.set_bit(0, true);
  const PackedHV shifted = permute(single, 3);
  for (std::uint32_t i = 0; i < 8; ++i) CHECK(shifted.get_bit(i) == (i == 3));
}

TEST_CASE("permutation preserves population count") {
  Lfsr32 rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint32_t dim = 1 + rng.uniform(4096);
    const PackedHV h = random_hv(rng, dim);
    const std::int64_t rho = static_cast<std::int64_t>(rng.uniform(10000)) - 5000;
    CHECK(permute(h, rho).popcount() == h.popcount());
  }
}

TEST_CASE("hamming distance basics") {
  Lfsr32 rng(19);
  const PackedHV h = random_hv(rng, 777);
  CHECK(hamming(h, h) == 0);
  CHECK(hamming(h, bind(h, ones_hv(777))) == 777);

  PackedHV other(778);
  CHECK_THROWS_AS(hamming(h, other), std::invalid_argument);
}

TEST_CASE("packed hamming equals the bit-loop oracle") {
  Lfsr32 rng(20);
  for (const std::uint32_t dim : {64u, 100u, 1024u, 4096u}) {
    for (int trial = 0; trial < 100; ++trial) {
      const PackedHV a = random_hv(rng, dim);
      const PackedHV b = random_hv(rng, dim);
      CHECK(hamming(a, b) == naive_hamming(a, b));
    }
  }
}

TEST_CASE("normalized similarity complements normalized distance") {
  Lfsr32 rng(21);
  const PackedHV a = random_hv(rng, 2048);
  const PackedHV b = random_hv(rng, 2048);
  CHECK(normalized_similarity(a, b) ==
        doctest::Approx(1.0 - hamming(a, b) / 2048.0).epsilon(1e-15));
  CHECK(normalized_similarity(a, a) == 1.0);
}

TEST_CASE("debug dump format") {
  PackedHV h(65);
  h.words[0] = 0x0123456789abcdefull;
  h.words[1] = 1;
  std::ostringstream os;
  dump_hv(os, h);
  CHECK(os.str() == "65\n0123456789abcdef 0000000000000001\n");
}
