#include "imagehd/hv.hpp"

#include <bit>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace imagehd {

namespace {

void require_same_dim(const PackedHV& a, const PackedHV& b, const char* op) {
  if (a.dim != b.dim)
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(a.dim) + " vs " + std::to_string(b.dim) + ")");
}

}  // namespace

std::uint32_t PackedHV::popcount() const {
  std::uint64_t n = 0;
  for (std::uint64_t w : words) n += std::popcount(w);
  return static_cast<std::uint32_t>(n);
}

PackedHV random_hv(Lfsr32& rng, std::uint32_t dim) {
  if (dim == 0) throw std::invalid_argument("random_hv: dim must be positive");
  PackedHV h(dim);
  for (auto& w : h.words) {
    const std::uint64_t lo = rng.next();
    const std::uint64_t hi = rng.next();
    w = lo | (hi << 32);
  }
  h.canonicalize();
  return h;
}

PackedHV ones_hv(std::uint32_t dim) {
  if (dim == 0) throw std::invalid_argument("ones_hv: dim must be positive");
  PackedHV h(dim);
  for (auto& w : h.words) w = ~0ull;
  h.canonicalize();
  return h;
}

PackedHV bind(const PackedHV& a, const PackedHV& b) {
  require_same_dim(a, b, "bind");
  PackedHV out(a.dim);
  for (std::size_t w = 0; w < out.words.size(); ++w) out.words[w] = a.words[w] ^ b.words[w];
  return out;
}

PackedHV bundle(std::span<const PackedHV> hvs) {
  if (hvs.empty()) throw std::invalid_argument("bundle: empty input");
  const std::uint32_t dim = hvs.front().dim;
  for (const auto& h : hvs) require_same_dim(hvs.front(), h, "bundle");

  // Standalone per-bit counting path, deliberately not routed through
  // VoteAccumulator so the two can cross-check each other.
  std::vector<std::uint32_t> counts(dim, 0);
  for (const auto& h : hvs) {
    for (std::uint32_t i = 0; i < dim; ++i) counts[i] += h.get_bit(i);
  }
  const std::uint64_t n = hvs.size();
  PackedHV out(dim);
  for (std::uint32_t i = 0; i < dim; ++i) {
    if (2ull * counts[i] >= n) out.set_bit(i, true);
  }
  return out;
}

void accumulate(VoteAccumulator& acc, const PackedHV& h) {
  if (acc.dim != h.dim) throw std::invalid_argument("accumulate: dimension mismatch");
  if (acc.total == ~0ull) throw std::overflow_error("accumulate: vote total overflow");
  for (std::uint32_t w = 0; w < h.words.size(); ++w) {
    std::uint64_t bits = h.words[w];
    while (bits) {
      const int b = std::countr_zero(bits);
      ++acc.counts[w * PackedHV::kWordBits + b];
      bits &= bits - 1;
    }
  }
  ++acc.total;
}

void accumulate(VoteAccumulator& acc, const VoteAccumulator& other) {
  if (acc.dim != other.dim) throw std::invalid_argument("accumulate: dimension mismatch");
  for (std::uint32_t i = 0; i < acc.dim; ++i) acc.counts[i] += other.counts[i];
  acc.total += other.total;
}

PackedHV threshold(const VoteAccumulator& acc) {
  if (acc.total == 0) throw std::invalid_argument("threshold: empty accumulator");
  PackedHV out(acc.dim);
  for (std::uint32_t i = 0; i < acc.dim; ++i) {
    if (2ull * acc.counts[i] >= acc.total) out.set_bit(i, true);
  }
  return out;
}

PackedHV permute(const PackedHV& h, std::int64_t rho) {
  const std::int64_t d = h.dim;
  const std::uint32_t shift = static_cast<std::uint32_t>(((rho % d) + d) % d);
  PackedHV out(h.dim);
  for (std::uint32_t i = 0; i < h.dim; ++i) {
    if (h.get_bit(i)) out.set_bit((i + shift) % h.dim, true);
  }
  return out;
}

std::uint32_t hamming(const PackedHV& a, const PackedHV& b) {
  require_same_dim(a, b, "hamming");
  std::uint64_t n = 0;
  for (std::size_t w = 0; w < a.words.size(); ++w) n += std::popcount(a.words[w] ^ b.words[w]);
  return static_cast<std::uint32_t>(n);
}

double normalized_similarity(const PackedHV& a, const PackedHV& b) {
  return 1.0 - static_cast<double>(hamming(a, b)) / static_cast<double>(a.dim);
}

void dump_hv(std::ostream& os, const PackedHV& h) {
  os << h.dim << '\n';
  char buf[17];
  for (std::size_t w = 0; w < h.words.size(); ++w) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.words[w]));
    if (w) os << ' ';
    os << buf;
  }
  os << '\n';
}

}  // namespace imagehd
