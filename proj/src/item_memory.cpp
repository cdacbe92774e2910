#include "imagehd/item_memory.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace imagehd {

namespace {

constexpr char kMagic[4] = {'I', 'H', 'I', 'M'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::string& path) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw std::runtime_error(path + ": truncated item-memory snapshot");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

ItemMemory ItemMemory::build(Lfsr32& rng, std::uint32_t dim, std::uint32_t num_levels,
                             std::uint32_t num_features) {
  if (num_levels < 2) throw std::invalid_argument("ItemMemory: need at least 2 levels");
  if (num_features < 1) throw std::invalid_argument("ItemMemory: need at least 1 feature");
  if (dim < 2 * (num_levels - 1))
    throw std::invalid_argument("ItemMemory: D must be >= 2*(L-1), got D=" + std::to_string(dim) +
                                ", L=" + std::to_string(num_levels));

  ItemMemory mem;
  mem.dim_ = dim;
  mem.num_levels_ = num_levels;
  mem.num_features_ = num_features;
  mem.flips_per_step_ = dim / (2 * (num_levels - 1));

  mem.position_table_.reserve(num_features);
  for (std::uint32_t f = 0; f < num_features; ++f) mem.position_table_.push_back(random_hv(rng, dim));

  mem.level_table_.reserve(num_levels);
  mem.level_table_.push_back(random_hv(rng, dim));

  // One global draw of (L-1)*flips distinct positions, partitioned into
  // consecutive groups; disjointness is what makes the level-distance
  // invariant exact.
  const std::uint32_t n_flips = (num_levels - 1) * mem.flips_per_step_;
  std::vector<std::uint32_t> positions(dim);
  std::iota(positions.begin(), positions.end(), 0u);
  for (std::uint32_t j = 0; j < n_flips; ++j) {
    const std::uint32_t k = j + rng.uniform(dim - j);
    std::swap(positions[j], positions[k]);
  }

  for (std::uint32_t l = 1; l < num_levels; ++l) {
    PackedHV next = mem.level_table_.back();
    for (std::uint32_t j = 0; j < mem.flips_per_step_; ++j) {
      const std::uint32_t p = positions[(l - 1) * mem.flips_per_step_ + j];
      next.set_bit(p, !next.get_bit(p));
    }
    mem.level_table_.push_back(std::move(next));
  }

  mem.lo_.assign(num_features, 0.0);
  mem.hi_.assign(num_features, 0.0);
  return mem;
}

void ItemMemory::calibrate(std::span<const FeatureVector> warmup) {
  if (warmup.empty()) throw std::invalid_argument("calibrate: empty warm-up set");
  lo_.assign(num_features_, std::numeric_limits<double>::infinity());
  hi_.assign(num_features_, -std::numeric_limits<double>::infinity());
  for (std::size_t s = 0; s < warmup.size(); ++s) {
    const auto& z = warmup[s];
    if (z.size() != num_features_)
      throw std::invalid_argument("calibrate: vector " + std::to_string(s) + " has " +
                                  std::to_string(z.size()) + " features, expected " +
                                  std::to_string(num_features_));
    for (std::uint32_t i = 0; i < num_features_; ++i) {
      if (!std::isfinite(z[i]))
        throw std::invalid_argument("calibrate: non-finite value in vector " + std::to_string(s));
      lo_[i] = std::min(lo_[i], z[i]);
      hi_[i] = std::max(hi_[i], z[i]);
    }
  }
  for (std::uint32_t i = 0; i < num_features_; ++i) {
    if (lo_[i] == hi_[i]) hi_[i] = lo_[i] + 1.0;  // degenerate-feature guard
  }
  calibrated_ = true;
}

std::vector<std::uint32_t> ItemMemory::quantize(const FeatureVector& z) const {
  if (!calibrated_) throw std::logic_error("quantize: item memory is not calibrated");
  if (z.size() != num_features_)
    throw std::invalid_argument("quantize: feature count mismatch");
  std::vector<std::uint32_t> levels(num_features_);
  const double L = num_levels_;
  for (std::uint32_t i = 0; i < num_features_; ++i) {
    const double raw = std::floor((z[i] - lo_[i]) / (hi_[i] - lo_[i]) * L);
    const double clamped = std::clamp(raw, 0.0, L - 1.0);
    levels[i] = static_cast<std::uint32_t>(clamped);
  }
  return levels;
}

PackedHV ItemMemory::encode(const FeatureVector& z) const {
  const auto levels = quantize(z);
  // Accumulate bound feature hypervectors word-wise; one majority pass at
  // the end. Equivalent to bundle(bind(P[i], L[l_i]) for all i).
  std::vector<std::uint32_t> counts(dim_, 0);
  for (std::uint32_t i = 0; i < num_features_; ++i) {
    const auto& p = position_table_[i].words;
    const auto& l = level_table_[levels[i]].words;
    for (std::size_t w = 0; w < p.size(); ++w) {
      std::uint64_t bits = p[w] ^ l[w];
      while (bits) {
        counts[w * PackedHV::kWordBits + std::countr_zero(bits)]++;
        bits &= bits - 1;
      }
    }
  }
  PackedHV h(dim_);
  for (std::uint32_t i = 0; i < dim_; ++i) {
    if (2ull * counts[i] >= num_features_) h.set_bit(i, true);
  }
  return h;
}

void ItemMemory::save(const std::string& path) const {
  if (!calibrated_) throw std::logic_error("ItemMemory::save: memory is not calibrated");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os.write(kMagic, 4);
  write_le(os, kVersion);
  write_le(os, dim_);
  write_le(os, num_levels_);
  write_le(os, num_features_);
  for (const auto& h : level_table_)
    for (std::uint64_t w : h.words) write_le(os, w);
  for (const auto& h : position_table_)
    for (std::uint64_t w : h.words) write_le(os, w);
  for (double v : lo_) write_le(os, v);
  for (double v : hi_) write_le(os, v);
  if (!os) throw std::runtime_error(path + ": write failed");
}

ItemMemory ItemMemory::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": bad item-memory magic at offset 0");
  const auto version = read_le<std::uint16_t>(is, path);
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported item-memory version " + std::to_string(version));
  const auto dim = read_le<std::uint32_t>(is, path);
  const auto levels = read_le<std::uint32_t>(is, path);
  const auto features = read_le<std::uint32_t>(is, path);
  if (dim == 0 || levels < 2 || features == 0)
    throw std::runtime_error(path + ": invalid item-memory header");

  ItemMemory mem;
  mem.dim_ = dim;
  mem.num_levels_ = levels;
  mem.num_features_ = features;
  mem.flips_per_step_ = levels > 1 ? dim / (2 * (levels - 1)) : 0;
  auto read_table = [&](std::uint32_t n) {
    std::vector<PackedHV> table;
    table.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      PackedHV h(dim);
      for (auto& w : h.words) w = read_le<std::uint64_t>(is, path);
      h.canonicalize();
      table.push_back(std::move(h));
    }
    return table;
  };
  mem.level_table_ = read_table(levels);
  mem.position_table_ = read_table(features);
  mem.lo_.resize(features);
  mem.hi_.resize(features);
  for (auto& v : mem.lo_) v = read_le<double>(is, path);
  for (auto& v : mem.hi_) v = read_le<double>(is, path);
  mem.calibrated_ = true;
  return mem;
}

}  // namespace imagehd
