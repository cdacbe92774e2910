#pragma once

// Level/position lookup tables and the ID-level encoder that turns a real
// feature vector into a sample hypervector.
//
// The level table is built by cumulative disjoint bit flips so that
// hamming(L[i], L[j]) == |i-j| * floor(D / (2*(L-1))) exactly: level
// similarity mirrors scalar proximity, which the learner's admission test
// depends on. Position hypervectors are independent random draws.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "imagehd/hv.hpp"
#include "imagehd/lfsr.hpp"

namespace imagehd {

using FeatureVector = std::vector<double>;

class ItemMemory {
 public:
  // Uncalibrated memory: tables only. Requires D >= 2*(L-1) so each level
  // step flips at least one bit, L >= 2, F >= 1. Deterministic given the rng
  // state: position table first, then level_table[0], then the flip set.
  static ItemMemory build(Lfsr32& rng, std::uint32_t dim, std::uint32_t num_levels,
                          std::uint32_t num_features);

  // Derives per-feature [lo, hi) bounds as min/max over the warm-up vectors.
  // A constant feature gets hi = lo + 1 so quantization stays defined.
  void calibrate(std::span<const FeatureVector> warmup);

  // Level index per feature: clamp(floor((z - lo) / (hi - lo) * L), 0, L-1).
  // Out-of-range values clamp to the end levels; novelty detection is the
  // learner's job, not the quantizer's.
  std::vector<std::uint32_t> quantize(const FeatureVector& z) const;

  // Sample hypervector: majority bundle over bind(P[i], L[level_i]).
  PackedHV encode(const FeatureVector& z) const;

  std::uint32_t dim() const { return dim_; }
  std::uint32_t num_levels() const { return num_levels_; }
  std::uint32_t num_features() const { return num_features_; }
  std::uint32_t flips_per_step() const { return flips_per_step_; }
  bool calibrated() const { return calibrated_; }
  const PackedHV& level(std::uint32_t l) const { return level_table_[l]; }
  const PackedHV& position(std::uint32_t f) const { return position_table_[f]; }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }

  // Snapshot ("IHIM"): magic, u16 version=1, u32 D/L/F, level table then
  // position table as raw little-endian words, then lo/hi as f64 LE.
  // Saving requires a calibrated memory; loading yields a calibrated one.
  void save(const std::string& path) const;
  static ItemMemory load(const std::string& path);

 private:
  ItemMemory() = default;

  std::uint32_t dim_ = 0;
  std::uint32_t num_levels_ = 0;
  std::uint32_t num_features_ = 0;
  std::uint32_t flips_per_step_ = 0;
  std::vector<PackedHV> level_table_;
  std::vector<PackedHV> position_table_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  bool calibrated_ = false;
};

}  // namespace imagehd
