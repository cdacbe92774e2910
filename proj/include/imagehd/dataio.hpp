#pragma once

// Feature-stream ingestion and generation. The binary "IHDF" container is
// bit-exact: magic, u16 version=1, u16 flags (bit 0: labels present),
// u32 n, u32 f, then n*f f32 little-endian row-major values and, when
// flagged, n u32 labels. Files with a .csv extension fall back to a CSV
// reader (optional header; the last column is a label iff named "label").

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "imagehd/item_memory.hpp"
#include "imagehd/lfsr.hpp"

namespace imagehd {

struct Dataset {
  std::vector<FeatureVector> features;
  std::optional<std::vector<std::uint32_t>> labels;
};

Dataset read_features(const std::string& path);

// Writes the binary container; read_features(write_features(x)) is bit-exact
// for f32-representable values. Errors on an empty set or a label/vector
// length mismatch.
void write_features(const std::string& path, const std::vector<FeatureVector>& features,
                    const std::optional<std::vector<std::uint32_t>>& labels);

enum class StreamOrder { kInterleaved, kSequential };

struct SyntheticSpec {
  std::uint32_t n_classes = 1;
  std::uint32_t per_class = 1;
  std::uint32_t f = 1;        // feature dimension
  double spread = 0.05;       // within-class std, relative to unit center distance
  std::uint32_t seed = 1;     // nonzero
  StreamOrder order = StreamOrder::kInterleaved;
};

// Gaussian-mixture stream with labels. Class centers are orthonormalized
// random directions scaled so pairwise center distance is 1 (orthonormal
// exactly while n_classes <= f, normalized random beyond that); samples add
// Box-Muller noise of per-coordinate std `spread`. Values are rounded
// through f32 so generated and reloaded streams match bit-exactly.
// centers_out, when given, receives the true class centers for oracle use.
Dataset gen_synthetic(const SyntheticSpec& spec,
                      std::vector<FeatureVector>* centers_out = nullptr);

}  // namespace imagehd
