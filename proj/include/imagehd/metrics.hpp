#pragma once

// Unsupervised clustering evaluation over (assignment, label) pairs:
// optimal-matching accuracy (Hungarian assignment), purity, and normalized
// mutual information with geometric-mean normalization.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace imagehd {

struct ContingencyMatrix {
  std::uint32_t n_clusters = 0;       // rows R
  std::uint32_t n_classes = 0;        // columns C
  std::vector<std::uint64_t> counts;  // row-major R x C
  std::uint64_t total = 0;

  std::uint64_t at(std::uint32_t r, std::uint32_t c) const { return counts[r * n_classes + c]; }
  std::uint64_t& at(std::uint32_t r, std::uint32_t c) { return counts[r * n_classes + c]; }
};

// Co-occurrence counts; cluster and class ids are densified in
// first-appearance order. Errors on empty or mismatched inputs.
ContingencyMatrix build_contingency(std::span<const std::uint32_t> assignments,
                                    std::span<const std::uint32_t> labels);

// Best injective cluster-to-class matching (Hungarian assignment on the
// negated counts, padded square with zeros), divided by the sample count.
double accuracy(const ContingencyMatrix& cm);

// Sum of per-cluster majority counts over the sample count.
double purity(const ContingencyMatrix& cm);

// I(U;V) / sqrt(H(U) * H(V)) with natural-log entropies. When either
// marginal entropy is zero: 1 if both partitions are the identical single
// block, else 0. Clamped to [0, 1] against rounding.
double nmi(const ContingencyMatrix& cm);

struct MetricsReport {
  std::uint64_t n_samples = 0;
  std::uint32_t n_clusters = 0;
  std::uint32_t n_classes = 0;
  double acc = 0.0;
  double purity = 0.0;
  double nmi = 0.0;
};

MetricsReport evaluate(std::span<const std::uint32_t> assignments,
                       std::span<const std::uint32_t> labels);

// {"n_samples":..,"n_clusters":..,"n_classes":..,"acc":..,"purity":..,
//  "nmi":..} with metric values fixed to 6 decimals.
std::string to_json(const MetricsReport& report);

}  // namespace imagehd
