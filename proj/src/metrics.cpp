#include "imagehd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace imagehd {

ContingencyMatrix build_contingency(std::span<const std::uint32_t> assignments,
                                    std::span<const std::uint32_t> labels) {
  if (assignments.empty()) throw std::invalid_argument("build_contingency: empty input");
  if (assignments.size() != labels.size())
    throw std::invalid_argument("build_contingency: " + std::to_string(assignments.size()) +
                                " assignments vs " + std::to_string(labels.size()) + " labels");

  std::unordered_map<std::uint32_t, std::uint32_t> row_of, col_of;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> cells;
  cells.reserve(assignments.size());
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const auto [rit, r_new] = row_of.try_emplace(assignments[i], row_of.size());
    const auto [cit, c_new] = col_of.try_emplace(labels[i], col_of.size());
    cells.emplace_back(rit->second, cit->second);
  }

  ContingencyMatrix cm;
  cm.n_clusters = static_cast<std::uint32_t>(row_of.size());
  cm.n_classes = static_cast<std::uint32_t>(col_of.size());
  cm.counts.assign(static_cast<std::size_t>(cm.n_clusters) * cm.n_classes, 0);
  cm.total = assignments.size();
  for (const auto& [r, c] : cells) ++cm.at(r, c);
  return cm;
}

namespace {

// Hungarian algorithm (potentials + augmenting paths, O(n^3)) for a square
// min-cost assignment. Returns the minimum total cost.
std::int64_t hungarian_min_cost(const std::vector<std::vector<std::int64_t>>& cost) {
  const std::size_t n = cost.size();
  // 1-based arrays; column 0 is the virtual start.
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<std::int64_t> minv(n + 1, std::numeric_limits<std::int64_t>::max());
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      std::int64_t delta = std::numeric_limits<std::int64_t>::max();
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::int64_t total = 0;
  for (std::size_t j = 1; j <= n; ++j) total += cost[match[j] - 1][j - 1];
  return total;
}

}  // namespace

double accuracy(const ContingencyMatrix& cm) {
  if (cm.total == 0) throw std::invalid_argument("accuracy: empty matrix");
  const std::size_t n = std::max(cm.n_clusters, cm.n_classes);
  std::vector<std::vector<std::int64_t>> cost(n, std::vector<std::int64_t>(n, 0));
  for (std::uint32_t r = 0; r < cm.n_clusters; ++r)
    for (std::uint32_t c = 0; c < cm.n_classes; ++c)
      cost[r][c] = -static_cast<std::int64_t>(cm.at(r, c));
  const std::int64_t matched = -hungarian_min_cost(cost);
  return static_cast<double>(matched) / static_cast<double>(cm.total);
}

double purity(const ContingencyMatrix& cm) {
  if (cm.total == 0) throw std::invalid_argument("purity: empty matrix");
  std::uint64_t sum = 0;
  for (std::uint32_t r = 0; r < cm.n_clusters; ++r) {
    std::uint64_t best = 0;
    for (std::uint32_t c = 0; c < cm.n_classes; ++c) best = std::max(best, cm.at(r, c));
    sum += best;
  }
  return static_cast<double>(sum) / static_cast<double>(cm.total);
}

double nmi(const ContingencyMatrix& cm) {
  if (cm.total == 0) throw std::invalid_argument("nmi: empty matrix");
  const double n = static_cast<double>(cm.total);

  std::vector<std::uint64_t> row(cm.n_clusters, 0), col(cm.n_classes, 0);
  for (std::uint32_t r = 0; r < cm.n_clusters; ++r)
    for (std::uint32_t c = 0; c < cm.n_classes; ++c) {
      row[r] += cm.at(r, c);
      col[c] += cm.at(r, c);
    }

  auto entropy = [&](const std::vector<std::uint64_t>& marginal) {
    double h = 0.0;
    for (std::uint64_t m : marginal) {
      if (m == 0) continue;
      const double p = static_cast<double>(m) / n;
      h -= p * std::log(p);
    }
    return h;
  };
  const double hu = entropy(row);
  const double hv = entropy(col);
  if (hu == 0.0 || hv == 0.0) {
    // Both partitions a single block: identical trivial partitions.
    return (hu == 0.0 && hv == 0.0) ? 1.0 : 0.0;
  }

  double mi = 0.0;
  for (std::uint32_t r = 0; r < cm.n_clusters; ++r)
    for (std::uint32_t c = 0; c < cm.n_classes; ++c) {
      const std::uint64_t cnt = cm.at(r, c);
      if (cnt == 0) continue;
      const double p = static_cast<double>(cnt) / n;
      mi += p * std::log(static_cast<double>(cnt) * n /
                         (static_cast<double>(row[r]) * static_cast<double>(col[c])));
    }
  return std::clamp(mi / std::sqrt(hu * hv), 0.0, 1.0);
}

MetricsReport evaluate(std::span<const std::uint32_t> assignments,
                       std::span<const std::uint32_t> labels) {
  const ContingencyMatrix cm = build_contingency(assignments, labels);
  return {.n_samples = cm.total,
          .n_clusters = cm.n_clusters,
          .n_classes = cm.n_classes,
          .acc = accuracy(cm),
          .purity = purity(cm),
          .nmi = nmi(cm)};
}

std::string to_json(const MetricsReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"n_samples\":%llu,\"n_clusters\":%u,\"n_classes\":%u,"
                "\"acc\":%.6f,\"purity\":%.6f,\"nmi\":%.6f}",
                static_cast<unsigned long long>(report.n_samples), report.n_clusters,
                report.n_classes, report.acc, report.purity, report.nmi);
  return buf;
}

}  // namespace imagehd
