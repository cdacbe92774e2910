#include "imagehd/consolidate.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace imagehd {

std::vector<std::uint32_t> select_top_m(std::span<const std::uint32_t> dists, std::uint32_t m) {
  const std::uint32_t k = static_cast<std::uint32_t>(dists.size());
  m = std::min(m, k);
  // Insertion buffer ordered by (distance desc, index asc). A new entry only
  // displaces a strictly smaller one, so on equal distances the earlier
  // index stays.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> buf;  // (dist, idx)
  buf.reserve(m + 1);
  for (std::uint32_t i = 0; i < k; ++i) {
    const std::uint32_t d = dists[i];
    if (buf.size() == m && d <= buf.back().first) continue;
    auto pos = buf.begin();
    while (pos != buf.end() && pos->first >= d) ++pos;
    buf.insert(pos, {d, i});
    if (buf.size() > m) buf.pop_back();
  }
  std::vector<std::uint32_t> out;
  out.reserve(buf.size());
  for (const auto& [d, i] : buf) out.push_back(i);
  return out;
}

std::vector<PackedHV> seed_centroids(std::span<const PackedHV> hvs, const MergeParams& params,
                                     Lfsr32& rng, std::vector<std::uint32_t>* mindist_out) {
  const std::uint32_t k = static_cast<std::uint32_t>(hvs.size());
  if (k == 0) throw std::invalid_argument("seed_centroids: empty input");
  if (params.k_prime == 0) throw std::invalid_argument("seed_centroids: k_prime must be positive");
  if (params.k_prime > k)
    throw std::invalid_argument("seed_centroids: k_prime " + std::to_string(params.k_prime) +
                                " exceeds input size " + std::to_string(k));

  std::vector<PackedHV> centroids;
  centroids.reserve(params.k_prime);
  centroids.push_back(hvs[rng.uniform(k)]);

  std::vector<std::uint32_t> mindist(k);
  for (std::uint32_t i = 0; i < k; ++i) mindist[i] = hamming(hvs[i], centroids[0]);

  for (std::uint32_t m = 1; m < params.k_prime; ++m) {
    const auto top = select_top_m(mindist, params.top_m);
    const std::uint32_t u = top[rng.uniform(static_cast<std::uint32_t>(top.size()))];
    centroids.push_back(hvs[u]);
    // Running min only needs a pass against the newest centroid.
    for (std::uint32_t i = 0; i < k; ++i)
      mindist[i] = std::min(mindist[i], hamming(hvs[i], centroids.back()));
  }
  if (mindist_out) *mindist_out = std::move(mindist);
  return centroids;
}

namespace {

// Nearest centroid by Hamming, ties to the lower centroid index.
std::pair<std::uint32_t, std::uint32_t> nearest(const PackedHV& h,
                                                std::span<const PackedHV> centroids) {
  std::uint32_t best = 0;
  std::uint32_t best_d = hamming(h, centroids[0]);
  for (std::uint32_t c = 1; c < centroids.size(); ++c) {
    const std::uint32_t d = hamming(h, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return {best, best_d};
}

}  // namespace

std::vector<PackedHV> hv_refine(std::span<const PackedHV> hvs, std::vector<PackedHV> centroids,
                                std::uint32_t iters) {
  if (centroids.empty() || hvs.empty()) return centroids;
  const std::uint32_t k = static_cast<std::uint32_t>(hvs.size());
  const std::uint32_t kp = static_cast<std::uint32_t>(centroids.size());

  std::vector<std::uint32_t> assign(k), dist(k);
  for (std::uint32_t it = 0; it < iters; ++it) {
    std::vector<std::uint32_t> members(kp, 0);
    for (std::uint32_t i = 0; i < k; ++i) {
      auto [c, d] = nearest(hvs[i], centroids);
      assign[i] = c;
      dist[i] = d;
      ++members[c];
    }
    // Empty-centroid repair: steal the point farthest from its assigned
    // centroid (ties to the lower point index).
    for (std::uint32_t e = 0; e < kp; ++e) {
      if (members[e] != 0) continue;
      std::uint32_t far = 0;
      std::uint32_t far_d = 0;
      bool found = false;
      for (std::uint32_t i = 0; i < k; ++i) {
        if (members[assign[i]] <= 1) continue;  // do not empty a singleton
        if (!found || dist[i] > far_d) {
          far = i;
          far_d = dist[i];
          found = true;
        }
      }
      if (!found) continue;
      --members[assign[far]];
      assign[far] = e;
      dist[far] = 0;
      ++members[e];
    }
    for (std::uint32_t c = 0; c < kp; ++c) {
      if (members[c] == 0) continue;
      VoteAccumulator acc(hvs[0].dim);
      for (std::uint32_t i = 0; i < k; ++i) {
        if (assign[i] == c) accumulate(acc, hvs[i]);
      }
      centroids[c] = threshold(acc);
    }
  }
  return centroids;
}

std::vector<Cluster> merge_clusters(const std::vector<Cluster>& clusters, const MergeParams& params,
                                    Lfsr32& rng, std::uint32_t& next_id) {
  const std::uint32_t k = static_cast<std::uint32_t>(clusters.size());
  if (k <= params.k_prime) return clusters;

  std::vector<PackedHV> protos;
  protos.reserve(k);
  for (const auto& c : clusters) protos.push_back(c.prototype);

  auto centroids = seed_centroids(protos, params, rng);
  centroids = hv_refine(protos, std::move(centroids), params.refine_iters);

  const std::uint32_t kp = static_cast<std::uint32_t>(centroids.size());
  std::vector<std::vector<std::uint32_t>> members(kp);
  for (std::uint32_t i = 0; i < k; ++i) {
    auto [c, d] = nearest(protos[i], centroids);
    members[c].push_back(i);
  }

  std::vector<Cluster> merged;
  merged.reserve(kp);
  for (std::uint32_t c = 0; c < kp; ++c) {
    if (members[c].empty()) continue;
    Cluster out;
    out.id = next_id++;
    out.votes = VoteAccumulator(protos[0].dim);
    double mu_sum = 0.0, sigma_sum = 0.0;
    for (std::uint32_t i : members[c]) {
      const Cluster& src = clusters[i];
      accumulate(out.votes, src.votes);
      out.count += src.count;
      mu_sum += static_cast<double>(src.count) * src.mu;
      sigma_sum += static_cast<double>(src.count) * src.sigma;
    }
    out.prototype = threshold(out.votes);
    out.mu = mu_sum / static_cast<double>(out.count);
    out.sigma = sigma_sum / static_cast<double>(out.count);
    merged.push_back(std::move(out));
  }
  return merged;
}

}  // namespace imagehd
