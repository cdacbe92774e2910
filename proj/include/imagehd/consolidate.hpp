#pragma once

// Cluster consolidation: Top-M kMeans++ seeding over prototypes in HV space
// followed by a fixed number of Lloyd-style refinement iterations whose
// centroid update is majority-threshold bundling. The seeding keeps a
// running min-distance buffer that is refreshed only against the most
// recently added centroid, so the whole pass is O(K * K') distance work.

#include <cstdint>
#include <span>
#include <vector>

#include "imagehd/cluster.hpp"
#include "imagehd/hv.hpp"
#include "imagehd/lfsr.hpp"

namespace imagehd {

struct MergeParams {
  std::uint32_t k_prime = 1;      // target cluster count
  std::uint32_t top_m = 4;        // Top-M candidate pool (clamped to K)
  std::uint32_t refine_iters = 2; // HV-space refinement iterations
};

// Indices of the m largest distances, ties broken by lower index. Single
// streaming pass over dists with an insertion buffer of size m; the result
// is ordered by (distance desc, index asc). m is clamped to dists.size().
std::vector<std::uint32_t> select_top_m(std::span<const std::uint32_t> dists, std::uint32_t m);

// Simplified kMeans++ over hypervectors: first centroid uniform, each next
// centroid drawn uniformly from the Top-M farthest points under the running
// min-Hamming buffer. Errors when k_prime > hvs.size(). When mindist_out is
// given it receives the final buffer, whose invariant (d[i] = min Hamming to
// any selected centroid) the tests check against brute force.
std::vector<PackedHV> seed_centroids(std::span<const PackedHV> hvs, const MergeParams& params,
                                     Lfsr32& rng,
                                     std::vector<std::uint32_t>* mindist_out = nullptr);

// Lloyd iterations in HV space: nearest-centroid assignment (ties to the
// lower centroid index), then each centroid becomes the majority bundle of
// its members. A centroid left empty is reseeded to the point farthest from
// its assigned centroid. iters == 0 returns the centroids unchanged.
std::vector<PackedHV> hv_refine(std::span<const PackedHV> hvs, std::vector<PackedHV> centroids,
                                std::uint32_t iters);

// Consolidates the cluster set down to at most k_prime clusters. Returns the
// input unchanged when it is already within budget. Member votes are summed
// element-wise (so prototype == threshold(votes) still holds), counts add up,
// and mu/sigma are count-weighted means. next_id supplies fresh cluster ids.
std::vector<Cluster> merge_clusters(const std::vector<Cluster>& clusters, const MergeParams& params,
                                    Lfsr32& rng, std::uint32_t& next_id);

}  // namespace imagehd
