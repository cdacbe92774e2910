#pragma once

// A single cluster of the bounded memory: binary prototype, the per-bit vote
// accumulator it is thresholded from, and running similarity statistics.
// Invariants: prototype == threshold(votes), count == votes.total.

#include <cstdint>

#include "imagehd/hv.hpp"

namespace imagehd {

struct Cluster {
  std::uint32_t id = 0;   // stable, never reused
  PackedHV prototype;     // threshold(votes) at all times
  VoteAccumulator votes;
  std::uint64_t count = 0;  // samples absorbed (== votes.total)
  double mu = 0.0;          // running mean similarity, in [0, 1]
  double sigma = 0.0;       // running mean absolute deviation, >= 0
};

}  // namespace imagehd
