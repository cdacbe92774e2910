#pragma once

// Single-pass streaming continual learner over a bounded cluster set:
// encode, similarity search, admission decision (novelty test), cluster
// update or creation, and periodic consolidation. No sample is ever stored
// or replayed; per-cluster state is a vote accumulator plus two scalars.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imagehd/cluster.hpp"
#include "imagehd/consolidate.hpp"
#include "imagehd/item_memory.hpp"
#include "imagehd/lfsr.hpp"

namespace imagehd {

struct LearnerConfig {
  // The admission threshold is theta = mu - beta*sigma. sigma tracks the
  // mean absolute deviation of absorbed similarities, so beta is measured
  // in MAD units: at beta = 5 the cut sits ~4 standard deviations below the
  // running mean, keeping spurious singleton clusters rare while the
  // within/between-cluster similarity gap spans tens of MADs.
  double beta = 5.0;               // novelty margin, in sigma units
  double alpha = 0.1;              // EMA rate for mu/sigma, in (0, 1]
  std::uint32_t t_merge = 64;      // merge period (samples)
  std::uint32_t t0 = 256;          // earliest merge position
  std::uint32_t c_max = 16;        // cluster capacity after consolidation
  // Priors of a freshly created cluster: theta starts at 0.885 - 5*0.008 =
  // 0.845, above the similarity of unrelated encoded samples (~0.83 and
  // below) yet under same-source encounters (~0.86+), and adapts from there.
  double mu_init = 0.885;
  double sigma_init = 0.008;
  std::uint32_t top_m = 4;         // consolidation Top-M pool
  std::uint32_t refine_iters = 2;  // consolidation refinement iterations
  std::uint32_t seed = 1;          // LFSR seed, nonzero

  // Throws std::invalid_argument on any out-of-range field.
  void validate() const;
};

struct AssignmentEvent {
  std::uint64_t t = 0;          // 1-based stream position
  std::uint32_t cluster_id = 0; // assigned (or newly created) cluster
  double similarity = 0.0;      // best pre-decision match s*; 0 on empty set
  bool created = false;
  double threshold = 1.0;       // admission threshold theta; 1 on empty set
};

struct MergeEvent {
  std::uint64_t t = 0;
  std::uint32_t k_before = 0;
  std::uint32_t k_after = 0;
  std::uint32_t seed_state = 0;  // rng state when the merge started
};

struct LearnerState {
  std::vector<Cluster> clusters;  // ordered by ascending id
  std::uint64_t t = 0;            // samples consumed
  std::uint64_t t_resumed = 0;    // t at snapshot load; events before it live in the log file
  std::uint32_t next_id = 0;
  Lfsr32 rng;
  std::vector<AssignmentEvent> events;  // one per sample since t_resumed, append-only
  std::vector<MergeEvent> merges;

  explicit LearnerState(Lfsr32 r) : rng(r) {}
};

struct SearchResult {
  double similarity = 0.0;
  std::uint32_t id = 0;
  std::uint32_t index = 0;     // position in state.clusters
  std::uint32_t distance = 0;  // raw Hamming
};

// Best match by similarity 1 - hamming/D; ties broken by lowest cluster id.
// Empty cluster set yields nullopt so the caller can create cluster 0.
std::optional<SearchResult> similarity_search(const LearnerState& state, const PackedHV& q);

// One full step: encode, search, admit-or-create, update statistics with the
// pre-update mean, advance t, and consolidate when the trigger fires.
AssignmentEvent process_sample(const LearnerConfig& config, LearnerState& state,
                               const FeatureVector& z, const ItemMemory& mem);

// Applies process_sample over the stream in order; a failure is rethrown
// with the offending stream index attached.
LearnerState run_stream(const LearnerConfig& config, const ItemMemory& mem,
                        std::span<const FeatureVector> features, Lfsr32 rng);
LearnerState run_stream(const LearnerConfig& config, const ItemMemory& mem,
                        std::span<const FeatureVector> features);

// Audits structural invariants (prototype/vote coherence, count == total,
// unique ascending ids, statistics in range); throws std::logic_error.
void check_consistency(const LearnerState& state);

// JSON-lines encoding of the event stream (similarity/threshold fixed to 6
// decimals so reruns are byte-identical).
std::string to_json_line(const AssignmentEvent& e);
std::string to_json_line(const MergeEvent& e);

// State snapshot ("IHST"): magic, u16 version=1, u32 D, the config, then
// t/next_id/rng state and per cluster (id u32, count u64, mu/sigma f64 LE,
// D raw u32 vote counts). Prototypes are rebuilt by thresholding on load,
// which is enough for exact resume.
void save_state(const std::string& path, const LearnerConfig& config, const LearnerState& state,
                std::uint32_t dim);
struct LoadedState {
  LearnerConfig config;
  LearnerState state;
  std::uint32_t dim = 0;
};
LoadedState load_state(const std::string& path);

}  // namespace imagehd
