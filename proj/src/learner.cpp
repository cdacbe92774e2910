#include "imagehd/learner.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace imagehd {

void LearnerConfig::validate() const {
  if (beta < 0.0 || !std::isfinite(beta))
    throw std::invalid_argument("config: beta must be finite and >= 0");
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::invalid_argument("config: alpha must be in (0, 1]");
  if (t_merge == 0) throw std::invalid_argument("config: t_merge must be positive");
  if (c_max == 0) throw std::invalid_argument("config: c_max must be positive");
  if (mu_init < 0.0 || mu_init > 1.0)
    throw std::invalid_argument("config: mu_init must be in [0, 1]");
  if (sigma_init < 0.0 || !std::isfinite(sigma_init))
    throw std::invalid_argument("config: sigma_init must be >= 0");
  if (top_m == 0) throw std::invalid_argument("config: top_m must be positive");
  if (seed == 0) throw std::invalid_argument("config: seed must be nonzero");
}

std::optional<SearchResult> similarity_search(const LearnerState& state, const PackedHV& q) {
  if (state.clusters.empty()) return std::nullopt;
  // Integer distances compare exactly; clusters are kept in ascending id
  // order, so a strict improvement scan breaks ties toward the lowest id.
  std::uint32_t best_index = 0;
  std::uint32_t best_d = hamming(q, state.clusters[0].prototype);
  for (std::uint32_t i = 1; i < state.clusters.size(); ++i) {
    const std::uint32_t d = hamming(q, state.clusters[i].prototype);
    if (d < best_d) {
      best_d = d;
      best_index = i;
    }
  }
  return SearchResult{
      .similarity = 1.0 - static_cast<double>(best_d) / static_cast<double>(q.dim),
      .id = state.clusters[best_index].id,
      .index = best_index,
      .distance = best_d,
  };
}

namespace {

Cluster make_cluster(std::uint32_t id, const PackedHV& q, const LearnerConfig& config) {
  Cluster c;
  c.id = id;
  c.votes = VoteAccumulator(q.dim);
  accumulate(c.votes, q);
  c.prototype = q;
  c.count = 1;
  c.mu = config.mu_init;
  c.sigma = config.sigma_init;
  return c;
}

}  // namespace

AssignmentEvent process_sample(const LearnerConfig& config, LearnerState& state,
                               const FeatureVector& z, const ItemMemory& mem) {
  const PackedHV q = mem.encode(z);

  AssignmentEvent event;
  const auto match = similarity_search(state, q);
  if (!match) {
    const std::uint32_t id = state.next_id++;
    state.clusters.push_back(make_cluster(id, q, config));
    event = {.t = 0, .cluster_id = id, .similarity = 0.0, .created = true, .threshold = 1.0};
  } else {
    Cluster& best = state.clusters[match->index];
    const double theta = best.mu - config.beta * best.sigma;
    if (match->similarity < theta) {
      const std::uint32_t id = state.next_id++;
      state.clusters.push_back(make_cluster(id, q, config));
      event = {.t = 0,
               .cluster_id = id,
               .similarity = match->similarity,
               .created = true,
               .threshold = theta};
    } else {
      accumulate(best.votes, q);
      best.prototype = threshold(best.votes);
      best.count = best.votes.total;
      const double mu_old = best.mu;
      best.sigma = (1.0 - config.alpha) * best.sigma +
                   config.alpha * std::abs(match->similarity - mu_old);
      best.mu = (1.0 - config.alpha) * mu_old + config.alpha * match->similarity;
      event = {.t = 0,
               .cluster_id = best.id,
               .similarity = match->similarity,
               .created = false,
               .threshold = theta};
    }
  }

  state.t += 1;
  event.t = state.t;

  if (state.t >= config.t0 && state.t % config.t_merge == 0 &&
      state.clusters.size() > config.c_max) {
    const std::uint32_t seed_state = state.rng.state();
    const std::uint32_t k_before = static_cast<std::uint32_t>(state.clusters.size());
    const MergeParams params{
        .k_prime = config.c_max, .top_m = config.top_m, .refine_iters = config.refine_iters};
    state.clusters = merge_clusters(state.clusters, params, state.rng, state.next_id);
    state.merges.push_back({.t = state.t,
                            .k_before = k_before,
                            .k_after = static_cast<std::uint32_t>(state.clusters.size()),
                            .seed_state = seed_state});
  }

  state.events.push_back(event);
  return event;
}

LearnerState run_stream(const LearnerConfig& config, const ItemMemory& mem,
                        std::span<const FeatureVector> features, Lfsr32 rng) {
  config.validate();
  LearnerState state(rng);
  for (std::size_t i = 0; i < features.size(); ++i) {
    try {
      process_sample(config, state, features[i], mem);
    } catch (const std::exception& e) {
      throw std::runtime_error("stream sample " + std::to_string(i) + ": " + e.what());
    }
  }
  return state;
}

LearnerState run_stream(const LearnerConfig& config, const ItemMemory& mem,
                        std::span<const FeatureVector> features) {
  return run_stream(config, mem, features, Lfsr32(config.seed));
}

void check_consistency(const LearnerState& state) {
  std::uint32_t prev_id = 0;
  bool first = true;
  for (const auto& c : state.clusters) {
    if (!first && c.id <= prev_id)
      throw std::logic_error("audit: cluster ids not strictly ascending");
    prev_id = c.id;
    first = false;
    if (c.id >= state.next_id) throw std::logic_error("audit: cluster id beyond next_id");
    if (c.count != c.votes.total) throw std::logic_error("audit: count != votes.total");
    if (c.count == 0) throw std::logic_error("audit: empty cluster");
    if (!(c.mu >= 0.0 && c.mu <= 1.0)) throw std::logic_error("audit: mu out of [0, 1]");
    if (!(c.sigma >= 0.0)) throw std::logic_error("audit: negative sigma");
    if (c.prototype != threshold(c.votes))
      throw std::logic_error("audit: prototype != threshold(votes)");
    for (std::uint32_t i = 0; i < c.votes.dim; ++i) {
      if (c.votes.counts[i] > c.votes.total)
        throw std::logic_error("audit: vote count exceeds total");
    }
  }
  if (state.events.size() != state.t - state.t_resumed)
    throw std::logic_error("audit: event log length != samples consumed");
}

std::string to_json_line(const AssignmentEvent& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "{\"t\":%llu,\"cluster_id\":%u,\"similarity\":%.6f,\"created\":%s,"
                "\"threshold\":%.6f}",
                static_cast<unsigned long long>(e.t), e.cluster_id, e.similarity,
                e.created ? "true" : "false", e.threshold);
  return buf;
}

std::string to_json_line(const MergeEvent& e) {
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "{\"t\":%llu,\"merge\":{\"k_before\":%u,\"k_after\":%u,\"seed_state\":%u}}",
                static_cast<unsigned long long>(e.t), e.k_before, e.k_after, e.seed_state);
  return buf;
}

namespace {

constexpr char kMagic[4] = {'I', 'H', 'S', 'T'};
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
  if (!is) throw std::runtime_error(path + ": truncated state snapshot");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void save_state(const std::string& path, const LearnerConfig& config, const LearnerState& state,
                std::uint32_t dim) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os.write(kMagic, 4);
  write_le(os, kVersion);
  write_le(os, dim);
  write_le(os, config.beta);
  write_le(os, config.alpha);
  write_le(os, config.t_merge);
  write_le(os, config.t0);
  write_le(os, config.c_max);
  write_le(os, config.mu_init);
  write_le(os, config.sigma_init);
  write_le(os, config.top_m);
  write_le(os, config.refine_iters);
  write_le(os, config.seed);
  write_le(os, state.t);
  write_le(os, state.next_id);
  write_le(os, state.rng.state());
  write_le(os, static_cast<std::uint32_t>(state.clusters.size()));
  for (const auto& c : state.clusters) {
    write_le(os, c.id);
    write_le(os, c.count);
    write_le(os, c.mu);
    write_le(os, c.sigma);
    for (std::uint32_t v : c.votes.counts) write_le(os, v);
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

LoadedState load_state(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": bad state magic at offset 0");
  const auto version = read_le<std::uint16_t>(is, path);
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported state version " + std::to_string(version));
  const auto dim = read_le<std::uint32_t>(is, path);

  LearnerConfig config;
  config.beta = read_le<double>(is, path);
  config.alpha = read_le<double>(is, path);
  config.t_merge = read_le<std::uint32_t>(is, path);
  config.t0 = read_le<std::uint32_t>(is, path);
  config.c_max = read_le<std::uint32_t>(is, path);
  config.mu_init = read_le<double>(is, path);
  config.sigma_init = read_le<double>(is, path);
  config.top_m = read_le<std::uint32_t>(is, path);
  config.refine_iters = read_le<std::uint32_t>(is, path);
  config.seed = read_le<std::uint32_t>(is, path);

  const auto t = read_le<std::uint64_t>(is, path);
  const auto next_id = read_le<std::uint32_t>(is, path);
  const auto rng_state = read_le<std::uint32_t>(is, path);
  if (rng_state == 0) throw std::runtime_error(path + ": zero rng state in snapshot");
  const auto n_clusters = read_le<std::uint32_t>(is, path);

  LearnerState state{Lfsr32(rng_state)};
  state.t = t;
  state.t_resumed = t;
  state.next_id = next_id;
  state.clusters.reserve(n_clusters);
  for (std::uint32_t i = 0; i < n_clusters; ++i) {
    Cluster c;
    c.id = read_le<std::uint32_t>(is, path);
    c.count = read_le<std::uint64_t>(is, path);
    c.mu = read_le<double>(is, path);
    c.sigma = read_le<double>(is, path);
    c.votes = VoteAccumulator(dim);
    if (c.count == 0) throw std::runtime_error(path + ": empty cluster in snapshot");
    for (auto& v : c.votes.counts) {
      v = read_le<std::uint32_t>(is, path);
      if (v > c.count) throw std::runtime_error(path + ": vote count exceeds cluster count");
    }
    c.votes.total = c.count;
    c.prototype = threshold(c.votes);
    state.clusters.push_back(std::move(c));
  }
  return {config, std::move(state), dim};
}

}  // namespace imagehd
