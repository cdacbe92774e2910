#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "imagehd/dataio.hpp"
#include "imagehd/learner.hpp"
#include "testutil.hpp"

using namespace imagehd;

namespace {

Cluster cluster_from(std::uint32_t id, const PackedHV& proto) {
  Cluster c;
  c.id = id;
  c.prototype = proto;
  c.votes = VoteAccumulator(proto.dim);
  accumulate(c.votes, proto);
  c.count = 1;
  c.mu = 0.7;
  c.sigma = 0.1;
  return c;
}

// A small calibrated memory for trace tests (odd F so majorities are exact).
ItemMemory tiny_memory(std::uint32_t seed = 1000) {
  Lfsr32 rng(seed);
  ItemMemory mem = ItemMemory::build(rng, 64, 4, 3);
  mem.calibrate(std::vector<FeatureVector>{{0, 0, 0}, {1, 1, 1}});
  return mem;
}

}  // namespace

TEST_CASE("similarity search over an empty set signals distinctly") {
  LearnerState state{Lfsr32(1)};
  Lfsr32 rng(5);
  CHECK_FALSE(similarity_search(state, random_hv(rng, 64)).has_value());
}

TEST_CASE("similarity search finds exact prototypes and breaks ties low") {
  Lfsr32 rng(6);
  const PackedHV q = random_hv(rng, 256);

  LearnerState state{Lfsr32(1)};
  PackedHV near_a = q;
  near_a.set_bit(0, !near_a.get_bit(0));
  PackedHV near_b = q;
  near_b.set_bit(1, !near_b.get_bit(1));
  state.clusters.push_back(cluster_from(3, near_a));
  state.clusters.push_back(cluster_from(9, near_b));
  state.next_id = 10;

  auto r = similarity_search(state, q);
  REQUIRE(r.has_value());
  CHECK(r->id == 3);  // equal distance 1, lower id wins
  CHECK(r->distance == 1);

  state.clusters.push_back(cluster_from(12, q));
  state.next_id = 13;
  r = similarity_search(state, q);
  CHECK(r->id == 12);
  CHECK(r->similarity == 1.0);
}

TEST_CASE("similarity search matches an exhaustive scan") {
  Lfsr32 rng(7);
  LearnerState state{Lfsr32(1)};
  for (std::uint32_t i = 0; i < 16; ++i)
    state.clusters.push_back(cluster_from(i, random_hv(rng, 1024)));
  state.next_id = 16;

  for (int trial = 0; trial < 200; ++trial) {
    const PackedHV q = random_hv(rng, 1024);
    std::uint32_t best_d = 1024 + 1, best_id = 0;
    for (const auto& c : state.clusters) {
      const std::uint32_t d = hamming(q, c.prototype);
      if (d < best_d) {
        best_d = d;
        best_id = c.id;
      }
    }
    const auto r = similarity_search(state, q);
    REQUIRE(r.has_value());
    CHECK(r->id == best_id);
    CHECK(r->distance == best_d);
  }
}

TEST_CASE("first sample creates cluster 0") {
  const ItemMemory mem = tiny_memory();
  LearnerConfig config;
  LearnerState state{Lfsr32(config.seed)};

  const auto e = process_sample(config, state, {0.1, 0.5, 0.9}, mem);
  CHECK(e.created);
  CHECK(e.cluster_id == 0);
  CHECK(e.t == 1);
  CHECK(e.similarity == 0.0);
  CHECK(e.threshold == 1.0);
  CHECK(state.clusters.size() == 1);
  CHECK(state.clusters[0].count == 1);
  CHECK(state.clusters[0].mu == config.mu_init);
  CHECK(state.clusters[0].sigma == config.sigma_init);
  check_consistency(state);
}

TEST_CASE("an identical repeat is absorbed, not recreated") {
  const ItemMemory mem = tiny_memory();
  LearnerConfig config;
  config.beta = 1.0;
  config.mu_init = 0.5;
  config.sigma_init = 0.05;
  config.alpha = 0.1;
  LearnerState state{Lfsr32(config.seed)};

  const FeatureVector z{0.3, 0.3, 0.3};
  process_sample(config, state, z, mem);
  const auto e = process_sample(config, state, z, mem);

  CHECK_FALSE(e.created);
  CHECK(e.cluster_id == 0);
  CHECK(e.similarity == 1.0);
  CHECK(e.threshold == doctest::Approx(0.45).epsilon(1e-12));  // 0.5 - 1.0*0.05
  CHECK(state.clusters.size() == 1);
  CHECK(state.clusters[0].count == 2);
  // EMA with the pre-update mean: mu 0.5 -> 0.55, sigma 0.05 -> 0.095.
  CHECK(state.clusters[0].mu == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(state.clusters[0].sigma == doctest::Approx(0.095).epsilon(1e-12));
  check_consistency(state);
}

TEST_CASE("a query quasi-orthogonal to every prototype creates a cluster") {
  // Unrelated random prototypes sit near similarity 0.5; with beta = 0 and a
  // high prior mean the admission test must reject them all.
  const ItemMemory mem = tiny_memory(2024);
  LearnerConfig config;
  config.beta = 0.0;
  config.mu_init = 0.9;
  LearnerState state{Lfsr32(config.seed)};

  Lfsr32 protos(424243);
  state.clusters.push_back(cluster_from(0, random_hv(protos, 64)));
  state.clusters.push_back(cluster_from(1, random_hv(protos, 64)));
  for (auto& c : state.clusters) {
    c.mu = 0.9;
    c.sigma = 0.0;
  }
  state.next_id = 2;

  const auto e = process_sample(config, state, {0.4, 0.5, 0.6}, mem);
  CHECK(e.created);
  CHECK(e.cluster_id == 2);
  CHECK(e.similarity > 0.3);
  CHECK(e.similarity < 0.7);
  CHECK(e.threshold == 0.9);
  CHECK(state.clusters.size() == 3);
}

TEST_CASE("a query far from every prototype creates a cluster") {
  // Three well-separated anchors; beta = 0 and a high prior mean force
  // creation whenever s* dips below mu_init.
  SyntheticSpec spec;
  spec.n_classes = 3;
  spec.per_class = 4;
  spec.f = 32;
  spec.spread = 0.01;
  spec.seed = 777;
  spec.order = StreamOrder::kSequential;
  const Dataset ds = gen_synthetic(spec);

  Lfsr32 rng(778);
  ItemMemory mem = ItemMemory::build(rng, 4096, 16, 32);
  mem.calibrate(ds.features);

  LearnerConfig config;
  config.beta = 0.0;
  config.mu_init = 0.9;
  LearnerState state{Lfsr32(config.seed)};

  const auto e0 = process_sample(config, state, ds.features[0], mem);
  const auto e1 = process_sample(config, state, ds.features[4], mem);
  const auto e2 = process_sample(config, state, ds.features[8], mem);
  CHECK(e0.created);
  CHECK(e1.created);
  CHECK(e2.created);
  CHECK(e1.similarity < 0.9);
  CHECK(e2.similarity < 0.9);
  CHECK(state.clusters.size() == 3);
}

TEST_CASE("run_stream basics") {
  const ItemMemory mem = tiny_memory();
  LearnerConfig config;

  const std::vector<FeatureVector> empty;
  const LearnerState s0 = run_stream(config, mem, empty);
  CHECK(s0.t == 0);
  CHECK(s0.events.empty());
  CHECK(s0.clusters.empty());

  const std::vector<FeatureVector> same(50, FeatureVector{0.2, 0.6, 0.8});
  const LearnerState s1 = run_stream(config, mem, same);
  CHECK(s1.clusters.size() == 1);
  CHECK(s1.clusters[0].count == 50);
  CHECK(s1.events.size() == 50);
  check_consistency(s1);
}

TEST_CASE("run_stream is deterministic") {
  SyntheticSpec spec;
  spec.n_classes = 3;
  spec.per_class = 100;
  spec.f = 16;
  spec.spread = 0.05;
  spec.seed = 999;
  const Dataset ds = gen_synthetic(spec);

  auto run_once = [&] {
    Lfsr32 rng(4242);
    ItemMemory mem = ItemMemory::build(rng, 1024, 8, 16);
    mem.calibrate(std::span(ds.features.data(), 64));
    LearnerConfig config;
    config.c_max = 4;
    config.t0 = 32;
    config.t_merge = 16;
    return run_stream(config, mem, ds.features, rng);
  };

  const LearnerState a = run_once();
  const LearnerState b = run_once();
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i)
    CHECK(to_json_line(a.events[i]) == to_json_line(b.events[i]));
  REQUIRE(a.merges.size() == b.merges.size());
  for (std::size_t i = 0; i < a.merges.size(); ++i)
    CHECK(to_json_line(a.merges[i]) == to_json_line(b.merges[i]));
}

TEST_CASE("merge trigger keeps the cluster set bounded") {
  // A stream with many scattered anchors forces creations beyond c_max.
  SyntheticSpec spec;
  spec.n_classes = 12;
  spec.per_class = 40;
  spec.f = 16;
  spec.spread = 0.02;
  spec.seed = 555;
  spec.order = StreamOrder::kInterleaved;
  const Dataset ds = gen_synthetic(spec);

  Lfsr32 rng(556);
  ItemMemory mem = ItemMemory::build(rng, 2048, 16, 16);
  mem.calibrate(std::span(ds.features.data(), 96));

  LearnerConfig config;
  config.c_max = 6;
  config.t0 = 64;
  config.t_merge = 32;
  config.beta = 0.2;
  LearnerState state{rng};

  bool merged_at_least_once = false;
  for (const auto& z : ds.features) {
    process_sample(config, state, z, mem);
    if (!state.merges.empty() && state.merges.back().t == state.t) {
      merged_at_least_once = true;
      CHECK(state.clusters.size() <= config.c_max);
    }
  }
  CHECK(merged_at_least_once);
  check_consistency(state);

  // Statistics stay in range through EMA updates.
  for (const auto& c : state.clusters) {
    CHECK(c.mu >= 0.0);
    CHECK(c.mu <= 1.0);
    CHECK(c.sigma >= 0.0);
  }
}

TEST_CASE("event json lines are formatted with fixed decimals") {
  const AssignmentEvent e{.t = 12, .cluster_id = 3, .similarity = 0.912139887,
                          .created = false, .threshold = 0.8612501};
  CHECK(to_json_line(e) ==
        "{\"t\":12,\"cluster_id\":3,\"similarity\":0.912140,\"created\":false,"
        "\"threshold\":0.861250}");
  const MergeEvent m{.t = 320, .k_before = 9, .k_after = 8, .seed_state = 123456789};
  CHECK(to_json_line(m) ==
        "{\"t\":320,\"merge\":{\"k_before\":9,\"k_after\":8,\"seed_state\":123456789}}");
}

TEST_CASE("state snapshot enables exact resume") {
  testutil::TempDir tmp("ihst");
  SyntheticSpec spec;
  spec.n_classes = 4;
  spec.per_class = 80;
  spec.f = 16;
  spec.spread = 0.05;
  spec.seed = 2222;
  const Dataset ds = gen_synthetic(spec);

  Lfsr32 rng(2223);
  ItemMemory mem = ItemMemory::build(rng, 1024, 8, 16);
  mem.calibrate(std::span(ds.features.data(), 64));

  LearnerConfig config;
  config.c_max = 5;
  config.t0 = 40;
  config.t_merge = 20;

  // Reference: one uninterrupted pass.
  LearnerState full{rng};
  for (const auto& z : ds.features) process_sample(config, full, z, mem);

  // Interrupted pass: first half, snapshot, reload, second half.
  LearnerState half{rng};
  const std::size_t cut = ds.features.size() / 2;
  for (std::size_t i = 0; i < cut; ++i) process_sample(config, half, ds.features[i], mem);
  const std::string path = tmp.file("state.ihst");
  save_state(path, config, half, 1024);

  LoadedState loaded = load_state(path);
  CHECK(loaded.dim == 1024);
  CHECK(loaded.state.t == cut);
  CHECK(loaded.config.c_max == config.c_max);
  for (std::size_t i = cut; i < ds.features.size(); ++i)
    process_sample(loaded.config, loaded.state, ds.features[i], mem);

  REQUIRE(loaded.state.clusters.size() == full.clusters.size());
  for (std::size_t i = 0; i < full.clusters.size(); ++i) {
    const Cluster& a = full.clusters[i];
    const Cluster& b = loaded.state.clusters[i];
    CHECK(a.id == b.id);
    CHECK(a.count == b.count);
    CHECK(a.prototype == b.prototype);
    CHECK(a.votes.counts == b.votes.counts);
    CHECK(a.mu == b.mu);
    CHECK(a.sigma == b.sigma);
  }
  CHECK(loaded.state.t == full.t);
  CHECK(loaded.state.next_id == full.next_id);
  CHECK(loaded.state.rng.state() == full.rng.state());

  // Second-half event lines agree with the uninterrupted run.
  REQUIRE(loaded.state.events.size() == full.events.size() - cut);
  for (std::size_t i = 0; i < loaded.state.events.size(); ++i)
    CHECK(to_json_line(loaded.state.events[i]) == to_json_line(full.events[cut + i]));
  check_consistency(loaded.state);
}

TEST_CASE("config validation rejects out-of-range fields") {
  LearnerConfig ok;
  CHECK_NOTHROW(ok.validate());

  LearnerConfig bad = ok;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.beta = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.t_merge = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.c_max = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.mu_init = 1.2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.seed = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
