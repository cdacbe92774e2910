#include "imagehd/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "imagehd/consolidate.hpp"
#include "imagehd/dataio.hpp"
#include "imagehd/metrics.hpp"

namespace imagehd {

using nlohmann::json;

void EngineConfig::validate() const {
  if (dim == 0) throw ConfigError("config: D must be positive");
  if (levels < 2) throw ConfigError("config: L must be at least 2");
  if (dim < 2 * (levels - 1))
    throw ConfigError("config: D must be >= 2*(L-1), got D=" + std::to_string(dim) +
                      ", L=" + std::to_string(levels));
  if (calib_samples == 0) throw ConfigError("config: calib_samples must be positive");
  try {
    learner.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

namespace {

constexpr const char* kConfigKeys =
    "D, L, beta, alpha, t_merge, t0, c_max, top_m, refine_iters, seed, calib_samples";

double parse_number(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v))
    throw ConfigError("config: bad value '" + value + "' for key '" + key + "'");
  return v;
}

std::uint32_t parse_u32(const std::string& key, const std::string& value) {
  const double v = parse_number(key, value);
  if (v < 0 || v != std::floor(v) || v > 4294967295.0)
    throw ConfigError("config: key '" + key + "' needs a non-negative integer, got '" + value +
                      "'");
  return static_cast<std::uint32_t>(v);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  const auto b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace

EngineConfig parse_config_text(const std::string& text, const std::string& origin) {
  EngineConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "D")
      cfg.dim = parse_u32(key, value);
    else if (key == "L")
      cfg.levels = parse_u32(key, value);
    else if (key == "beta")
      cfg.learner.beta = parse_number(key, value);
    else if (key == "alpha")
      cfg.learner.alpha = parse_number(key, value);
    else if (key == "t_merge")
      cfg.learner.t_merge = parse_u32(key, value);
    else if (key == "t0")
      cfg.learner.t0 = parse_u32(key, value);
    else if (key == "c_max")
      cfg.learner.c_max = parse_u32(key, value);
    else if (key == "top_m")
      cfg.learner.top_m = parse_u32(key, value);
    else if (key == "refine_iters")
      cfg.learner.refine_iters = parse_u32(key, value);
    else if (key == "seed")
      cfg.learner.seed = parse_u32(key, value);
    else if (key == "calib_samples")
      cfg.calib_samples = parse_u32(key, value);
    else
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown config key '" + key +
                        "' (valid keys: " + std::string(kConfigKeys) + ")");
  }
  cfg.validate();
  return cfg;
}

EngineConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::uint32_t thread_cap() {
  const char* env = std::getenv("IMAGEHD_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v <= 0)
    throw ConfigError(std::string("IMAGEHD_THREADS must be a positive integer, got '") + env +
                      "'");
  return static_cast<std::uint32_t>(v);
}

namespace {

json config_json(const EngineConfig& cfg) {
  return json{{"D", cfg.dim},
              {"L", cfg.levels},
              {"calib_samples", cfg.calib_samples},
              {"beta", cfg.learner.beta},
              {"alpha", cfg.learner.alpha},
              {"t_merge", cfg.learner.t_merge},
              {"t0", cfg.learner.t0},
              {"c_max", cfg.learner.c_max},
              {"mu_init", cfg.learner.mu_init},
              {"sigma_init", cfg.learner.sigma_init},
              {"top_m", cfg.learner.top_m},
              {"refine_iters", cfg.learner.refine_iters},
              {"seed", cfg.learner.seed}};
}

json manifest_json(const std::string& command, const json& config, const json& inputs,
                   const json& outputs) {
  return json{{"tool", kToolName},
              {"version", kToolVersion},
              {"command", command},
              {"config", config},
              {"inputs", inputs},
              {"outputs", outputs}};
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os << text;
  if (!os) throw std::runtime_error(path + ": write failed");
}

}  // namespace

int cmd_gen(const GenOptions& opt) {
  if (opt.seed == 0) throw ConfigError("seed must be nonzero");
  if (opt.out.empty()) throw ConfigError("--out is required");
  if (opt.order != "interleaved" && opt.order != "sequential")
    throw ConfigError("--order must be 'interleaved' or 'sequential'");

  SyntheticSpec spec;
  spec.n_classes = opt.classes;
  spec.per_class = opt.per_class;
  spec.f = opt.dim;
  spec.spread = opt.spread;
  spec.seed = opt.seed;
  spec.order = opt.order == "sequential" ? StreamOrder::kSequential : StreamOrder::kInterleaved;

  const Dataset ds = gen_synthetic(spec);
  write_features(opt.out, ds.features, ds.labels);

  // The container layout is fixed, so the manifest rides in a sidecar.
  const json manifest = manifest_json(
      "gen",
      json{{"classes", opt.classes},
           {"per_class", opt.per_class},
           {"dim", opt.dim},
           {"spread", opt.spread},
           {"seed", opt.seed},
           {"order", opt.order}},
      json::object(), json{{"features", opt.out}});
  write_text_file(opt.out + ".manifest.json", manifest.dump() + "\n");

  std::cout << "gen: wrote " << ds.features.size() << " samples (f=" << opt.dim << ", "
            << opt.classes << " classes) to " << opt.out << "\n";
  return 0;
}

int cmd_run(const RunOptions& opt) {
  thread_cap();  // validate the env cap even though execution is sequential
  if (opt.features.empty()) throw ConfigError("--features is required");
  if (opt.events.empty()) throw ConfigError("--events is required");

  const EngineConfig cfg = opt.config.empty() ? EngineConfig{} : parse_config_file(opt.config);
  cfg.validate();

  const auto t_start = std::chrono::steady_clock::now();
  const Dataset ds = read_features(opt.features);
  if (!opt.metrics.empty() && !ds.labels)
    throw ConfigError("labels required for metrics: " + opt.features + " carries none");

  const json manifest = manifest_json(
      "run", config_json(cfg), json{{"features", opt.features}},
      json{{"events", opt.events},
           {"metrics", opt.metrics.empty() ? json() : json(opt.metrics)},
           {"snapshot", opt.snapshot.empty() ? json() : json(opt.snapshot)}});

  // One LFSR drives table construction and the learner stream; the warm-up
  // prefix both calibrates the quantizer and is learned like any other data.
  Lfsr32 rng(cfg.learner.seed);
  const std::uint32_t n_features = static_cast<std::uint32_t>(ds.features.front().size());
  ItemMemory mem = ItemMemory::build(rng, cfg.dim, cfg.levels, n_features);
  const std::size_t warmup = std::min<std::size_t>(cfg.calib_samples, ds.features.size());
  mem.calibrate(std::span(ds.features.data(), warmup));

  const LearnerState state = run_stream(cfg.learner, mem, ds.features, rng);

  std::string events_text;
  events_text += "{\"manifest\":" + manifest.dump() + "}\n";
  std::size_t merge_at = 0;
  for (const auto& e : state.events) {
    events_text += to_json_line(e);
    events_text += '\n';
    while (merge_at < state.merges.size() && state.merges[merge_at].t == e.t) {
      events_text += to_json_line(state.merges[merge_at]);
      events_text += '\n';
      ++merge_at;
    }
  }
  write_text_file(opt.events, events_text);

  if (!opt.metrics.empty()) {
    std::vector<std::uint32_t> assignments;
    assignments.reserve(state.events.size());
    for (const auto& e : state.events) assignments.push_back(e.cluster_id);
    const MetricsReport report = evaluate(assignments, *ds.labels);
    write_text_file(opt.metrics, "{\"manifest\":" + manifest.dump() + ",\"metrics\":" +
                                     to_json(report) + "}\n");
  }
  if (!opt.snapshot.empty()) save_state(opt.snapshot, cfg.learner, state, cfg.dim);

  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                            t_start);
  std::cout << "run: " << state.t << " samples, " << state.clusters.size() << " clusters, "
            << state.merges.size() << " merges, " << elapsed.count() << " ms\n";
  return 0;
}

int cmd_merge_bench(const BenchOptions& opt) {
  if (opt.out.empty()) throw ConfigError("--out is required");
  if (opt.k_list.empty()) throw ConfigError("--k-list is required");
  if (!std::is_sorted(opt.k_list.begin(), opt.k_list.end()) ||
      std::adjacent_find(opt.k_list.begin(), opt.k_list.end()) != opt.k_list.end())
    throw ConfigError("--k-list must be strictly ascending");
  if (opt.k_prime > opt.k_list.front())
    throw ConfigError("--k-prime " + std::to_string(opt.k_prime) + " exceeds smallest K " +
                      std::to_string(opt.k_list.front()));
  if (opt.seed == 0) throw ConfigError("seed must be nonzero");
  if (opt.reps < 5) throw ConfigError("--reps must be at least 5");

  Lfsr32 rng(opt.seed);
  const MergeParams params{
      .k_prime = opt.k_prime, .top_m = opt.top_m, .refine_iters = opt.iters};

  std::vector<std::pair<std::uint32_t, std::uint64_t>> medians;
  for (const std::uint32_t k : opt.k_list) {
    std::vector<Cluster> clusters;
    clusters.reserve(k);
    for (std::uint32_t i = 0; i < k; ++i) {
      Cluster c;
      c.id = i;
      c.prototype = random_hv(rng, opt.dim);
      c.votes = VoteAccumulator(opt.dim);
      accumulate(c.votes, c.prototype);
      c.count = 1;
      c.mu = 0.5;
      c.sigma = 0.1;
      clusters.push_back(std::move(c));
    }
    std::vector<std::uint64_t> times;
    times.reserve(opt.reps);
    for (std::uint32_t r = 0; r < opt.reps; ++r) {
      std::uint32_t next_id = k;
      const auto t0 = std::chrono::steady_clock::now();
      const auto merged = merge_clusters(clusters, params, rng, next_id);
      const auto t1 = std::chrono::steady_clock::now();
      if (merged.size() > params.k_prime)
        throw std::runtime_error("merge bench: output exceeded k_prime");
      times.push_back(static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
    }
    std::sort(times.begin(), times.end());
    medians.emplace_back(k, times[times.size() / 2]);
  }

  const json manifest = manifest_json("merge-bench",
                                      json{{"k_list", opt.k_list},
                                           {"dim", opt.dim},
                                           {"k_prime", opt.k_prime},
                                           {"top_m", opt.top_m},
                                           {"iters", opt.iters},
                                           {"seed", opt.seed},
                                           {"reps", opt.reps}},
                                      json::object(), json{{"report", opt.out}});
  json results = json::array();
  for (const auto& [k, ns] : medians) results.push_back(json{{"k", k}, {"median_ns", ns}});
  write_text_file(opt.out,
                  json{{"manifest", manifest}, {"results", results}}.dump() + "\n");

  // Scaling gate: a doubling of K may at most triple the median. Between
  // non-doubling neighbours the budget scales as 1.5x the K ratio.
  bool regression = false;
  for (std::size_t i = 1; i < medians.size(); ++i) {
    const auto [k_lo, t_lo] = medians[i - 1];
    const auto [k_hi, t_hi] = medians[i];
    const double budget = 1.5 * static_cast<double>(k_hi) / static_cast<double>(k_lo);
    const double ratio = static_cast<double>(t_hi) / static_cast<double>(std::max<std::uint64_t>(t_lo, 1));
    std::cout << "merge-bench: K " << k_lo << " -> " << k_hi << ": " << t_lo << " ns -> " << t_hi
              << " ns (ratio " << ratio << ", budget " << budget << ")\n";
    if (ratio > budget) regression = true;
  }
  if (medians.size() == 1)
    std::cout << "merge-bench: K " << medians[0].first << ": " << medians[0].second << " ns\n";
  if (regression) {
    std::cerr << "merge-bench: scaling regression, see " << opt.out << "\n";
    return 1;
  }
  return 0;
}

int cmd_eval(const EvalOptions& opt) {
  if (opt.events.empty() || opt.labels_from.empty() || opt.out.empty())
    throw ConfigError("--events, --labels-from and --out are all required");

  std::ifstream is(opt.events);
  if (!is) throw std::runtime_error(opt.events + ": cannot open");
  std::vector<std::uint32_t> assignments;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(opt.events + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.contains("manifest") || j.contains("merge")) continue;
    if (!j.contains("cluster_id"))
      throw std::runtime_error(opt.events + ":" + std::to_string(lineno) +
                               ": event line lacks cluster_id");
    assignments.push_back(j["cluster_id"].get<std::uint32_t>());
  }

  const Dataset ds = read_features(opt.labels_from);
  if (!ds.labels) throw std::runtime_error(opt.labels_from + ": no labels present");
  if (ds.labels->size() != assignments.size())
    throw std::runtime_error("length mismatch: " + std::to_string(assignments.size()) +
                             " events vs " + std::to_string(ds.labels->size()) + " labels");

  const MetricsReport report = evaluate(assignments, *ds.labels);
  const json manifest =
      manifest_json("eval", json::object(),
                    json{{"events", opt.events}, {"labels_from", opt.labels_from}},
                    json{{"metrics", opt.out}});
  write_text_file(opt.out,
                  "{\"manifest\":" + manifest.dump() + ",\"metrics\":" + to_json(report) + "}\n");
  std::cout << "eval: " << to_json(report) << "\n";
  return 0;
}

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"imagehd: streaming bounded-memory hyperdimensional clustering"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a labeled synthetic feature stream");
  gen_cmd->add_option("--classes", gen.classes, "Number of classes")->required();
  gen_cmd->add_option("--per-class", gen.per_class, "Samples per class")->required();
  gen_cmd->add_option("--dim", gen.dim, "Feature dimension")->required();
  gen_cmd->add_option("--spread", gen.spread, "Within-class std relative to center distance");
  gen_cmd->add_option("--seed", gen.seed, "LFSR seed (nonzero)");
  gen_cmd->add_option("--order", gen.order, "interleaved|sequential");
  gen_cmd->add_option("--out", gen.out, "Output feature file")->required();

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Stream a feature file through the learner");
  run_cmd->add_option("--features", run.features, "Input feature file (.ihdf or .csv)")
      ->required();
  run_cmd->add_option("--config", run.config, "key=value config file");
  run_cmd->add_option("--events", run.events, "Output JSON-lines event log")->required();
  run_cmd->add_option("--metrics", run.metrics, "Output metrics JSON (requires labels)");
  run_cmd->add_option("--snapshot", run.snapshot, "Output learner state snapshot");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("merge-bench", "Time consolidation across cluster counts");
  bench_cmd->add_option("--k-list", bench.k_list, "Ascending cluster counts")
      ->required()
      ->delimiter(',');
  bench_cmd->add_option("--dim", bench.dim, "Hypervector dimension");
  bench_cmd->add_option("--k-prime", bench.k_prime, "Merge target");
  bench_cmd->add_option("--top-m", bench.top_m, "Top-M pool size");
  bench_cmd->add_option("--iters", bench.iters, "Refinement iterations");
  bench_cmd->add_option("--seed", bench.seed, "LFSR seed (nonzero)");
  bench_cmd->add_option("--reps", bench.reps, "Repetitions per K (median reported)");
  bench_cmd->add_option("--out", bench.out, "Output report JSON")->required();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score an event log against labels");
  eval_cmd->add_option("--events", eval.events, "Event log from 'run'")->required();
  eval_cmd->add_option("--labels-from", eval.labels_from, "Labeled feature file")->required();
  eval_cmd->add_option("--out", eval.out, "Output metrics JSON")->required();

  std::vector<const char*> argv;
  argv.push_back(kToolName);
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help/--version
    std::cerr << kToolName << ": " << e.what() << "\n";
    std::cerr << "Run '" << kToolName << " --help' for usage.\n";
    return 2;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen(gen);
    if (run_cmd->parsed()) return cmd_run(run);
    if (bench_cmd->parsed()) return cmd_merge_bench(bench);
    if (eval_cmd->parsed()) return cmd_eval(eval);
  } catch (const ConfigError& e) {
    std::cerr << kToolName << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << kToolName << ": " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace imagehd
