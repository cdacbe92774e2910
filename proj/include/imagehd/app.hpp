#pragma once

// Command-line surface: synthetic stream generation, stream learning,
// evaluation, and the consolidation scaling benchmark. Every JSON output
// embeds the run manifest (command, config, input/output paths, tool
// version) so results are self-describing; timing is reported on stdout
// only, keeping reruns of equal manifests byte-identical.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config failure.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "imagehd/learner.hpp"

namespace imagehd {

inline constexpr const char* kToolName = "imagehd";
inline constexpr const char* kToolVersion = "0.1.0";

// Usage/config problems; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EngineConfig {
  std::uint32_t dim = 4096;           // D
  std::uint32_t levels = 16;          // L
  std::uint32_t calib_samples = 256;  // warm-up prefix for quantizer bounds
  LearnerConfig learner;

  void validate() const;
};

// Flat key=value config file. Valid keys: D, L, beta, alpha, t_merge, t0,
// c_max, top_m, refine_iters, seed, calib_samples. '#' starts a comment.
// Unknown keys raise ConfigError listing the valid keys.
EngineConfig parse_config_file(const std::string& path);
EngineConfig parse_config_text(const std::string& text, const std::string& origin);

// IMAGEHD_THREADS: optional positive integer capping internal parallelism
// (0 = uncapped). Raises ConfigError on a malformed value. The engine is
// sequential today, so the cap is validated and recorded only.
std::uint32_t thread_cap();

struct GenOptions {
  std::uint32_t classes = 0;
  std::uint32_t per_class = 0;
  std::uint32_t dim = 0;  // feature dimension f
  double spread = 0.05;
  std::uint32_t seed = 1;
  std::string order = "interleaved";
  std::string out;
};

struct RunOptions {
  std::string features;
  std::string config;  // empty: built-in defaults
  std::string events;
  std::string metrics;   // empty: skip metrics
  std::string snapshot;  // empty: skip snapshot
};

struct BenchOptions {
  std::vector<std::uint32_t> k_list;
  std::uint32_t dim = 4096;
  std::uint32_t k_prime = 8;
  std::uint32_t top_m = 4;
  std::uint32_t iters = 2;
  std::uint32_t seed = 1;
  std::uint32_t reps = 9;  // median over this many repetitions
  std::string out;
};

struct EvalOptions {
  std::string events;
  std::string labels_from;
  std::string out;
};

int cmd_gen(const GenOptions& opt);
int cmd_run(const RunOptions& opt);
int cmd_merge_bench(const BenchOptions& opt);
int cmd_eval(const EvalOptions& opt);

// Full argv-level entry point (args exclude the program name). Never calls
// exit(); returns the process exit code.
int cli_main(const std::vector<std::string>& args);

}  // namespace imagehd
