#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "agent.hpp"
#include "core.hpp"
#include "evolve.hpp"
#include "forge.hpp"
#include "toolbox.hpp"

namespace graphforge {

/// Unified configuration for training and benchmark-evaluation runs.
struct RunConfig {
  int episodes = 300;
  uint64_t seed = 0;
  std::string curriculum = "progressive";  // "progressive" | "fixed:D4"
  AgentConfig agent;
  int attempts = 2;  // per-episode retries while failing (eval: 1)
  bool propose_tool = true;
  int validation_cases = 2;  // per family at each re-evaluation
  int probe_cases = 2;
  int population_cap = 4;
  int reeval_cadence = 38;     // episodes between pair evaluations
  std::string sca = "routed";  // "routed" | "blind" (mutate every section)
  std::string out_dir;
  std::string seed_toolbox;  // "" | "oracle" | manifest path
  int workers = 1;           // >1 parallelizes pair validation only

  /// Throws CoreError on non-positive counts or unknown mode strings.
  void validate() const;
  Curriculum make_curriculum() const;
};

/// One line of the episode log. Excluded records (infrastructure failures)
/// keep only the index and an error; they never enter metric denominators.
struct EpisodeRecord {
  int episode = 0;
  bool excluded = false;
  std::string error;

  std::string task_kind;
  std::string difficulty;
  bool passed = false;
  std::string tool_used = "none";
  bool candidate_ran = false;
  std::string route;
  std::string subtarget;
  std::string focus;
  std::vector<std::string> typed_missing_slots;
  std::string protocol_signature;
  bool protocol_ok = false;
  int attempts = 0;
  int timing = 0;  // logical steps summed over attempts
  int instruction_mutations = 0;
  std::vector<std::string> tools_packaged;
  int frontier_size = 0;

  json to_json() const;
  static EpisodeRecord from_json(const json& j);
};

struct TierStat {
  int episodes = 0;
  int first_seen = -1;  // 1-based episode index; -1 = never emitted

  bool operator==(const TierStat& o) const = default;
};

struct FamilyStat {
  int episodes = 0;
  int passes = 0;

  bool operator==(const FamilyStat& o) const = default;
};

inline constexpr int kRollingWindow = 50;

/// Aggregate view of an episode log; every field is recomputable from the
/// raw records, so a rollup must reproduce the train-emitted summary.
struct RunSummary {
  int counted = 0;
  int excluded = 0;
  double pass_rate = 0.0;
  double protocol_reliability = 0.0;
  int instruction_mutations = 0;
  int packaged_tools = 0;
  int used_tools = 0;  // distinct registered tools that answered
  int frontier_size = 0;
  double mean_attempts = 0.0;
  double reuse_rate = 0.0;
  double rolling_reuse_rate = 0.0;  // trailing kRollingWindow episodes
  std::map<std::string, TierStat> per_tier;
  std::map<std::string, FamilyStat> per_family;

  json to_json() const;
  static RunSummary from_json(const json& j);
  bool operator==(const RunSummary& o) const = default;
};

/// Recompute every summary field from raw records. An episode reused a tool
/// when it answered with a registered tool it did not package itself.
RunSummary summarize(const std::vector<EpisodeRecord>& records);

/// Parse a line-delimited episode log; a corrupt line aborts with its
/// 1-based line number.
std::vector<EpisodeRecord> read_episode_log(const std::filesystem::path& file);

/// read_episode_log + summarize.
RunSummary metrics_rollup(const std::filesystem::path& file);

struct TrainResult {
  RunSummary summary;
  PolicyPair selected;
  std::vector<PolicyPair> frontier;
};

/// The full co-evolution loop: sample from the curriculum, run attempts,
/// verify, diagnose, route the blamed space, dispatch one mutation, gate
/// tool candidates through probes, and re-evaluate the working pair every
/// `reeval_cadence` episodes against the frontier. Writes episodes.jsonl,
/// toolbox.json, genomes.json, frontier.json, and summary.json under
/// cfg.out_dir. An episode that throws is logged as excluded and leaves
/// curriculum, toolbox, genome, and frontier untouched.
TrainResult train(const RunConfig& cfg);

struct BenchmarkCase {
  Family family = Family::shortest_path;
  Difficulty difficulty = Difficulty::D1;
  uint64_t seed = 0;
};

void write_benchmark(const std::filesystem::path& file,
                     const std::vector<BenchmarkCase>& cases);
/// Corrupt lines abort with their 1-based line number.
std::vector<BenchmarkCase> read_benchmark(const std::filesystem::path& file);

struct EvalReport {
  std::string pair_id;
  int cases = 0;
  int passed = 0;
  double pass_rate = 0.0;
  double protocol_reliability = 0.0;
  std::map<std::string, FamilyStat> per_family;

  json to_json() const;
};

/// Benchmark a frozen pair: load the run directory's toolbox and frontier
/// manifests, select the final pair, and run one attempt per case with
/// proposals disabled and zero mutations (verified by manifest byte
/// equality). Writes evaluation.json next to the benchmark results.
EvalReport evaluate(const std::filesystem::path& run_dir,
                    const std::filesystem::path& benchmark,
                    const RunConfig& cfg);

/// Register the whole reference-solver bank as trusted entry-tier tools,
/// one per family. Probe gating still applies.
Toolbox seed_oracle_toolbox(uint64_t probe_seed = 17);

}  // namespace graphforge
