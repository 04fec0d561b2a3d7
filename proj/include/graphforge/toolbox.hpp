#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "forge.hpp"
#include "verifier.hpp"

namespace graphforge {

/// Four-component capability descriptor, each drawn from a closed
/// vocabulary. Renders as "regime / constraints / exactness / tier".
struct NicheKey {
  std::string regime;
  std::string constraint_tag;
  std::string exactness;
  std::string tier;

  std::string render() const;
  static NicheKey parse(const std::string& rendered);
  bool operator==(const NicheKey& o) const = default;
};

/// The niche a generated task belongs to; deterministic in family and tier.
NicheKey niche_key(const StructuredTask& t);

struct ToolMeta {
  NicheKey niche;
  std::vector<std::string> families;  // family tags the body serves
  int created_episode = 0;
  std::string parent_id;  // empty for seed tools
};

/// Registered executable tool. Bodies come from the named body bank (or an
/// externally plugged executor) and are only registered after passing
/// hidden probes.
struct Tool {
  std::string id;
  std::string body_id;
  ToolBody body;
  ToolMeta meta;
  int reuse_count = 0;
  int pass_count = 0;
  bool activated = false;
};

/// Tool-task fit in [0,1]: 0 when the family tags are disjoint, otherwise
/// the fraction of matching niche components (regime, constraints,
/// exactness, and tier, where a tool tier at or below the task tier counts
/// as a match).
double compat(const ToolMeta& meta, const StructuredTask& recovered);

struct RetrievalResult {
  std::vector<std::pair<std::string, double>> ranked;  // scores non-increasing
  bool empty() const { return ranked.empty(); }
};

struct AcceptOutcome {
  bool accepted = false;
  std::string tool_id;  // set when accepted
  ProbeReport report;
  std::string reason;  // set when rejected
};

/// Tool registry with verifier-gated admission. There is deliberately no
/// direct insert: every tool enters through accept_candidate's probes or a
/// trusted frozen manifest.
class Toolbox {
 public:
  explicit Toolbox(int reuse_window = 50) : window_(reuse_window) {}

  /// Rank the view's tools against a recovered task, best fit first; ties
  /// break toward the more-reused tool, then the smaller id. Unknown view
  /// ids are an error.
  RetrievalResult retrieve(const StructuredTask& recovered,
                           const std::vector<std::string>& view) const;

  /// Gate a bank body through hidden probes for the given family/niche and
  /// register it on an all-pass report. Re-registering an identical
  /// body+niche is rejected as redundant without probing.
  AcceptOutcome accept_candidate(const std::string& body_id, Family f,
                                 const NicheKey& niche, uint64_t probe_seed,
                                 int n_probes = 2, int created_episode = 0,
                                 const std::string& parent_id = "");

  /// Per-use accounting; marks the tool activated.
  void record_use(const std::string& id, bool passed);

  /// Episode-level reuse signal for the rolling window: true when the
  /// episode ran an already-registered tool.
  void note_episode(bool reused_existing_tool);
  double rolling_reuse_rate() const;

  const Tool* find(const std::string& id) const;
  const Tool& at(const std::string& id) const;
  std::vector<std::string> ids() const;
  size_t size() const { return tools_.size(); }
  int activated_count() const;

  json manifest() const;
  static Toolbox from_manifest(const json& m, int reuse_window = 50);

 private:
  std::map<std::string, Tool> tools_;
  std::deque<bool> recent_;
  int window_;
  int next_index_ = 1;
};

/// Named executable bodies: per-family reference solvers, deliberately
/// defective variants for repair flows, and a cross-family dispatcher.
const std::vector<std::string>& body_bank_ids();
ToolBody tool_body(const std::string& body_id);
std::vector<std::string> body_families(const std::string& body_id);
std::string oracle_body_for(Family f);
std::string buggy_body_for(Family f);
/// Corrected variant of a defective body, when the bank has one.
std::optional<std::string> repaired_body_for(const std::string& body_id);

}  // namespace graphforge
