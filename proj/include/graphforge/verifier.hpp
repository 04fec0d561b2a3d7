#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "forge.hpp"

namespace graphforge {

/// Outcome of running a candidate tool body against freshly generated
/// hidden probe instances.
struct ProbeReport {
  int probes_run = 0;
  int probes_passed = 0;
  std::vector<std::string> messages;

  bool all_passed() const {
    return probes_run > 0 && probes_passed == probes_run;
  }
  json to_json() const;
};

/// Structured verdict for one answer against one canonical task. Every
/// failure is evidence, never an exception.
struct VerifierEvidence {
  bool passed = false;
  bool schema_valid = false;
  bool feasible = false;
  /// |claimed - optimal| for exactly graded values, 0/1 for booleans,
  /// budget overshoot (min 1) for feasibility violations.
  int64_t exactness_residual = 0;
  std::optional<ProbeReport> hidden_test_report;
  std::vector<std::string> error_messages;
  std::vector<std::string> missing_slots;

  json to_json() const;
};

/// Judge an answer against the canonical task. Checks the family's answer
/// shape, witness structure, constraint feasibility, and value optimality
/// under the tier's grading strictness. Optimal values are recomputed
/// internally; the claimant's arithmetic is never trusted. The statement
/// text plays no role.
VerifierEvidence verify(const Answer& answer, const StructuredTask& task);

/// Structural witness validity only: paths use real edges, tours visit each
/// node exactly once, flows conserve and respect capacities, orders respect
/// all arcs, colorings are proper, mappings are injective and
/// edge-preserving. Constraint budgets and value consistency are verify()'s
/// job. Returns the first failure message.
std::pair<bool, std::string> validate_witness(Family f, const json& witness,
                                              const StructuredTask& task);

/// An executable tool body: canonical task in, answer out.
using ToolBody = std::function<Answer(const StructuredTask&)>;

/// Run a candidate body on `n_probes` freshly generated instances of the
/// given family/tier (seeds derived from `probe_seed`, disjoint from episode
/// streams) and verify each output. A thrown exception or a probe taking
/// longer than `timeout_seconds` counts as a failed probe with a message; a
/// candidate can never crash the caller.
ProbeReport probe_candidate(const ToolBody& candidate, Family f,
                            Difficulty tier, uint64_t probe_seed,
                            int n_probes = 2, double timeout_seconds = 5.0);

}  // namespace graphforge
