#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "credit.hpp"
#include "genome.hpp"
#include "toolbox.hpp"

namespace graphforge {

// ---------------------------------------------------------------------------
// Instruction mutation

struct MutationResult {
  InstructionGenome genome;
  bool changed = false;
  std::string note;
};

/// Apply an instruction plan: add the bank rule matching the plan's focus to
/// its home section, or tighten that rule's parameter if it is already
/// present. Exactly one section may change; with no applicable bank rule the
/// mutation is an identity, logged as skipped. `child_id` names the mutated
/// genome when a change happens.
MutationResult mutate_instruction(const InstructionGenome& genome,
                                  const UpdatePlan& plan,
                                  const std::string& child_id);

/// Unrouted ablation step: push the next bank rule (by rotation index) into
/// one section regardless of evidence, evicting the oldest rule past the
/// section cap.
MutationResult mutate_section_blind(const InstructionGenome& genome,
                                    Section section, int rotation,
                                    const std::string& child_id);

// ---------------------------------------------------------------------------
// Tool mutation

struct ToolMutation {
  bool has_candidate = false;
  std::string body_id;
  NicheKey niche;
  Family family = Family::shortest_path;
  std::string parent_tool;
  std::string note;
};

/// Derive a tool candidate from a plan: repair maps a defective parent body
/// to its corrected bank variant; grow picks the reference body for an
/// uncovered niche. The candidate still has to pass accept_candidate.
ToolMutation mutate_tool(const Toolbox& box, const UpdatePlan& plan);

UpdatePlan grow_plan(Family f, const NicheKey& niche);
UpdatePlan repair_plan(const std::string& parent_tool,
                       const std::string& parent_body, Family f,
                       const NicheKey& niche);

// ---------------------------------------------------------------------------
// Objectives and the frontier

struct ObjectiveVector {
  double S = 0.0;  // validation pass rate
  double G = 0.0;  // family buckets with at least one pass
  double R = 0.0;  // protocol reliability
  double Q = 0.0;  // parsimony

  json to_json() const;
  static ObjectiveVector from_json(const json& j);
  bool operator==(const ObjectiveVector& o) const = default;
};

struct PolicyPair {
  std::string id;
  InstructionGenome genome;
  std::vector<std::string> view;  // sorted tool ids
  std::optional<ObjectiveVector> objective;
  std::string parent_id;
  int born_episode = 0;

  json to_json() const;
  static PolicyPair from_json(const json& j);
};

struct ValidationOutcome {
  Family family = Family::shortest_path;
  bool passed = false;
  bool protocol_ok = false;
};

inline constexpr int kGenomeRuleCap = kSectionCount * kSectionRuleCap;
inline constexpr int kViewSizeCap = 40;

/// S/G/R from validation outcomes; Q = 1 − mean of (rule count / rule cap)
/// and (view size / view cap), clamped to [0,1]. Empty validation is an
/// error: a pair without evidence has no objective.
ObjectiveVector objective_vector(const PolicyPair& pair,
                                 const std::vector<ValidationOutcome>& results,
                                 int rule_cap = kGenomeRuleCap,
                                 int view_cap = kViewSizeCap);

/// Strict Pareto dominance: no component worse, at least one better.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

/// Lexicographic (S, R, G, Q) order; ties broken toward the smaller id so
/// selection is total and deterministic.
bool lexicographic_before(const PolicyPair& a, const PolicyPair& b);

/// Insert a candidate unless dominated, evicting newly-dominated incumbents;
/// past `cap` pairs the lexicographically-worst member is dropped. Every
/// pair must carry an objective vector.
std::vector<PolicyPair> frontier_update(std::vector<PolicyPair> frontier,
                                        PolicyPair candidate, int cap = 4);

/// Lexicographic max by (S, R, G, Q). Empty frontier is an error.
const PolicyPair& select_final(const std::vector<PolicyPair>& frontier);

}  // namespace graphforge
