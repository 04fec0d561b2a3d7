#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agent.hpp"
#include "core.hpp"
#include "genome.hpp"
#include "verifier.hpp"

namespace graphforge {

/// Structured failure evidence extracted from one episode: slot-level task
/// recovery deviations, tool-fit of whatever was executed, answer residual,
/// and protocol violations. Computed purely from the trajectory, the
/// verifier evidence, and the canonical task — never from statement text.
struct Diagnostics {
  Discrepancy parse_discrepancy;   // emitted task_doc vs canonical
  Discrepancy payload_discrepancy; // execution payload vs emitted task_doc
  /// (executed tool id or candidate body, compat against the canonical task)
  std::optional<std::pair<std::string, double>> selection_incompat;
  int64_t alg_residual = 0;
  std::vector<std::string> protocol_violations;
  std::vector<std::string> typed_missing_slots;
  /// 1.0 when the view offered a perfectly compatible tool, else 0.5.
  double theta_sel = 0.5;
  bool answered = false;

  json to_json() const;
};

enum class Route { instruction, tool_selection, tool_logic, no_op };
enum class Subtarget { parse, retrieve, protocol, execute, tool_space, identity };

std::string to_string(Route r);
std::string to_string(Subtarget s);
Route route_from_string(const std::string& s);
Subtarget subtarget_from_string(const std::string& s);

struct Attribution {
  Route route = Route::no_op;
  Subtarget subtarget = Subtarget::identity;
  std::string evidence_summary;
  std::string focus;  // machine-readable key driving the update plan

  json to_json() const;
};

Diagnostics diagnose(const Trajectory& trajectory,
                     const VerifierEvidence& evidence,
                     const StructuredTask& canonical);

/// Ordered cascade blaming the earliest clearly-failed stage: pass, protocol
/// breach, task-recovery mismatch (or payload formatting), tool selection
/// below threshold, failing compatible tool, else inconclusive.
Attribution assign_credit(const Diagnostics& diag,
                          const VerifierEvidence& evidence);

enum class PlanOperator { mutate_instruction, tool_repair, tool_grow, identity };
std::string to_string(PlanOperator op);

/// A named repair operator plus the evidence it receives. Dispatch never
/// mutates anything itself.
struct UpdatePlan {
  PlanOperator op = PlanOperator::identity;
  Section section = Section::parse;  // mutate_instruction target
  std::string focus;
  std::string route;        // provenance: the attribution route
  std::string parent_tool;  // tool_repair: blamed registered tool (may be "")
  std::string parent_body;  // tool_repair: blamed body id
  std::string grow_body;    // tool_grow: explicit body override
  Family family = Family::shortest_path;
  std::string niche;  // rendered target niche
  json evidence = json::object();
};

struct DispatchContext {
  std::string executed_tool;
  std::string executed_body;
  Family family = Family::shortest_path;
  std::string task_niche;  // rendered
};

UpdatePlan dispatch_update(const Attribution& att, const Diagnostics& diag,
                           const DispatchContext& ctx);

}  // namespace graphforge
