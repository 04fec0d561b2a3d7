#include "graphforge/credit.hpp"

#include <algorithm>

#include "graphforge/toolbox.hpp"

namespace graphforge {

namespace {

/// Sentinel scalar for "no task document was emitted at all".
constexpr int kNoTaskDocScalar = 1000000;

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const std::string& p : parts) {
    if (!out.empty()) out += ", ";
    out += p;
  }
  return out;
}

const TrajectoryStep* last_execution(const Trajectory& t) {
  for (auto it = t.steps.rbegin(); it != t.steps.rend(); ++it)
    if (it->action.kind == ActionKind::run_tool ||
        it->action.kind == ActionKind::run_candidate)
      return &*it;
  return nullptr;
}

const json* last_emitted_doc(const Trajectory& t) {
  for (auto it = t.steps.rbegin(); it != t.steps.rend(); ++it)
    if (it->action.kind == ActionKind::emit_task_doc)
      return &it->action.task_doc;
  return nullptr;
}

}  // namespace

json Diagnostics::to_json() const {
  json sel;
  if (selection_incompat)
    sel = json{{"executed", selection_incompat->first},
               {"compat", selection_incompat->second}};
  return json{{"parse_discrepancy", parse_discrepancy.to_json()},
              {"payload_discrepancy", payload_discrepancy.to_json()},
              {"selection_incompat", sel},
              {"alg_residual", alg_residual},
              {"protocol_violations", protocol_violations},
              {"typed_missing_slots", typed_missing_slots},
              {"theta_sel", theta_sel},
              {"answered", answered}};
}

std::string to_string(Route r) {
  switch (r) {
    case Route::instruction: return "instruction";
    case Route::tool_selection: return "tool_selection";
    case Route::tool_logic: return "tool_logic";
    case Route::no_op: return "no_op";
  }
  throw CoreError("unhandled route");
}

std::string to_string(Subtarget s) {
  switch (s) {
    case Subtarget::parse: return "parse";
    case Subtarget::retrieve: return "retrieve";
    case Subtarget::protocol: return "protocol";
    case Subtarget::execute: return "execute";
    case Subtarget::tool_space: return "tool_space";
    case Subtarget::identity: return "identity";
  }
  throw CoreError("unhandled subtarget");
}

Route route_from_string(const std::string& s) {
  for (Route r : {Route::instruction, Route::tool_selection, Route::tool_logic,
                  Route::no_op})
    if (to_string(r) == s) return r;
  throw CoreError("unknown route '" + s + "'");
}

Subtarget subtarget_from_string(const std::string& s) {
  for (Subtarget t : {Subtarget::parse, Subtarget::retrieve,
                      Subtarget::protocol, Subtarget::execute,
                      Subtarget::tool_space, Subtarget::identity})
    if (to_string(t) == s) return t;
  throw CoreError("unknown subtarget '" + s + "'");
}

json Attribution::to_json() const {
  return json{{"route", to_string(route)},
              {"subtarget", to_string(subtarget)},
              {"evidence_summary", evidence_summary},
              {"focus", focus}};
}

std::string to_string(PlanOperator op) {
  switch (op) {
    case PlanOperator::mutate_instruction: return "mutate_instruction";
    case PlanOperator::tool_repair: return "tool_repair";
    case PlanOperator::tool_grow: return "tool_grow";
    case PlanOperator::identity: return "identity";
  }
  throw CoreError("unhandled plan operator");
}

Diagnostics diagnose(const Trajectory& trajectory,
                     const VerifierEvidence& evidence,
                     const StructuredTask& canonical) {
  Diagnostics d;
  d.alg_residual = evidence.exactness_residual;
  d.protocol_violations = protocol_check(trajectory).second;
  d.answered = trajectory.final_answer.has_value();

  const json canonical_doc = canonical_json(canonical);
  const json* doc = last_emitted_doc(trajectory);
  if (doc) {
    d.parse_discrepancy = json_discrepancy(*doc, canonical_doc);
    d.typed_missing_slots =
        validate_structure(*doc, interface_for(canonical.family))
            .missing_slots;
  } else {
    d.parse_discrepancy.scalar = kNoTaskDocScalar;
    d.parse_discrepancy.missing_slots.push_back("task_doc");
    d.typed_missing_slots.push_back("task_doc");
  }

  const TrajectoryStep* exec = last_execution(trajectory);
  if (exec) {
    const Action& a = exec->action;
    const json& obs = exec->observation;
    if (doc && a.payload) d.payload_discrepancy = json_discrepancy(*a.payload, *doc);
    std::string ref =
        a.kind == ActionKind::run_tool ? a.tool_id : a.candidate_body;
    double score = 0.0;
    if (obs.is_object() && obs.contains("families")) {
      auto families = obs.at("families").get<std::vector<std::string>>();
      if (a.kind == ActionKind::run_tool && obs.contains("niche")) {
        ToolMeta meta{NicheKey::parse(obs.at("niche").get<std::string>()),
                      families, 0, ""};
        score = compat(meta, canonical);
      } else {
        // Candidates declare no niche of their own; they target the task's
        // niche, so fit reduces to the family tag.
        bool serves = std::find(families.begin(), families.end(),
                                to_string(canonical.family)) != families.end();
        score = serves ? 1.0 : 0.0;
      }
    }
    d.selection_incompat = std::pair{ref, score};
  }

  d.theta_sel = 0.5;
  for (const TrajectoryStep& s : trajectory.steps) {
    if (s.action.kind != ActionKind::retrieve_request) continue;
    if (!s.observation.is_object()) continue;
    for (const json& entry : s.observation.value("ranked", json::array()))
      if (entry.value("score", 0.0) >= 1.0) d.theta_sel = 1.0;
  }
  return d;
}

Attribution assign_credit(const Diagnostics& d,
                          const VerifierEvidence& evidence) {
  Attribution a;
  if (evidence.passed) {
    a.route = Route::no_op;
    a.subtarget = Subtarget::identity;
    a.evidence_summary = "episode passed";
    a.focus = "none";
    return a;
  }
  if (!d.protocol_violations.empty()) {
    a.route = Route::instruction;
    a.subtarget = Subtarget::protocol;
    a.focus = d.protocol_violations.front();
    a.evidence_summary = "protocol violation: " + join(d.protocol_violations);
    return a;
  }
  if (d.parse_discrepancy.scalar > 0) {
    a.route = Route::instruction;
    a.subtarget = Subtarget::parse;
    a.focus = d.typed_missing_slots.empty() ? "parse_graph_mismatch"
                                            : "parse_missing_slots";
    a.evidence_summary =
        "recovered task deviates from canonical in " +
        std::to_string(d.parse_discrepancy.scalar) + " slot(s)";
    if (!d.typed_missing_slots.empty())
      a.evidence_summary += "; missing " + join(d.typed_missing_slots);
    return a;
  }
  if (d.payload_discrepancy.scalar > 0) {
    // The task_doc matched canonical, so only the execution payload was
    // malformed: an execute-stage input-construction defect.
    a.route = Route::instruction;
    a.subtarget = Subtarget::execute;
    a.focus = "payload_format_mismatch";
    a.evidence_summary = "execution payload deviates from the emitted "
                         "task_doc in " +
                         std::to_string(d.payload_discrepancy.scalar) +
                         " slot(s)";
    return a;
  }
  if (d.selection_incompat && d.selection_incompat->second < d.theta_sel) {
    a.route = Route::tool_selection;
    a.subtarget = Subtarget::retrieve;
    a.focus = "tool_selection_mismatch";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "compat %.2f below threshold %.2f",
                  d.selection_incompat->second, d.theta_sel);
    a.evidence_summary =
        "selected '" + d.selection_incompat->first + "' with " + buf;
    return a;
  }
  const bool witness_invalid = !evidence.schema_valid || !evidence.feasible;
  if (d.selection_incompat && d.answered &&
      (d.alg_residual > 0 || witness_invalid)) {
    a.route = Route::tool_logic;
    a.subtarget = Subtarget::tool_space;
    a.focus = "tool_output_rejected";
    a.evidence_summary = "compatible tool '" + d.selection_incompat->first +
                         "' ran but the verifier rejected its output";
    return a;
  }
  a.route = Route::no_op;
  a.subtarget = Subtarget::identity;
  a.evidence_summary = "inconclusive: no actionable evidence";
  a.focus = "inconclusive";
  return a;
}

UpdatePlan dispatch_update(const Attribution& att, const Diagnostics& diag,
                           const DispatchContext& ctx) {
  UpdatePlan p;
  p.route = to_string(att.route);
  p.focus = att.focus;
  p.family = ctx.family;
  p.niche = ctx.task_niche;
  p.evidence = json{{"summary", att.evidence_summary},
                    {"diagnostics", diag.to_json()}};
  switch (att.route) {
    case Route::no_op:
      p.op = PlanOperator::identity;
      break;
    case Route::instruction:
    case Route::tool_selection: {
      p.op = PlanOperator::mutate_instruction;
      if (auto rule = bank_rule_for_focus(att.focus)) {
        p.section = rule->first;
      } else {
        switch (att.subtarget) {
          case Subtarget::parse: p.section = Section::parse; break;
          case Subtarget::retrieve: p.section = Section::retrieve; break;
          case Subtarget::execute: p.section = Section::execute; break;
          default: p.section = Section::protocol; break;
        }
      }
      break;
    }
    case Route::tool_logic:
      p.op = PlanOperator::tool_repair;
      p.parent_tool = ctx.executed_tool;
      p.parent_body = ctx.executed_body;
      break;
  }
  return p;
}

}  // namespace graphforge
