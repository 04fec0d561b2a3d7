#include "graphforge/evolve.hpp"

#include <algorithm>
#include <set>

namespace graphforge {

// ---------------------------------------------------------------------------
// Sections and the rule bank

std::string to_string(Section s) {
  switch (s) {
    case Section::parse: return "parse";
    case Section::retrieve: return "retrieve";
    case Section::protocol: return "protocol";
    case Section::execute: return "execute";
  }
  throw CoreError("unhandled section");
}

Section section_from_string(const std::string& s) {
  if (s == "parse") return Section::parse;
  if (s == "retrieve") return Section::retrieve;
  if (s == "protocol") return Section::protocol;
  if (s == "execute") return Section::execute;
  throw CoreError("unknown section '" + s + "'");
}

const std::array<Section, kSectionCount>& all_sections() {
  static const std::array<Section, kSectionCount> sections{
      Section::parse, Section::retrieve, Section::protocol, Section::execute};
  return sections;
}

const std::vector<std::string>& rule_bank(Section s) {
  static const std::array<std::vector<std::string>, kSectionCount> banks{{
      {"reparse_on_slot_mismatch", "confirm_directedness",
       "trim_statement_whitespace", "scan_constraint_clauses"},
      {"require_exact_family_match", "prefer_higher_reuse", "rank_by_compat",
       "broaden_on_empty"},
      {"answer_only_after_execution", "emit_task_doc_first", "max_steps",
       "retry_failed_attempt"},
      {"require_payload_on_execute", "copy_task_doc_verbatim",
       "canonical_payload", "validate_slots_before_run"},
  }};
  return banks[static_cast<size_t>(s)];
}

std::optional<std::pair<Section, std::string>> bank_rule_for_focus(
    const std::string& focus) {
  if (focus == "parse_missing_slots")
    return std::pair{Section::parse, std::string("reparse_on_slot_mismatch")};
  if (focus == "parse_graph_mismatch")
    return std::pair{Section::parse, std::string("confirm_directedness")};
  if (focus == "execute_missing_task_input")
    return std::pair{Section::execute,
                     std::string("require_payload_on_execute")};
  if (focus == "premature_answer")
    return std::pair{Section::protocol,
                     std::string("answer_only_after_execution")};
  if (focus == "stage_order_violation")
    return std::pair{Section::protocol, std::string("emit_task_doc_first")};
  if (focus == "payload_format_mismatch")
    return std::pair{Section::execute, std::string("copy_task_doc_verbatim")};
  if (focus == "tool_selection_mismatch")
    return std::pair{Section::retrieve,
                     std::string("require_exact_family_match")};
  if (focus == "step_budget")
    return std::pair{Section::protocol, std::string("max_steps")};
  return std::nullopt;
}

namespace {

json default_params_for(const std::string& tag) {
  if (tag == "max_steps") return json{{"limit", 12}};
  return json::object();
}

}  // namespace

// ---------------------------------------------------------------------------
// Genome serialization and the seed

json InstructionGenome::to_json() const {
  json sections_j = json::object();
  for (Section s : all_sections()) {
    json arr = json::array();
    for (const GenomeRule& r : section(s))
      arr.push_back(json{{"id", r.id}, {"tag", r.tag}, {"params", r.params}});
    sections_j[graphforge::to_string(s)] = arr;
  }
  return json{{"id", id},
              {"sections", sections_j},
              {"ancestors", ancestors},
              {"provenance",
               json{{"route", provenance_route}, {"focus", provenance_focus}}}};
}

InstructionGenome InstructionGenome::from_json(const json& j) {
  InstructionGenome g;
  try {
    g.id = j.at("id").get<std::string>();
    for (Section s : all_sections()) {
      for (const json& r :
           j.at("sections").at(graphforge::to_string(s))) {
        g.section(s).push_back(GenomeRule{r.at("id").get<std::string>(),
                                          r.at("tag").get<std::string>(),
                                          r.at("params")});
      }
    }
    g.ancestors = j.at("ancestors").get<std::vector<std::string>>();
    g.provenance_route = j.at("provenance").at("route").get<std::string>();
    g.provenance_focus = j.at("provenance").at("focus").get<std::string>();
  } catch (const json::exception& e) {
    throw CoreError(std::string("invalid genome record: ") + e.what());
  }
  return g;
}

InstructionGenome seed_genome() {
  InstructionGenome g;
  g.id = "g0000";
  g.provenance_route = "seed";
  g.provenance_focus = "seed";
  auto put = [&g](Section s, const std::string& tag) {
    g.section(s).push_back(GenomeRule{tag, tag, default_params_for(tag)});
  };
  put(Section::parse, "trim_statement_whitespace");
  put(Section::retrieve, "rank_by_compat");
  put(Section::protocol, "max_steps");
  put(Section::execute, "canonical_payload");
  return g;
}

// ---------------------------------------------------------------------------
// Instruction mutation

namespace {

MutationResult identity_result(const InstructionGenome& g, std::string note) {
  return MutationResult{g, false, std::move(note)};
}

InstructionGenome child_of(const InstructionGenome& g,
                           const std::string& child_id,
                           const std::string& route,
                           const std::string& focus) {
  InstructionGenome child = g;
  child.id = child_id;
  child.ancestors.push_back(g.id);
  child.provenance_route = route;
  child.provenance_focus = focus;
  return child;
}

/// Append a rule, evicting the oldest once the section is over capacity.
void append_rule(std::vector<GenomeRule>& section, GenomeRule rule) {
  section.push_back(std::move(rule));
  while (static_cast<int>(section.size()) > kSectionRuleCap)
    section.erase(section.begin());
}

}  // namespace

MutationResult mutate_instruction(const InstructionGenome& genome,
                                  const UpdatePlan& plan,
                                  const std::string& child_id) {
  if (plan.op != PlanOperator::mutate_instruction)
    return identity_result(genome, "identity plan");
  auto rule = bank_rule_for_focus(plan.focus);
  if (!rule)
    return identity_result(genome, "no bank rule addresses focus '" +
                                       plan.focus + "'; mutation skipped");
  const Section target = rule->first;
  const std::string& tag = rule->second;
  if (const GenomeRule* existing = genome.find_rule(target, tag)) {
    // Already armed: tightening a parameter is the only remaining change.
    if (existing->params.is_object() && existing->params.contains("limit")) {
      int limit = existing->params.at("limit").get<int>();
      int tightened = std::max(8, limit - 1);
      if (tightened == limit)
        return identity_result(genome,
                               "rule '" + tag + "' already at its floor");
      InstructionGenome child =
          child_of(genome, child_id, plan.route, plan.focus);
      for (GenomeRule& r : child.section(target))
        if (r.tag == tag) r.params["limit"] = tightened;
      return MutationResult{std::move(child), true,
                            "tightened '" + tag + "' limit to " +
                                std::to_string(tightened)};
    }
    return identity_result(genome, "rule '" + tag + "' already present");
  }
  InstructionGenome child = child_of(genome, child_id, plan.route, plan.focus);
  append_rule(child.section(target),
              GenomeRule{tag, tag, default_params_for(tag)});
  return MutationResult{std::move(child), true,
                        "added '" + tag + "' to section " +
                            to_string(target)};
}

MutationResult mutate_section_blind(const InstructionGenome& genome,
                                    Section section, int rotation,
                                    const std::string& child_id) {
  const std::vector<std::string>& bank = rule_bank(section);
  const std::string& tag =
      bank[static_cast<size_t>(rotation) % bank.size()];
  InstructionGenome child =
      child_of(genome, child_id, "blind", "rotation_" + to_string(section));
  auto& rules = child.section(section);
  rules.erase(std::remove_if(rules.begin(), rules.end(),
                             [&tag](const GenomeRule& r) {
                               return r.tag == tag;
                             }),
              rules.end());
  append_rule(rules, GenomeRule{tag, tag, default_params_for(tag)});
  bool changed = !(child.section(section) == genome.section(section));
  if (!changed) return identity_result(genome, "rotation landed on identity");
  return MutationResult{std::move(child), true,
                        "rotated '" + tag + "' into section " +
                            to_string(section)};
}

// ---------------------------------------------------------------------------
// Tool mutation

ToolMutation mutate_tool(const Toolbox& box, const UpdatePlan& plan) {
  ToolMutation out;
  out.family = plan.family;
  if (plan.op == PlanOperator::tool_repair) {
    std::string body = plan.parent_body;
    std::string niche = plan.niche;
    if (!plan.parent_tool.empty()) {
      if (const Tool* parent = box.find(plan.parent_tool)) {
        if (body.empty()) body = parent->body_id;
        if (niche.empty()) niche = parent->meta.niche.render();
        out.parent_tool = plan.parent_tool;
      }
    }
    if (body.empty()) {
      out.note = "repair has no parent body to correct";
      return out;
    }
    auto fixed = repaired_body_for(body);
    if (!fixed) {
      out.note = "no corrected bank variant for body '" + body + "'";
      return out;
    }
    if (niche.empty()) {
      out.note = "repair has no target niche";
      return out;
    }
    out.has_candidate = true;
    out.body_id = *fixed;
    out.niche = NicheKey::parse(niche);
    out.note = "repair candidate '" + *fixed + "' for '" + body + "'";
    return out;
  }
  if (plan.op == PlanOperator::tool_grow) {
    std::string body =
        plan.grow_body.empty() ? oracle_body_for(plan.family) : plan.grow_body;
    const std::vector<std::string>& bank = body_bank_ids();
    if (std::find(bank.begin(), bank.end(), body) == bank.end()) {
      out.note = "bank has no body '" + body + "'";
      return out;
    }
    if (plan.niche.empty()) {
      out.note = "grow has no target niche";
      return out;
    }
    out.has_candidate = true;
    out.body_id = body;
    out.niche = NicheKey::parse(plan.niche);
    out.note = "grow candidate '" + body + "'";
    return out;
  }
  out.note = "not a tool plan";
  return out;
}

UpdatePlan grow_plan(Family f, const NicheKey& niche) {
  UpdatePlan p;
  p.op = PlanOperator::tool_grow;
  p.route = "tool_logic";
  p.focus = "uncovered_niche";
  p.family = f;
  p.niche = niche.render();
  return p;
}

UpdatePlan repair_plan(const std::string& parent_tool,
                       const std::string& parent_body, Family f,
                       const NicheKey& niche) {
  UpdatePlan p;
  p.op = PlanOperator::tool_repair;
  p.route = "tool_logic";
  p.focus = "tool_output_rejected";
  p.parent_tool = parent_tool;
  p.parent_body = parent_body;
  p.family = f;
  p.niche = niche.render();
  return p;
}

// ---------------------------------------------------------------------------
// Objectives and the frontier

json ObjectiveVector::to_json() const {
  return json{{"S", S}, {"G", G}, {"R", R}, {"Q", Q}};
}

ObjectiveVector ObjectiveVector::from_json(const json& j) {
  return ObjectiveVector{j.at("S").get<double>(), j.at("G").get<double>(),
                         j.at("R").get<double>(), j.at("Q").get<double>()};
}

json PolicyPair::to_json() const {
  return json{{"id", id},
              {"genome", genome.to_json()},
              {"view", view},
              {"objective", objective ? objective->to_json() : json()},
              {"parent", parent_id},
              {"born_episode", born_episode}};
}

PolicyPair PolicyPair::from_json(const json& j) {
  PolicyPair p;
  try {
    p.id = j.at("id").get<std::string>();
    p.genome = InstructionGenome::from_json(j.at("genome"));
    p.view = j.at("view").get<std::vector<std::string>>();
    if (!j.at("objective").is_null())
      p.objective = ObjectiveVector::from_json(j.at("objective"));
    p.parent_id = j.at("parent").get<std::string>();
    p.born_episode = j.at("born_episode").get<int>();
  } catch (const json::exception& e) {
    throw CoreError(std::string("invalid policy pair record: ") + e.what());
  }
  return p;
}

ObjectiveVector objective_vector(const PolicyPair& pair,
                                 const std::vector<ValidationOutcome>& results,
                                 int rule_cap, int view_cap) {
  if (results.empty())
    throw CoreError("objective vector needs a nonempty validation set");
  ObjectiveVector v;
  int passes = 0;
  int protocol_ok = 0;
  std::set<Family> passed_families;
  for (const ValidationOutcome& r : results) {
    passes += r.passed;
    protocol_ok += r.protocol_ok;
    if (r.passed) passed_families.insert(r.family);
  }
  const double n = static_cast<double>(results.size());
  v.S = passes / n;
  v.R = protocol_ok / n;
  v.G = static_cast<double>(passed_families.size()) / kFamilyCount;
  double size = (static_cast<double>(pair.genome.rule_count()) / rule_cap +
                 static_cast<double>(pair.view.size()) / view_cap) /
                2.0;
  v.Q = 1.0 - std::clamp(size, 0.0, 1.0);
  return v;
}

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  bool no_worse = a.S >= b.S && a.G >= b.G && a.R >= b.R && a.Q >= b.Q;
  bool better = a.S > b.S || a.G > b.G || a.R > b.R || a.Q > b.Q;
  return no_worse && better;
}

bool lexicographic_before(const PolicyPair& a, const PolicyPair& b) {
  if (!a.objective || !b.objective)
    throw CoreError("lexicographic ordering needs objective vectors");
  const ObjectiveVector& x = *a.objective;
  const ObjectiveVector& y = *b.objective;
  if (x.S != y.S) return x.S > y.S;
  if (x.R != y.R) return x.R > y.R;
  if (x.G != y.G) return x.G > y.G;
  if (x.Q != y.Q) return x.Q > y.Q;
  return a.id < b.id;
}

std::vector<PolicyPair> frontier_update(std::vector<PolicyPair> frontier,
                                        PolicyPair candidate, int cap) {
  if (!candidate.objective)
    throw CoreError("frontier candidates must carry an objective vector");
  for (const PolicyPair& p : frontier) {
    if (!p.objective)
      throw CoreError("frontier members must carry objective vectors");
    if (dominates(*p.objective, *candidate.objective)) return frontier;
  }
  frontier.erase(std::remove_if(frontier.begin(), frontier.end(),
                                [&candidate](const PolicyPair& p) {
                                  return dominates(*candidate.objective,
                                                   *p.objective);
                                }),
                 frontier.end());
  frontier.push_back(std::move(candidate));
  while (static_cast<int>(frontier.size()) > cap) {
    auto worst = std::max_element(
        frontier.begin(), frontier.end(),
        [](const PolicyPair& a, const PolicyPair& b) {
          return lexicographic_before(a, b);  // max_element finds the worst
        });
    frontier.erase(worst);
  }
  return frontier;
}

const PolicyPair& select_final(const std::vector<PolicyPair>& frontier) {
  if (frontier.empty()) throw CoreError("cannot select from an empty frontier");
  const PolicyPair* best = &frontier.front();
  for (const PolicyPair& p : frontier)
    if (lexicographic_before(p, *best)) best = &p;
  return *best;
}

}  // namespace graphforge
