#include "doctest.h"

#include <algorithm>

#include "graphforge/credit.hpp"
#include "graphforge/evolve.hpp"
#include "graphforge/forge.hpp"

using namespace graphforge;

namespace {

Toolbox seeded_box() {
  Toolbox box;
  for (int i = 0; i < kFamilyCount; ++i) {
    Family f = static_cast<Family>(i);
    TaskInstance ti =
        generate(f, Difficulty::D1, derive_seed(900, "credit_seed_box", i));
    REQUIRE(box.accept_candidate(oracle_body_for(f), f, niche_key(ti.task),
                                 derive_seed(901, "credit_seed_probe", i))
                .accepted);
  }
  return box;
}

struct EpisodeBundle {
  TaskInstance instance;
  EpisodeOutcome outcome;
};

EpisodeBundle run_fault(const std::string& spec, Family f, uint64_t seed,
                        Toolbox& box) {
  EpisodeBundle b{generate(f, Difficulty::D1, seed), {}};
  auto agent = make_agent(AgentConfig::parse(spec));
  RandomStream rng(derive_seed(seed, "credit_episode"));
  EpisodeOptions opts;
  opts.probe_seed = derive_seed(seed, "credit_probe");
  b.outcome = run_episode(*agent, b.instance, box, box.ids(), seed_genome(),
                          opts, rng);
  return b;
}

Attribution attribute(const EpisodeBundle& b) {
  Diagnostics d =
      diagnose(b.outcome.trajectory, b.outcome.evidence, b.instance.task);
  return assign_credit(d, b.outcome.evidence);
}

TrajectoryStep make_step(Action a, json obs = json()) {
  TrajectoryStep s;
  s.stage = stage_of(a.kind);
  s.action = std::move(a);
  s.observation = std::move(obs);
  return s;
}

}  // namespace

TEST_CASE("passing oracle episodes diagnose clean and assign no_op") {
  Toolbox box = seeded_box();
  EpisodeBundle b =
      run_fault("oracle", Family::max_flow, derive_seed(80, "clean"), box);
  REQUIRE(b.outcome.evidence.passed);
  Diagnostics d =
      diagnose(b.outcome.trajectory, b.outcome.evidence, b.instance.task);
  CHECK(d.parse_discrepancy.scalar == 0);
  CHECK(d.payload_discrepancy.scalar == 0);
  CHECK(d.protocol_violations.empty());
  CHECK(d.typed_missing_slots.empty());
  CHECK(d.alg_residual == 0);
  CHECK(d.answered);
  CHECK(d.theta_sel == 1.0);  // retrieval offered a perfectly fitting tool
  REQUIRE(d.selection_incompat.has_value());
  CHECK(d.selection_incompat->second == 1.0);

  Attribution a = assign_credit(d, b.outcome.evidence);
  CHECK(a.route == Route::no_op);
  CHECK(a.subtarget == Subtarget::identity);
  CHECK(a.evidence_summary == "episode passed");
  CHECK(a.focus == "none");

  UpdatePlan plan = dispatch_update(a, d, DispatchContext{});
  CHECK(plan.op == PlanOperator::identity);
}

TEST_CASE("each fault mode routes to its expected repair target") {
  Toolbox box = seeded_box();
  struct Expected {
    const char* mode;
    Family family;
    Route route;
    Subtarget subtarget;
    const char* focus;
  };
  const std::vector<Expected> table = {
      {"parse_drop_field", Family::shortest_path, Route::instruction,
       Subtarget::parse, "parse_missing_slots"},
      {"protocol_skip_payload", Family::mst, Route::instruction,
       Subtarget::protocol, "execute_missing_task_input"},
      {"premature_answer", Family::scc, Route::instruction,
       Subtarget::protocol, "premature_answer"},
      {"wrong_tool", Family::mst, Route::tool_selection, Subtarget::retrieve,
       "tool_selection_mismatch"},
      {"buggy_tool", Family::topological_sort, Route::tool_logic,
       Subtarget::tool_space, "tool_output_rejected"},
  };
  int i = 0;
  for (const Expected& e : table) {
    CAPTURE(e.mode);
    EpisodeBundle b =
        run_fault(std::string("fault:") + e.mode + ":1.0", e.family,
                  derive_seed(81, "fault_route", i++), box);
    REQUIRE_FALSE(b.outcome.evidence.passed);
    Attribution a = attribute(b);
    CHECK(a.route == e.route);
    CHECK(a.subtarget == e.subtarget);
    CHECK(a.focus == e.focus);
    CHECK_FALSE(a.evidence_summary.empty());
  }
  // the none mode is the oracle: it passes and assigns no_op
  EpisodeBundle clean =
      run_fault("fault:none:1.0", Family::cycle, derive_seed(81, "none"), box);
  CHECK(attribute(clean).route == Route::no_op);
}

TEST_CASE("fault routing is deterministic across families and seeds") {
  Toolbox box = seeded_box();
  const std::vector<std::pair<std::string, Route>> modes = {
      {"parse_drop_field", Route::instruction},
      {"protocol_skip_payload", Route::instruction},
      {"premature_answer", Route::instruction},
      {"wrong_tool", Route::tool_selection},
      {"buggy_tool", Route::tool_logic},
      {"none", Route::no_op},
  };
  for (const auto& [mode, route] : modes) {
    CAPTURE(mode);
    for (int i = 0; i < 40; ++i) {
      EpisodeBundle b = run_fault("fault:" + mode + ":1.0",
                                  static_cast<Family>(i % kFamilyCount),
                                  derive_seed(82, "route_sweep", i), box);
      Attribution a = attribute(b);
      CAPTURE(i);
      CHECK(a.route == route);
    }
  }
}

TEST_CASE("missing task document hits the parse sentinel") {
  StructuredTask task =
      generate(Family::bridges, Difficulty::D1, derive_seed(83, "sentinel"))
          .task;
  // an execution and an answer, but no task_doc was ever emitted
  Trajectory t;
  t.steps = {make_step(Action::run("t0", canonical_json(task)),
                       json{{"tool", "t0"}}),
             make_step(Action::answer_with(Answer::empty(task.family)),
                       json{{"passed", false}})};
  t.final_answer = Answer::empty(task.family);
  VerifierEvidence ev;  // failed
  Diagnostics d = diagnose(t, ev, task);
  CHECK(d.parse_discrepancy.scalar >= 1000000);
  CHECK(d.parse_discrepancy.missing_slots ==
        std::vector<std::string>{"task_doc"});
  CHECK(d.typed_missing_slots == std::vector<std::string>{"task_doc"});
  Attribution a = assign_credit(d, ev);
  CHECK(a.route == Route::instruction);
  CHECK(a.subtarget == Subtarget::parse);
  CHECK(a.focus == "parse_missing_slots");
}

TEST_CASE("a malformed execution payload routes to the execute section") {
  StructuredTask task =
      generate(Family::mst, Difficulty::D1, derive_seed(84, "payload")).task;
  json doc = canonical_json(task);
  json degraded = doc;
  degraded.erase("seed");

  Trajectory t;
  t.steps = {make_step(Action::emit(doc)),
             make_step(Action::retrieve("mst D1"),
                       json{{"ranked", {{{"id", "t1"}, {"score", 1.0}}}}}),
             make_step(Action::run("t1", degraded),
                       json{{"tool", "t1"},
                            {"families", {"mst"}},
                            {"niche", niche_key(task).render()}}),
             make_step(Action::answer_with(Answer::empty(task.family)),
                       json{{"passed", false}})};
  t.final_answer = Answer::empty(task.family);
  VerifierEvidence ev;
  Diagnostics d = diagnose(t, ev, task);
  CHECK(d.parse_discrepancy.scalar == 0);
  CHECK(d.payload_discrepancy.scalar > 0);
  Attribution a = assign_credit(d, ev);
  CHECK(a.route == Route::instruction);
  CHECK(a.subtarget == Subtarget::execute);
  CHECK(a.focus == "payload_format_mismatch");

  UpdatePlan plan = dispatch_update(a, d, DispatchContext{});
  CHECK(plan.op == PlanOperator::mutate_instruction);
  CHECK(plan.section == Section::execute);
}

TEST_CASE("the selection threshold adapts to what retrieval offered") {
  StructuredTask task =
      generate(Family::scc, Difficulty::D1, derive_seed(85, "theta")).task;
  json doc = canonical_json(task);
  NicheKey own = niche_key(task);
  // same family but a higher tier: three of four niche components line up
  NicheKey off = own;
  off.tier = "D2";

  auto trajectory_with = [&](double offered_score) {
    Trajectory t;
    t.steps = {
        make_step(Action::emit(doc)),
        make_step(Action::retrieve("scc D1"),
                  json{{"ranked", {{{"id", "tX"}, {"score", offered_score}}}}}),
        make_step(Action::run("tX", doc),
                  json{{"tool", "tX"},
                       {"families", {"scc"}},
                       {"niche", off.render()}}),
        make_step(Action::answer_with(Answer::empty(task.family)),
                  json{{"passed", false}})};
    t.final_answer = Answer::empty(task.family);
    return t;
  };
  VerifierEvidence ev;  // failed, schema invalid

  SUBCASE("a perfect offer raises the bar and flags the mismatch") {
    Diagnostics d = diagnose(trajectory_with(1.0), ev, task);
    CHECK(d.theta_sel == 1.0);
    REQUIRE(d.selection_incompat.has_value());
    CHECK(d.selection_incompat->second == doctest::Approx(0.75));
    Attribution a = assign_credit(d, ev);
    CHECK(a.route == Route::tool_selection);
    CHECK(a.focus == "tool_selection_mismatch");
    CHECK(a.evidence_summary.find("below threshold") != std::string::npos);
  }
  SUBCASE("with only partial offers the pick is acceptable; blame the tool") {
    Diagnostics d = diagnose(trajectory_with(0.75), ev, task);
    CHECK(d.theta_sel == 0.5);
    Attribution a = assign_credit(d, ev);
    CHECK(a.route == Route::tool_logic);
    CHECK(a.subtarget == Subtarget::tool_space);
    CHECK(a.focus == "tool_output_rejected");
  }
  SUBCASE("without an answer the rejection is inconclusive") {
    Trajectory t = trajectory_with(0.75);
    t.steps.pop_back();
    t.final_answer.reset();
    Diagnostics d = diagnose(t, ev, task);
    CHECK_FALSE(d.answered);
    Attribution a = assign_credit(d, ev);
    CHECK(a.route == Route::no_op);
    CHECK(a.focus == "inconclusive");
  }
}

TEST_CASE("dispatch derives the mutation section from the focus table") {
  Diagnostics d;
  DispatchContext ctx;
  ctx.family = Family::mst;
  ctx.task_niche = "sparse_undirected / none / exact / D1";

  auto plan_for = [&](Route r, Subtarget s, const std::string& focus) {
    Attribution a;
    a.route = r;
    a.subtarget = s;
    a.focus = focus;
    a.evidence_summary = "x";
    return dispatch_update(a, d, ctx);
  };

  // the protocol breach about a missing payload is fixed in the execute
  // section: that is where the payload-construction rule lives
  UpdatePlan missing_payload = plan_for(Route::instruction, Subtarget::protocol,
                                        "execute_missing_task_input");
  CHECK(missing_payload.op == PlanOperator::mutate_instruction);
  CHECK(missing_payload.section == Section::execute);

  CHECK(plan_for(Route::instruction, Subtarget::protocol, "premature_answer")
            .section == Section::protocol);
  CHECK(plan_for(Route::instruction, Subtarget::parse, "parse_missing_slots")
            .section == Section::parse);
  CHECK(plan_for(Route::tool_selection, Subtarget::retrieve,
                 "tool_selection_mismatch")
            .section == Section::retrieve);
  // unknown focus falls back to the attribution subtarget
  CHECK(plan_for(Route::instruction, Subtarget::parse, "unmapped_focus")
            .section == Section::parse);
  CHECK(plan_for(Route::instruction, Subtarget::protocol, "unmapped_focus")
            .section == Section::protocol);

  UpdatePlan repair = [&] {
    Attribution a;
    a.route = Route::tool_logic;
    a.subtarget = Subtarget::tool_space;
    a.focus = "tool_output_rejected";
    DispatchContext c;
    c.executed_tool = "t03_max_flow_buggy_v1";
    c.executed_body = "max_flow_buggy_v1";
    c.family = Family::max_flow;
    c.task_niche = "sparse_directed / none / exact / D1";
    return dispatch_update(a, d, c);
  }();
  CHECK(repair.op == PlanOperator::tool_repair);
  CHECK(repair.parent_tool == "t03_max_flow_buggy_v1");
  CHECK(repair.parent_body == "max_flow_buggy_v1");
  CHECK(repair.family == Family::max_flow);
  CHECK(repair.evidence.contains("summary"));
  CHECK(repair.evidence.contains("diagnostics"));
}

TEST_CASE("the buggy-tool pipeline ends in an accepted repaired tool") {
  Toolbox box = seeded_box();
  EpisodeBundle b = run_fault("fault:buggy_tool:1.0", Family::max_flow,
                              derive_seed(86, "repair_pipeline"), box);
  REQUIRE_FALSE(b.outcome.evidence.passed);
  Diagnostics d =
      diagnose(b.outcome.trajectory, b.outcome.evidence, b.instance.task);
  Attribution a = assign_credit(d, b.outcome.evidence);
  REQUIRE(a.route == Route::tool_logic);

  DispatchContext ctx;
  ctx.executed_tool = b.outcome.tool_used;
  ctx.executed_body = b.outcome.candidate_body;
  ctx.family = b.instance.task.family;
  ctx.task_niche = niche_key(b.instance.task).render();
  UpdatePlan plan = dispatch_update(a, d, ctx);
  CHECK(plan.op == PlanOperator::tool_repair);
  CHECK(plan.parent_body == "max_flow_buggy_v1");

  ToolMutation m = mutate_tool(box, plan);
  REQUIRE(m.has_candidate);
  CHECK(m.body_id == "max_flow_oracle");
  // same body and niche as the seeded oracle tool: redundant, rejected
  AcceptOutcome res = box.accept_candidate(
      m.body_id, plan.family, m.niche, derive_seed(86, "repair_probe"));
  CHECK_FALSE(res.accepted);
  CHECK(res.reason.find("redundant") != std::string::npos);

  // at a different tier the repaired body registers as a new tool
  NicheKey d3 = m.niche;
  d3.tier = "D3";
  AcceptOutcome fresh = box.accept_candidate(
      m.body_id, plan.family, d3, derive_seed(86, "repair_probe_d3"));
  CHECK(fresh.accepted);
}

TEST_CASE("route and subtarget names round-trip") {
  for (Route r : {Route::instruction, Route::tool_selection, Route::tool_logic,
                  Route::no_op})
    CHECK(route_from_string(to_string(r)) == r);
  for (Subtarget s :
       {Subtarget::parse, Subtarget::retrieve, Subtarget::protocol,
        Subtarget::execute, Subtarget::tool_space, Subtarget::identity})
    CHECK(subtarget_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(route_from_string("nope"), CoreError);
  CHECK_THROWS_AS(subtarget_from_string("nope"), CoreError);
  CHECK(to_string(PlanOperator::tool_grow) == "tool_grow");

  Diagnostics d;
  d.selection_incompat = std::pair{std::string("t1"), 0.5};
  json j = d.to_json();
  CHECK(j.at("selection_incompat").at("executed") == "t1");
  CHECK(j.at("theta_sel") == 0.5);
}
