#include "doctest.h"

#include <algorithm>

#include "graphforge/agent.hpp"
#include "graphforge/forge.hpp"

using namespace graphforge;

namespace {

/// A toolbox holding one accepted oracle tool per family, niched at D1.
Toolbox seeded_box() {
  Toolbox box;
  for (int i = 0; i < kFamilyCount; ++i) {
    Family f = static_cast<Family>(i);
    TaskInstance ti =
        generate(f, Difficulty::D1, derive_seed(500, "agent_seed_box", i));
    AcceptOutcome res =
        box.accept_candidate(oracle_body_for(f), f, niche_key(ti.task),
                             derive_seed(501, "agent_seed_probe", i));
    REQUIRE(res.accepted);
  }
  return box;
}

EpisodeOutcome run_with(const std::string& agent_spec, Family f, Difficulty d,
                        uint64_t seed, Toolbox& box,
                        const InstructionGenome& genome,
                        EpisodeOptions opts = {}) {
  TaskInstance ti = generate(f, d, seed);
  auto agent = make_agent(AgentConfig::parse(agent_spec));
  RandomStream rng(derive_seed(seed, "agent_episode"));
  opts.probe_seed = derive_seed(seed, "agent_probe");
  return run_episode(*agent, ti, box, box.ids(), genome, opts, rng);
}

/// Replays a fixed action list; used to poke the environment directly.
struct SequenceAgent : Agent {
  std::vector<Action> script;
  size_t i = 0;
  Action next_action(AgentContext&) override {
    if (i < script.size()) return script[i++];
    return Action::bad("out of script");
  }
};

}  // namespace

TEST_CASE("oracle episodes reuse seeded tools and pass across tiers") {
  Toolbox box = seeded_box();
  InstructionGenome genome = seed_genome();
  struct Case {
    Family f;
    Difficulty d;
  };
  std::vector<Case> cases;
  for (int i = 0; i < kFamilyCount; ++i) {
    cases.push_back({static_cast<Family>(i), Difficulty::D1});
    cases.push_back({static_cast<Family>(i), Difficulty::D2});
  }
  cases.push_back({Family::connectivity, Difficulty::D4});
  cases.push_back({Family::mst, Difficulty::D3});

  for (const Case& c : cases) {
    CAPTURE(to_string(c.f));
    CAPTURE(to_string(c.d));
    EpisodeOutcome out = run_with("oracle", c.f, c.d,
                                  derive_seed(61, "oracle_pass",
                                              static_cast<int>(c.f),
                                              static_cast<int>(c.d)),
                                  box, genome);
    CHECK(out.evidence.passed);
    CHECK(out.trajectory.protocol_signature() ==
          "task_doc → retrieve → run_tool → direct_answer");
    auto [ok, violations] = protocol_check(out.trajectory);
    CHECK(ok);
    CHECK(violations.empty());
    CHECK(out.tool_used == "t" + std::string(static_cast<int>(c.f) + 1 < 10 ? "0" : "") +
                               std::to_string(static_cast<int>(c.f) + 1) + "_" +
                               oracle_body_for(c.f));
    CHECK(out.candidate_body.empty());
    CHECK_FALSE(out.proposed);
    REQUIRE(out.trajectory.final_answer.has_value());
    // the execution payload is the full canonical task document
    const Action& run = out.trajectory.steps[2].action;
    REQUIRE(run.payload.has_value());
    CHECK(*run.payload == canonical_json(generate(c.f, c.d,
                                                   derive_seed(61, "oracle_pass",
                                                               static_cast<int>(c.f),
                                                               static_cast<int>(c.d)))
                                             .task));
  }
}

TEST_CASE("oracle grows a tool when retrieval comes back empty") {
  Toolbox box;
  InstructionGenome genome = seed_genome();
  EpisodeOptions opts;
  opts.created_episode = 7;
  EpisodeOutcome out = run_with("oracle", Family::scc, Difficulty::D1,
                                derive_seed(62, "oracle_grow"), box, genome,
                                opts);
  CHECK(out.evidence.passed);
  CHECK(out.trajectory.protocol_signature() ==
        "task_doc → retrieve → propose_tool → run_candidate → direct_answer");
  CHECK(protocol_check(out.trajectory).first);
  CHECK(out.proposed);
  CHECK(out.accepted_tool == "t01_scc_oracle");
  CHECK(out.candidate_body == "scc_oracle");
  // running the accepted body inside the episode counts as first use
  CHECK(out.tool_used == "t01_scc_oracle");
  REQUIRE(box.size() == 1);
  CHECK(box.at("t01_scc_oracle").meta.created_episode == 7);
  // the proposal observation carries the hidden probe report
  const json& obs = out.trajectory.steps[2].observation;
  CHECK(obs.at("accepted") == true);
  CHECK(obs.at("probe_report").at("probes_passed") == 2);
}

TEST_CASE("proposals can be disabled; the candidate still runs unregistered") {
  Toolbox box;
  InstructionGenome genome = seed_genome();
  EpisodeOptions opts;
  opts.allow_propose = false;
  EpisodeOutcome out = run_with("oracle", Family::mst, Difficulty::D1,
                                derive_seed(63, "no_propose"), box, genome,
                                opts);
  CHECK(out.proposed);
  CHECK(out.accepted_tool.empty());
  CHECK(box.size() == 0);
  CHECK(out.trajectory.steps[2].observation.at("reason") ==
        "tool proposals disabled");
  // the bank body itself still executes and answers correctly
  CHECK(out.evidence.passed);
  CHECK(out.tool_used.empty());
  CHECK(out.candidate_body == "mst_oracle");
}

TEST_CASE("premature-answer fault answers straight after the task doc") {
  Toolbox box = seeded_box();
  EpisodeOutcome out =
      run_with("fault:premature_answer:1.0", Family::shortest_path,
               Difficulty::D1, derive_seed(64, "fault_premature"), box,
               seed_genome());
  CHECK_FALSE(out.evidence.passed);
  CHECK(out.trajectory.protocol_signature() == "task_doc → direct_answer");
  auto [ok, violations] = protocol_check(out.trajectory);
  CHECK_FALSE(ok);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0] == "premature_answer");
}

TEST_CASE("skip-payload fault gets its execution refused") {
  Toolbox box = seeded_box();
  EpisodeOutcome out =
      run_with("fault:protocol_skip_payload:1.0", Family::mst, Difficulty::D1,
               derive_seed(65, "fault_skip"), box, seed_genome());
  CHECK_FALSE(out.evidence.passed);
  auto [ok, violations] = protocol_check(out.trajectory);
  CHECK_FALSE(ok);
  CHECK(std::find(violations.begin(), violations.end(),
                  "execute_missing_task_input") != violations.end());
  const TrajectoryStep& run = out.trajectory.steps[2];
  REQUIRE(run.action.kind == ActionKind::run_tool);
  CHECK_FALSE(run.action.payload.has_value());
  CHECK(run.observation.at("error") == "execution refused: missing task_input");
  CHECK(out.tool_used.empty());  // nothing actually executed
}

TEST_CASE("drop-field fault emits a degraded doc the tool rejects") {
  Toolbox box = seeded_box();
  uint64_t seed = derive_seed(66, "fault_drop");
  EpisodeOutcome out = run_with("fault:parse_drop_field:1.0",
                                Family::shortest_path, Difficulty::D1, seed,
                                box, seed_genome());
  CHECK_FALSE(out.evidence.passed);
  // shortest_path's last droppable required slot is query.target
  const json& doc = out.trajectory.steps[0].action.task_doc;
  CHECK_FALSE(doc.at("task_input").at("query").contains("target"));
  json canonical =
      canonical_json(generate(Family::shortest_path, Difficulty::D1, seed).task);
  CHECK(doc != canonical);
  const json& run_obs = out.trajectory.steps[2].observation;
  REQUIRE(run_obs.contains("error"));
  CHECK(run_obs.at("error").get<std::string>().find(
            "payload rejected at slot 'query.target'") != std::string::npos);
}

TEST_CASE("flip-directed fault is observable in the emitted doc") {
  Toolbox box = seeded_box();
  uint64_t seed = derive_seed(67, "fault_flip");
  EpisodeOutcome out = run_with("fault:parse_flip_directed:1.0", Family::scc,
                                Difficulty::D1, seed, box, seed_genome());
  json canonical = canonical_json(generate(Family::scc, Difficulty::D1, seed).task);
  const json& doc = out.trajectory.steps[0].action.task_doc;
  bool doc_dir = doc.at("task_input").at("graph").value("directed", false);
  bool canon_dir = canonical.at("task_input").at("graph").value("directed", false);
  CHECK(doc_dir != canon_dir);
}

TEST_CASE("wrong-tool fault runs a tool from another family") {
  Toolbox box = seeded_box();
  EpisodeOutcome out =
      run_with("fault:wrong_tool:1.0", Family::mst, Difficulty::D1,
               derive_seed(68, "fault_wrong"), box, seed_genome());
  CHECK_FALSE(out.evidence.passed);
  REQUIRE_FALSE(out.tool_used.empty());
  const Tool& used = box.at(out.tool_used);
  CHECK(std::find(used.meta.families.begin(), used.meta.families.end(),
                  "mst") == used.meta.families.end());
  const json& run_obs = out.trajectory.steps[2].observation;
  REQUIRE(run_obs.contains("error"));
  CHECK(run_obs.at("error").get<std::string>().find("body serves") !=
        std::string::npos);
  // clean protocol: the breach is in selection, not in sequencing
  CHECK(protocol_check(out.trajectory).first);
}

TEST_CASE("buggy-tool fault runs a defective candidate body") {
  Toolbox box = seeded_box();
  EpisodeOutcome out =
      run_with("fault:buggy_tool:1.0", Family::mst, Difficulty::D1,
               derive_seed(69, "fault_buggy"), box, seed_genome());
  CHECK_FALSE(out.evidence.passed);
  CHECK(out.candidate_body == "mst_buggy_v1");
  CHECK(out.trajectory.protocol_signature() ==
        "task_doc → retrieve → run_candidate → direct_answer");
  CHECK(protocol_check(out.trajectory).first);  // sequencing itself is clean
  REQUIRE(out.trajectory.final_answer.has_value());
  CHECK_FALSE(out.trajectory.final_answer->value.is_null());
}

TEST_CASE("fault at rate zero behaves exactly like the oracle") {
  Toolbox box = seeded_box();
  InstructionGenome genome = seed_genome();
  for (const char* spec :
       {"fault:premature_answer:0.0", "fault:parse_drop_field:0.0",
        "fault:wrong_tool:0.0"}) {
    CAPTURE(spec);
    EpisodeOutcome faulty = run_with(spec, Family::bridges, Difficulty::D2,
                                     derive_seed(70, "rate_zero"), box, genome);
    EpisodeOutcome oracle = run_with("oracle", Family::bridges, Difficulty::D2,
                                     derive_seed(70, "rate_zero"), box, genome);
    CHECK(faulty.trajectory.to_json().dump() ==
          oracle.trajectory.to_json().dump());
    CHECK(faulty.evidence.passed);
  }
}

TEST_CASE("suppressor rules neutralize their fault modes") {
  Toolbox box = seeded_box();
  for (FaultMode m :
       {FaultMode::parse_drop_field, FaultMode::parse_flip_directed,
        FaultMode::wrong_tool, FaultMode::protocol_skip_payload,
        FaultMode::premature_answer}) {
    CAPTURE(to_string(m));
    auto rule = suppressor_for(m);
    REQUIRE(rule.has_value());
    InstructionGenome armed = seed_genome();
    armed.section(rule->first)
        .push_back(GenomeRule{rule->second, rule->second, json::object()});
    EpisodeOutcome out =
        run_with("fault:" + to_string(m) + ":1.0", Family::cycle,
                 Difficulty::D1, derive_seed(71, "suppressed"), box, armed);
    CHECK(out.evidence.passed);
    CHECK(out.trajectory.protocol_signature() ==
          "task_doc → retrieve → run_tool → direct_answer");
    CHECK(protocol_check(out.trajectory).first);
  }
  // buggy_tool is a tool-space defect: no instruction rule suppresses it
  CHECK_FALSE(suppressor_for(FaultMode::buggy_tool).has_value());
  CHECK_FALSE(suppressor_for(FaultMode::none).has_value());
}

TEST_CASE("step budget truncates runaway agents into failed evidence") {
  Toolbox box = seeded_box();
  TaskInstance ti =
      generate(Family::mst, Difficulty::D1, derive_seed(72, "budget"));
  struct LoopAgent : Agent {
    Action next_action(AgentContext&) override {
      return Action::retrieve("again");
    }
  } loop;
  RandomStream rng(1);

  SUBCASE("default budget is twelve steps") {
    EpisodeOutcome out = run_episode(loop, ti, box, box.ids(), seed_genome(),
                                     EpisodeOptions{}, rng);
    CHECK(out.trajectory.steps.size() == 12);
    CHECK_FALSE(out.evidence.passed);
    REQUIRE_FALSE(out.evidence.error_messages.empty());
    CHECK(out.evidence.error_messages[0] == "step budget exceeded");
    CHECK_FALSE(out.trajectory.final_answer.has_value());
  }
  SUBCASE("the genome's max_steps rule lowers the budget, floored at eight") {
    InstructionGenome tight = seed_genome();
    for (GenomeRule& r : tight.section(Section::protocol))
      if (r.tag == "max_steps") r.params["limit"] = 3;
    EpisodeOutcome out = run_episode(loop, ti, box, box.ids(), tight,
                                     EpisodeOptions{}, rng);
    CHECK(out.trajectory.steps.size() == 8);
  }
  SUBCASE("episode options can cut below the genome floor") {
    EpisodeOptions opts;
    opts.max_steps = 2;
    EpisodeOutcome out =
        run_episode(loop, ti, box, box.ids(), seed_genome(), opts, rng);
    CHECK(out.trajectory.steps.size() == 2);
  }
}

TEST_CASE("environment reports precise execution errors") {
  Toolbox box = seeded_box();
  TaskInstance ti =
      generate(Family::scc, Difficulty::D1, derive_seed(73, "env_errors"));
  json doc = canonical_json(ti.task);
  RandomStream rng(2);
  EpisodeOptions opts;

  SequenceAgent agent;
  agent.script = {
      Action::emit(doc),
      Action::run("t99_nope", doc),
      Action::run("t01_shortest_path_oracle", doc),  // exists, out of view
      Action::candidate("not_a_body", doc),
      Action::run("t09_scc_oracle", json("garbage")),
      Action::answer_with(ti.reference),
  };
  std::vector<std::string> narrow_view = {"t09_scc_oracle"};
  EpisodeOutcome out =
      run_episode(agent, ti, box, narrow_view, seed_genome(), opts, rng);
  const auto& steps = out.trajectory.steps;
  REQUIRE(steps.size() == 6);
  CHECK(steps[1].observation.at("error").get<std::string>().find(
            "unknown tool id") != std::string::npos);
  CHECK(steps[2].observation.at("error") == "tool not in the acting view");
  CHECK(steps[3].observation.contains("error"));
  CHECK(steps[4].observation.at("error").get<std::string>().find(
            "unusable payload") != std::string::npos);
  CHECK(out.evidence.passed);  // the reference answer still verifies
  CHECK(out.tool_used.empty());
}

TEST_CASE("protocol check flags the three violation kinds") {
  auto step = [](Action a) {
    TrajectoryStep s;
    s.stage = stage_of(a.kind);
    s.action = std::move(a);
    return s;
  };
  json doc = json::object();

  SUBCASE("empty trajectory is clean") {
    CHECK(protocol_check(Trajectory{}).first);
  }
  SUBCASE("payload-less executions are flagged once") {
    Trajectory t;
    t.steps = {step(Action::emit(doc)),
               step(Action::run("t1", std::nullopt)),
               step(Action::candidate("b", std::nullopt))};
    auto [ok, v] = protocol_check(t);
    CHECK_FALSE(ok);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == "execute_missing_task_input");
  }
  SUBCASE("answer without prior execution is premature") {
    Trajectory t;
    t.steps = {step(Action::emit(doc)),
               step(Action::answer_with(Answer::empty(Family::mst)))};
    auto [ok, v] = protocol_check(t);
    CHECK_FALSE(ok);
    CHECK(v == std::vector<std::string>{"premature_answer"});
    // unless the policy does not require execution
    CHECK(protocol_check(t, false).first);
  }
  SUBCASE("stages must not move backwards") {
    Trajectory t;
    t.steps = {step(Action::run("t1", doc)),
               step(Action::emit(doc)),
               step(Action::answer_with(Answer::empty(Family::mst)))};
    auto [ok, v] = protocol_check(t);
    CHECK_FALSE(ok);
    CHECK(std::find(v.begin(), v.end(), "stage_order_violation") != v.end());
  }
}

TEST_CASE("trajectories and actions serialize round-trip") {
  Toolbox box = seeded_box();
  EpisodeOutcome out =
      run_with("oracle", Family::max_flow, Difficulty::D2,
               derive_seed(74, "serialize"), box, seed_genome());
  json j = out.trajectory.to_json();
  CHECK(j.at("signature") == out.trajectory.protocol_signature());
  Trajectory back = Trajectory::from_json(j);
  CHECK(back.to_json().dump() == j.dump());

  // every action kind survives a round-trip
  std::vector<Action> actions = {
      Action::emit(json{{"family", "mst"}}),
      Action::retrieve("mst D1"),
      Action::propose("mst_oracle", "sparse_undirected / none / exact / D1"),
      Action::run("t01", json{{"k", 1}}),
      Action::run("t01", std::nullopt),
      Action::candidate("mst_oracle", json{{"k", 2}}),
      Action::answer_with(Answer::empty(Family::mst)),
      Action::bad("why"),
  };
  for (const Action& a : actions) {
    CAPTURE(to_string(a.kind));
    Action b = Action::from_json(a.to_json());
    CHECK(b.to_json().dump() == a.to_json().dump());
  }
  CHECK_THROWS(Action::from_json(json::array()));
  CHECK_THROWS(Action::from_json(json{{"kind", "no_such"}}));
}

TEST_CASE("agent config specs parse and render") {
  AgentConfig oracle = AgentConfig::parse("oracle");
  CHECK(oracle.kind == AgentConfig::Kind::oracle);
  CHECK(oracle.render() == "oracle");

  AgentConfig fault = AgentConfig::parse("fault:wrong_tool:0.25");
  CHECK(fault.kind == AgentConfig::Kind::fault);
  CHECK(fault.mode == FaultMode::wrong_tool);
  CHECK(fault.rate == doctest::Approx(0.25));
  CHECK(fault.render() == "fault:wrong_tool:0.25");

  AgentConfig ext = AgentConfig::parse("external:cat /dev/null");
  CHECK(ext.kind == AgentConfig::Kind::external);
  CHECK(ext.endpoint == "cat /dev/null");

  CHECK_THROWS_AS(AgentConfig::parse("fault:wrong_tool"), CoreError);
  CHECK_THROWS_AS(AgentConfig::parse("fault:no_such_mode:1.0"), CoreError);
  CHECK_THROWS_AS(AgentConfig::parse("fault:wrong_tool:abc"), CoreError);
  CHECK_THROWS_AS(AgentConfig::parse("fault:wrong_tool:1.5"), CoreError);
  CHECK_THROWS_AS(AgentConfig::parse("external:"), CoreError);
  CHECK_THROWS_AS(AgentConfig::parse("bogus"), CoreError);

  for (FaultMode m : {FaultMode::none, FaultMode::parse_drop_field,
                      FaultMode::parse_flip_directed, FaultMode::wrong_tool,
                      FaultMode::buggy_tool, FaultMode::protocol_skip_payload,
                      FaultMode::premature_answer})
    CHECK(fault_mode_from_string(to_string(m)) == m);
}

TEST_CASE("external agent speaks line-delimited json over a subprocess") {
  Toolbox box = seeded_box();
  InstructionGenome genome = seed_genome();
  TaskInstance ti =
      generate(Family::mst, Difficulty::D1, derive_seed(75, "external"));
  RandomStream rng(3);

  SUBCASE("replies drive the episode step by step") {
    std::string script =
        "n=0; while read line; do n=$((n+1)); "
        "if [ \"$n\" -eq 1 ]; then "
        "echo '{\"kind\":\"retrieve\",\"query\":\"from outside\"}'; "
        "else echo '{\"kind\":\"direct_answer\"}'; fi; done";
    auto agent = make_agent(AgentConfig::parse("external:" + script));
    EpisodeOutcome out = run_episode(*agent, ti, box, box.ids(), genome,
                                     EpisodeOptions{}, rng);
    CHECK(out.trajectory.protocol_signature() == "retrieve → direct_answer");
    // no task doc was emitted, so retrieval has nothing to rank
    CHECK(out.trajectory.steps[0].observation.at("error") ==
          "no task document emitted");
    CHECK_FALSE(out.evidence.passed);
    auto [ok, v] = protocol_check(out.trajectory);
    CHECK_FALSE(ok);
    CHECK(v == std::vector<std::string>{"premature_answer"});
  }
  SUBCASE("a full answer passes through the wire verbatim") {
    json reply{{"kind", "direct_answer"},
               {"answer", answer_to_json(ti.reference)}};
    std::string script =
        "while read line; do echo '" + reply.dump() + "'; done";
    auto agent = make_agent(AgentConfig::parse("external:" + script));
    EpisodeOutcome out = run_episode(*agent, ti, box, box.ids(), genome,
                                     EpisodeOptions{}, rng);
    CHECK(out.evidence.passed);  // correctness and protocol are independent
    CHECK_FALSE(protocol_check(out.trajectory).first);
  }
  SUBCASE("malformed replies become error observations until the budget ends") {
    AgentConfig cfg = AgentConfig::parse(
        "external:while read line; do echo not-json; done");
    cfg.external_retries = 2;
    auto agent = make_agent(cfg);
    EpisodeOptions opts;
    opts.max_steps = 3;
    EpisodeOutcome out =
        run_episode(*agent, ti, box, box.ids(), genome, opts, rng);
    REQUIRE(out.trajectory.steps.size() == 3);
    for (const TrajectoryStep& s : out.trajectory.steps) {
      CHECK(s.action.kind == ActionKind::invalid);
      CHECK(s.observation.at("error").get<std::string>().find(
                "malformed external reply") != std::string::npos);
    }
    CHECK_FALSE(out.evidence.passed);
    CHECK(out.evidence.error_messages[0] == "step budget exceeded");
  }
  SUBCASE("a silent endpoint times out into invalid steps") {
    AgentConfig cfg = AgentConfig::parse("external:sleep 30");
    cfg.external_timeout_seconds = 0.2;
    auto agent = make_agent(cfg);
    EpisodeOptions opts;
    opts.max_steps = 2;
    EpisodeOutcome out =
        run_episode(*agent, ti, box, box.ids(), genome, opts, rng);
    REQUIRE(out.trajectory.steps.size() == 2);
    CHECK(out.trajectory.steps[0].observation.at("error") ==
          "external agent timed out");
  }
}

TEST_CASE("episodes are deterministic given seed and toolbox state") {
  InstructionGenome genome = seed_genome();
  for (int rep = 0; rep < 2; ++rep) {
    Toolbox box;  // growth path: exercises proposal determinism too
    EpisodeOutcome a = run_with("oracle", Family::coloring, Difficulty::D2,
                                derive_seed(76, "determinism"), box, genome);
    Toolbox box2;
    EpisodeOutcome b = run_with("oracle", Family::coloring, Difficulty::D2,
                                derive_seed(76, "determinism"), box2, genome);
    CHECK(a.trajectory.to_json().dump() == b.trajectory.to_json().dump());
    CHECK(a.evidence.to_json().dump() == b.evidence.to_json().dump());
    CHECK(box.manifest().dump() == box2.manifest().dump());
  }
}
