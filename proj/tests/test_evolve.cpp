#include "doctest.h"

#include <algorithm>
#include <set>

#include "graphforge/evolve.hpp"
#include "graphforge/forge.hpp"
#include "graphforge/rng.hpp"

using namespace graphforge;

namespace {

UpdatePlan instruction_plan(const std::string& focus) {
  UpdatePlan p;
  p.op = PlanOperator::mutate_instruction;
  p.route = "instruction";
  p.focus = focus;
  return p;
}

PolicyPair make_pair_with(const std::string& id, ObjectiveVector v) {
  PolicyPair p;
  p.id = id;
  p.genome = seed_genome();
  p.objective = v;
  return p;
}

/// Independent O(n^2) non-dominated filter used as the reference.
std::vector<ObjectiveVector> brute_filter(
    const std::vector<ObjectiveVector>& vs) {
  std::vector<ObjectiveVector> keep;
  for (size_t i = 0; i < vs.size(); ++i) {
    bool dominated = false;
    for (size_t j = 0; j < vs.size() && !dominated; ++j) {
      if (i == j) continue;
      const ObjectiveVector& a = vs[j];
      const ObjectiveVector& b = vs[i];
      if (a.S >= b.S && a.G >= b.G && a.R >= b.R && a.Q >= b.Q &&
          (a.S > b.S || a.G > b.G || a.R > b.R || a.Q > b.Q))
        dominated = true;
    }
    if (!dominated) keep.push_back(vs[i]);
  }
  return keep;
}

}  // namespace

TEST_CASE("seed genome carries one rule per section") {
  InstructionGenome g = seed_genome();
  CHECK(g.id == "g0000");
  CHECK(g.provenance_route == "seed");
  CHECK(g.rule_count() == 4);
  CHECK(g.has_rule(Section::parse, "trim_statement_whitespace"));
  CHECK(g.has_rule(Section::retrieve, "rank_by_compat"));
  CHECK(g.has_rule(Section::execute, "canonical_payload"));
  const GenomeRule* steps = g.find_rule(Section::protocol, "max_steps");
  REQUIRE(steps != nullptr);
  CHECK(steps->params.at("limit") == 12);
  CHECK(g.ancestors.empty());
}

TEST_CASE("genome serialization round-trips") {
  InstructionGenome g = seed_genome();
  g.section(Section::parse).push_back(
      GenomeRule{"confirm_directedness", "confirm_directedness", json::object()});
  g.ancestors = {"gsome"};
  g.provenance_route = "instruction";
  g.provenance_focus = "parse_graph_mismatch";
  InstructionGenome back = InstructionGenome::from_json(g.to_json());
  CHECK(back == g);
  CHECK(back.to_json().dump() == g.to_json().dump());

  CHECK_THROWS_AS(InstructionGenome::from_json(json{{"id", "x"}}), CoreError);
}

TEST_CASE("rule bank holds four rules per section and focus table targets it") {
  for (Section s : all_sections()) {
    CHECK(rule_bank(s).size() == 4);
    CHECK(section_from_string(to_string(s)) == s);
  }
  auto check_focus = [](const std::string& focus, Section s,
                        const std::string& tag) {
    auto hit = bank_rule_for_focus(focus);
    REQUIRE(hit.has_value());
    CHECK(hit->first == s);
    CHECK(hit->second == tag);
    // every focus-table entry must exist in the matching bank
    const auto& bank = rule_bank(hit->first);
    CHECK(std::find(bank.begin(), bank.end(), hit->second) != bank.end());
  };
  check_focus("parse_missing_slots", Section::parse, "reparse_on_slot_mismatch");
  check_focus("parse_graph_mismatch", Section::parse, "confirm_directedness");
  check_focus("execute_missing_task_input", Section::execute,
              "require_payload_on_execute");
  check_focus("premature_answer", Section::protocol,
              "answer_only_after_execution");
  check_focus("stage_order_violation", Section::protocol, "emit_task_doc_first");
  check_focus("payload_format_mismatch", Section::execute,
              "copy_task_doc_verbatim");
  check_focus("tool_selection_mismatch", Section::retrieve,
              "require_exact_family_match");
  check_focus("step_budget", Section::protocol, "max_steps");
  CHECK_FALSE(bank_rule_for_focus("none").has_value());
  CHECK_FALSE(bank_rule_for_focus("inconclusive").has_value());
}

TEST_CASE("mutate_instruction changes exactly one section") {
  InstructionGenome g = seed_genome();
  MutationResult r =
      mutate_instruction(g, instruction_plan("parse_missing_slots"), "g0001");
  CHECK(r.changed);
  CHECK(r.genome.id == "g0001");
  CHECK(r.genome.ancestors == std::vector<std::string>{"g0000"});
  CHECK(r.genome.provenance_route == "instruction");
  CHECK(r.genome.provenance_focus == "parse_missing_slots");
  CHECK(r.genome.has_rule(Section::parse, "reparse_on_slot_mismatch"));

  // byte-diff: the three untouched sections serialize identically
  json before = g.to_json()["sections"];
  json after = r.genome.to_json()["sections"];
  int changed_sections = 0;
  for (Section s : all_sections()) {
    if (before[to_string(s)].dump() != after[to_string(s)].dump())
      ++changed_sections;
  }
  CHECK(changed_sections == 1);
}

TEST_CASE("mutate_instruction appends in stable order across focuses") {
  InstructionGenome g = seed_genome();
  // parse section starts with trim_statement_whitespace; two more adds hit the
  // cap of 2 and evict the oldest first.
  MutationResult a =
      mutate_instruction(g, instruction_plan("parse_missing_slots"), "g0001");
  REQUIRE(a.changed);
  const auto& parse_rules = a.genome.section(Section::parse);
  REQUIRE(parse_rules.size() == 2);
  CHECK(parse_rules[0].tag == "trim_statement_whitespace");
  CHECK(parse_rules[1].tag == "reparse_on_slot_mismatch");

  MutationResult b = mutate_instruction(
      a.genome, instruction_plan("parse_graph_mismatch"), "g0002");
  REQUIRE(b.changed);
  const auto& rules2 = b.genome.section(Section::parse);
  REQUIRE(rules2.size() == 2);
  CHECK(rules2[0].tag == "reparse_on_slot_mismatch");
  CHECK(rules2[1].tag == "confirm_directedness");
  CHECK(b.genome.ancestors == std::vector<std::string>{"g0000", "g0001"});
}

TEST_CASE("mutate_instruction identity cases") {
  InstructionGenome g = seed_genome();

  SUBCASE("identity plan leaves the genome untouched") {
    UpdatePlan p;
    p.op = PlanOperator::identity;
    MutationResult r = mutate_instruction(g, p, "g0001");
    CHECK_FALSE(r.changed);
    CHECK(r.genome == g);
  }
  SUBCASE("focus without a bank rule is skipped") {
    MutationResult r =
        mutate_instruction(g, instruction_plan("inconclusive"), "g0001");
    CHECK_FALSE(r.changed);
    CHECK(r.genome == g);
    CHECK(r.note.find("skipped") != std::string::npos);
  }
  SUBCASE("re-adding a parameterless rule is an identity") {
    MutationResult once =
        mutate_instruction(g, instruction_plan("parse_missing_slots"), "g0001");
    MutationResult twice = mutate_instruction(
        once.genome, instruction_plan("parse_missing_slots"), "g0002");
    CHECK_FALSE(twice.changed);
    CHECK(twice.genome == once.genome);
    CHECK(twice.note.find("already present") != std::string::npos);
  }
}

TEST_CASE("mutate_instruction tightens parameterized rules down to a floor") {
  InstructionGenome g = seed_genome();  // max_steps limit 12 already present
  std::string parent = "g0000";
  for (int expected = 11; expected >= 8; --expected) {
    MutationResult r =
        mutate_instruction(g, instruction_plan("step_budget"),
                           "g" + std::to_string(expected));
    REQUIRE(r.changed);
    CHECK(r.genome.find_rule(Section::protocol, "max_steps")
              ->params.at("limit") == expected);
    CHECK(r.genome.ancestors.back() == parent);
    parent = r.genome.id;
    g = r.genome;
  }
  MutationResult floor =
      mutate_instruction(g, instruction_plan("step_budget"), "gx");
  CHECK_FALSE(floor.changed);
  CHECK(floor.note.find("floor") != std::string::npos);
}

TEST_CASE("blind mutation rotates bank rules through a section") {
  InstructionGenome g = seed_genome();
  // rotation 0 over parse: bank[0] = reparse_on_slot_mismatch
  MutationResult r0 = mutate_section_blind(g, Section::parse, 0, "b1");
  REQUIRE(r0.changed);
  CHECK(r0.genome.section(Section::parse).back().tag ==
        "reparse_on_slot_mismatch");
  CHECK(r0.genome.provenance_route == "blind");

  // rotation 2 lands on trim_statement_whitespace which is already present:
  // it is refreshed (moved to the back), changing the order.
  MutationResult r2 = mutate_section_blind(r0.genome, Section::parse, 2, "b2");
  REQUIRE(r2.changed);
  const auto& rules = r2.genome.section(Section::parse);
  REQUIRE(rules.size() == 2);
  CHECK(rules[0].tag == "reparse_on_slot_mismatch");
  CHECK(rules[1].tag == "trim_statement_whitespace");

  // repeated rotations keep the section at the cap
  InstructionGenome cur = seed_genome();
  for (int rot = 0; rot < 12; ++rot) {
    MutationResult r = mutate_section_blind(cur, Section::execute, rot, "bx");
    if (r.changed) cur = r.genome;
    CHECK(cur.section(Section::execute).size() <= kSectionRuleCap);
  }
}

TEST_CASE("blind rotation cycles suppressors out of the section") {
  // With cap 2 and a 4-rule bank, any given rule is absent after two
  // subsequent distinct additions — this is what keeps blind updates weak.
  InstructionGenome cur = seed_genome();
  int present = 0, total = 0;
  for (int rot = 0; rot < 16; ++rot) {
    MutationResult r = mutate_section_blind(cur, Section::parse, rot, "bx");
    if (r.changed) cur = r.genome;
    ++total;
    if (cur.has_rule(Section::parse, "reparse_on_slot_mismatch")) ++present;
  }
  CHECK(present > 0);
  CHECK(present < total);  // the rule churns in and out, never sticking
}

TEST_CASE("tool mutation produces repair and grow candidates from the bank") {
  Toolbox box;
  NicheKey flow_niche =
      niche_key(generate(Family::max_flow, Difficulty::D2,
                         derive_seed(7, "evolve_flow"))
                    .task);

  SUBCASE("repair maps a buggy body to its corrected variant") {
    UpdatePlan p = repair_plan("", buggy_body_for(Family::max_flow),
                               Family::max_flow, flow_niche);
    ToolMutation m = mutate_tool(box, p);
    REQUIRE(m.has_candidate);
    CHECK(m.body_id == oracle_body_for(Family::max_flow));
    CHECK(m.niche == flow_niche);
  }
  SUBCASE("repair resolves the parent body through the registry") {
    // manifests are trusted, so a buggy tool can be loaded directly
    json m = Toolbox().manifest();
    m["tools"].push_back(json{{"id", "t01_max_flow_buggy_v1"},
                              {"body", buggy_body_for(Family::max_flow)},
                              {"families", {"max_flow"}},
                              {"niche", flow_niche.render()},
                              {"created_episode", 0},
                              {"parent", ""},
                              {"reuse_count", 0},
                              {"pass_count", 0},
                              {"activated", true}});
    m["next_index"] = 2;
    Toolbox loaded = Toolbox::from_manifest(m);
    UpdatePlan p =
        repair_plan("t01_max_flow_buggy_v1", "", Family::max_flow, NicheKey{});
    p.niche.clear();
    ToolMutation out = mutate_tool(loaded, p);
    REQUIRE(out.has_candidate);
    CHECK(out.body_id == oracle_body_for(Family::max_flow));
    CHECK(out.parent_tool == "t01_max_flow_buggy_v1");
    CHECK(out.niche == flow_niche);
  }
  SUBCASE("repair of an oracle body has no corrected variant") {
    UpdatePlan p = repair_plan("", oracle_body_for(Family::mst), Family::mst,
                               flow_niche);
    ToolMutation out = mutate_tool(box, p);
    CHECK_FALSE(out.has_candidate);
    CHECK(out.note.find("no corrected bank variant") != std::string::npos);
  }
  SUBCASE("grow defaults to the family oracle body") {
    UpdatePlan p = grow_plan(Family::scc, flow_niche);
    ToolMutation out = mutate_tool(box, p);
    REQUIRE(out.has_candidate);
    CHECK(out.body_id == "scc_oracle");
  }
  SUBCASE("grow with an unknown body yields no candidate") {
    UpdatePlan p = grow_plan(Family::scc, flow_niche);
    p.grow_body = "not_in_bank";
    ToolMutation out = mutate_tool(box, p);
    CHECK_FALSE(out.has_candidate);
    CHECK(out.note.find("no body") != std::string::npos);
  }
  SUBCASE("identity plan is not a tool plan") {
    UpdatePlan p;
    p.op = PlanOperator::identity;
    CHECK_FALSE(mutate_tool(box, p).has_candidate);
  }
}

TEST_CASE("objective vector aggregates validation outcomes") {
  PolicyPair pair;
  pair.id = "p0";
  pair.genome = seed_genome();  // 4 rules
  pair.view = {"t1", "t2", "t3", "t4"};

  std::vector<ValidationOutcome> results;
  // 2 cases per family, pass both in 10 families, fail both in 9;
  // protocol clean except 3 trajectories.
  for (int f = 0; f < kFamilyCount; ++f) {
    for (int c = 0; c < 2; ++c) {
      ValidationOutcome o;
      o.family = static_cast<Family>(f);
      o.passed = f < 10;
      o.protocol_ok = !(f == 0 && c == 0) && !(f == 5) ;
      results.push_back(o);
    }
  }
  ObjectiveVector v = objective_vector(pair, results);
  CHECK(v.S == doctest::Approx(20.0 / 38.0));
  CHECK(v.G == doctest::Approx(10.0 / 19.0));
  CHECK(v.R == doctest::Approx(35.0 / 38.0));
  // Q = 1 - ((4/8 + 4/40)/2) = 1 - 0.3
  CHECK(v.Q == doctest::Approx(0.7));

  CHECK_THROWS_AS(objective_vector(pair, {}), CoreError);

  SUBCASE("oversized pairs clamp Q at zero") {
    PolicyPair fat = pair;
    fat.view.assign(100, "t");
    for (int i = 0; i < 20; ++i)
      fat.genome.section(Section::parse).push_back(
          GenomeRule{"r" + std::to_string(i), "r", json::object()});
    CHECK(objective_vector(fat, results).Q == doctest::Approx(0.0));
  }
  SUBCASE("round-trip serialization") {
    ObjectiveVector back = ObjectiveVector::from_json(v.to_json());
    CHECK(back == v);
  }
}

TEST_CASE("dominance is componentwise with at least one strict win") {
  ObjectiveVector a{0.9, 0.5, 1.0, 0.2};
  ObjectiveVector b{0.8, 0.5, 1.0, 0.2};
  CHECK(dominates(a, b));
  CHECK_FALSE(dominates(b, a));
  CHECK_FALSE(dominates(a, a));  // irreflexive

  ObjectiveVector c{1, 0, 0, 0};
  ObjectiveVector d{0, 1, 0, 0};
  CHECK_FALSE(dominates(c, d));
  CHECK_FALSE(dominates(d, c));
}

TEST_CASE("dominance is irreflexive and antisymmetric on random pairs") {
  RandomStream rng(derive_seed(99, "dominates_props"));
  for (int i = 0; i < 2000; ++i) {
    ObjectiveVector a{rng.uniform01(), rng.uniform01(), rng.uniform01(),
                      rng.uniform01()};
    ObjectiveVector b{rng.uniform01(), rng.uniform01(), rng.uniform01(),
                      rng.uniform01()};
    CHECK_FALSE(dominates(a, a));
    CHECK_FALSE((dominates(a, b) && dominates(b, a)));
  }
}

TEST_CASE("frontier update matches a brute-force non-dominated filter") {
  RandomStream rng(derive_seed(4242, "frontier_prop"));
  for (int trial = 0; trial < 60; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform(1, 30));
    std::vector<ObjectiveVector> vs;
    std::vector<PolicyPair> frontier;
    for (int i = 0; i < n; ++i) {
      // coarse grid so duplicates and dominance chains both occur
      ObjectiveVector v{rng.uniform(0, 4) / 4.0, rng.uniform(0, 4) / 4.0,
                        rng.uniform(0, 4) / 4.0, rng.uniform(0, 4) / 4.0};
      vs.push_back(v);
      frontier = frontier_update(std::move(frontier),
                                 make_pair_with("p" + std::to_string(i), v),
                                 /*cap=*/n + 1);
    }
    std::vector<ObjectiveVector> expect = brute_filter(vs);
    // compare as multisets of serialized vectors
    std::multiset<std::string> got, want;
    for (const PolicyPair& p : frontier) got.insert(p.objective->to_json().dump());
    for (const ObjectiveVector& v : expect) want.insert(v.to_json().dump());
    CHECK(got == want);
  }
}

TEST_CASE("frontier enforces the population cap lexicographically") {
  std::vector<PolicyPair> frontier;
  // five mutually incomparable vectors; cap 4 drops the lexicographic worst
  frontier = frontier_update(std::move(frontier),
                             make_pair_with("a", {1.0, 0.1, 0.5, 0.5}), 4);
  frontier = frontier_update(std::move(frontier),
                             make_pair_with("b", {0.9, 0.2, 0.6, 0.5}), 4);
  frontier = frontier_update(std::move(frontier),
                             make_pair_with("c", {0.8, 0.3, 0.7, 0.5}), 4);
  frontier = frontier_update(std::move(frontier),
                             make_pair_with("d", {0.7, 0.4, 0.8, 0.5}), 4);
  frontier = frontier_update(std::move(frontier),
                             make_pair_with("e", {0.6, 0.5, 0.9, 0.5}), 4);
  REQUIRE(frontier.size() == 4);
  // "e" has the lowest S → lexicographically worst → dropped
  for (const PolicyPair& p : frontier) CHECK(p.id != "e");

  SUBCASE("dominated candidate leaves the frontier unchanged") {
    auto before = frontier.size();
    frontier = frontier_update(std::move(frontier),
                               make_pair_with("z", {0.1, 0.1, 0.1, 0.1}), 4);
    CHECK(frontier.size() == before);
  }
  SUBCASE("dominating candidate evicts incumbents") {
    frontier = frontier_update(std::move(frontier),
                               make_pair_with("win", {1.0, 1.0, 1.0, 1.0}), 4);
    REQUIRE(frontier.size() == 1);
    CHECK(frontier[0].id == "win");
  }
  SUBCASE("candidate without an objective is rejected") {
    PolicyPair bare;
    bare.id = "bare";
    bare.genome = seed_genome();
    CHECK_THROWS_AS(frontier_update(std::move(frontier), bare, 4), CoreError);
  }
}

TEST_CASE("final selection is lexicographic over (S, R, G, Q)") {
  std::vector<PolicyPair> frontier;
  CHECK_THROWS_AS(select_final(frontier), CoreError);

  frontier.push_back(make_pair_with("only", {0.5, 0.5, 0.5, 0.5}));
  CHECK(select_final(frontier).id == "only");

  frontier.clear();
  // fields are (S, G, R, Q); selection order is S, then R, then G, then Q
  frontier.push_back(make_pair_with("a", {0.9, 0.30, 0.9, 0.5}));
  frontier.push_back(make_pair_with("b", {0.9, 0.95, 0.2, 0.5}));
  // S ties → R breaks the tie even though b has better G
  CHECK(select_final(frontier).id == "a");

  frontier.push_back(make_pair_with("c", {0.9, 0.30, 0.9, 0.6}));
  CHECK(select_final(frontier).id == "c");  // tie through G, Q decides

  frontier.push_back(make_pair_with("a2", {0.9, 0.30, 0.9, 0.6}));
  CHECK(select_final(frontier).id == "a2");  // full tie → id order
}

TEST_CASE("policy pair serialization round-trips") {
  PolicyPair p = make_pair_with("pair7", {0.25, 0.5, 0.75, 1.0});
  p.view = {"t01_mst_oracle", "t02_scc_oracle"};
  p.parent_id = "pair3";
  p.born_episode = 114;
  PolicyPair back = PolicyPair::from_json(p.to_json());
  CHECK(back.id == p.id);
  CHECK(back.genome == p.genome);
  CHECK(back.view == p.view);
  CHECK(back.parent_id == p.parent_id);
  CHECK(back.born_episode == p.born_episode);
  REQUIRE(back.objective.has_value());
  CHECK(*back.objective == *p.objective);

  PolicyPair bare;
  bare.id = "bare";
  bare.genome = seed_genome();
  CHECK_FALSE(PolicyPair::from_json(bare.to_json()).objective.has_value());

  CHECK_THROWS_AS(PolicyPair::from_json(json{{"id", 3}}), CoreError);
}
