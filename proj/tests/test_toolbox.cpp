#include "doctest.h"

#include <algorithm>

#include "graphforge/forge.hpp"
#include "graphforge/solvers.hpp"
#include "graphforge/toolbox.hpp"
#include "graphforge/verifier.hpp"

using namespace graphforge;

namespace {

StructuredTask make_task(Family f, Difficulty d, uint64_t seed) {
  return generate(f, d, seed).task;
}

NicheKey niche_of(Family f, Difficulty d) {
  return niche_key(make_task(f, d, 7));
}

}  // namespace

TEST_CASE("niche keys render and parse") {
  StructuredTask scc1 = make_task(Family::scc, Difficulty::D1, 11);
  CHECK(niche_key(scc1).render() == "sparse_directed / none / exact / D1");

  StructuredTask tsp4 = make_task(Family::tsp, Difficulty::D4, 11);
  CHECK(niche_key(tsp4).render() ==
        "feasible_large / blocked_edges+max_cost / feasible_large / D4");

  SUBCASE("parse inverts render") {
    for (Family f : all_families()) {
      for (Difficulty d :
           {Difficulty::D1, Difficulty::D2, Difficulty::D3, Difficulty::D4}) {
        NicheKey k{regime_for(f, d), constraint_tag_for(f, d),
                   to_string(effective_exactness(f, d)), to_string(d)};
        CHECK(NicheKey::parse(k.render()) == k);
      }
    }
  }

  SUBCASE("parse rejects malformed keys") {
    CHECK_THROWS_AS(NicheKey::parse("a / b / c"), CoreError);
    CHECK_THROWS_AS(NicheKey::parse("a / b / exact / D9"), CoreError);
    CHECK_THROWS_AS(NicheKey::parse("a / b / sort_of / D1"), CoreError);
  }
}

TEST_CASE("compat scores tool-task fit") {
  StructuredTask mst1 = make_task(Family::mst, Difficulty::D1, 3);
  StructuredTask mst3 = make_task(Family::mst, Difficulty::D3, 3);
  StructuredTask scc1 = make_task(Family::scc, Difficulty::D1, 3);

  ToolMeta mst_d1{niche_key(mst1), {"mst"}, 0, ""};
  CHECK(compat(mst_d1, mst1) == doctest::Approx(1.0));
  // Disjoint family tags zero the score outright.
  CHECK(compat(mst_d1, scc1) == doctest::Approx(0.0));
  // Same family, later tier: the regime moved from dense to sparse but
  // constraints, exactness, and the tier ordering still match.
  CHECK(compat(mst_d1, mst3) == doctest::Approx(0.75));

  // A tool registered at a higher tier than the task loses the tier point.
  StructuredTask gnn1 = make_task(Family::gnn_sum, Difficulty::D1, 3);
  StructuredTask gnn4 = make_task(Family::gnn_sum, Difficulty::D4, 3);
  ToolMeta gnn_d4{niche_key(gnn4), {"gnn_sum"}, 0, ""};
  CHECK(compat(gnn_d4, gnn1) == doctest::Approx(0.75));

  // Cross-family capable body: family tag matches, niche drives the rest.
  ToolMeta omni{niche_key(mst1), {"mst", "scc"}, 0, ""};
  CHECK(compat(omni, scc1) < 1.0);
  CHECK(compat(omni, mst1) == doctest::Approx(1.0));
}

TEST_CASE("acceptance is gated by hidden probes") {
  Toolbox box;
  NicheKey n1 = niche_of(Family::mst, Difficulty::D1);

  SUBCASE("a correct body passes probes and registers") {
    AcceptOutcome ok =
        box.accept_candidate("mst_oracle", Family::mst, n1, 99, 2, 17);
    CHECK(ok.accepted);
    CHECK(ok.tool_id == "t01_mst_oracle");
    CHECK(ok.report.probes_run == 2);
    CHECK(ok.report.probes_passed == 2);
    REQUIRE(box.find(ok.tool_id) != nullptr);
    CHECK(box.at(ok.tool_id).meta.created_episode == 17);
    CHECK(box.at(ok.tool_id).meta.parent_id.empty());
    CHECK_FALSE(box.at(ok.tool_id).activated);
  }

  SUBCASE("a defective body is rejected with probe evidence") {
    AcceptOutcome bad =
        box.accept_candidate("mst_buggy_v1", Family::mst, n1, 99);
    CHECK_FALSE(bad.accepted);
    CHECK(bad.report.probes_run == 2);
    CHECK(bad.report.probes_passed == 0);
    CHECK(bad.reason == "hidden probes failed (0/2 passed)");
    CHECK(box.size() == 0);
  }

  SUBCASE("re-registering the same body and niche is redundant") {
    REQUIRE(box.accept_candidate("mst_oracle", Family::mst, n1, 99).accepted);
    AcceptOutcome dup = box.accept_candidate("mst_oracle", Family::mst, n1, 5);
    CHECK_FALSE(dup.accepted);
    CHECK(dup.reason == "redundant: same body and niche as t01_mst_oracle");
    CHECK(dup.report.probes_run == 0);  // rejected before probing
    CHECK(box.size() == 1);
    // Same body at a different niche is a distinct tool.
    NicheKey n3 = niche_of(Family::mst, Difficulty::D3);
    CHECK(box.accept_candidate("mst_oracle", Family::mst, n3, 99).accepted);
    CHECK(box.size() == 2);
  }

  SUBCASE("unknown bodies are an error") {
    CHECK_THROWS_WITH_AS(
        box.accept_candidate("mst_oracle_v9", Family::mst, n1, 99),
        "unknown body 'mst_oracle_v9'", CoreError);
  }
}

TEST_CASE("retrieval ranks by fit, reuse, then id") {
  Toolbox box;
  NicheKey mst1 = niche_of(Family::mst, Difficulty::D1);
  NicheKey mst3 = niche_of(Family::mst, Difficulty::D3);
  std::string a =
      box.accept_candidate("mst_oracle", Family::mst, mst1, 99).tool_id;
  std::string b =
      box.accept_candidate("mst_oracle", Family::mst, mst3, 99).tool_id;
  std::string c =
      box.accept_candidate("omni_router", Family::mst, mst1, 99).tool_id;
  std::string w =
      box.accept_candidate("scc_oracle", Family::scc,
                           niche_of(Family::scc, Difficulty::D1), 99)
          .tool_id;
  REQUIRE(box.size() == 4);

  StructuredTask task = make_task(Family::mst, Difficulty::D3, 21);
  std::vector<std::string> view = box.ids();

  SUBCASE("perfect niche first, zero-fit tools dropped") {
    RetrievalResult r = box.retrieve(task, view);
    REQUIRE(r.ranked.size() == 3);  // the scc tool scores 0 and is excluded
    CHECK(r.ranked[0].first == b);
    CHECK(r.ranked[0].second == doctest::Approx(1.0));
    // a and c share score 0.75; lexicographic id breaks the tie.
    CHECK(r.ranked[1].first == a);
    CHECK(r.ranked[2].first == c);
    CHECK(r.ranked[1].second == doctest::Approx(0.75));
  }

  SUBCASE("reuse count outranks id among equal scores") {
    box.record_use(c, true);
    RetrievalResult r = box.retrieve(task, view);
    CHECK(r.ranked[1].first == c);
    CHECK(r.ranked[2].first == a);
  }

  SUBCASE("view restricts candidates") {
    RetrievalResult r = box.retrieve(task, {a, w});
    REQUIRE(r.ranked.size() == 1);
    CHECK(r.ranked[0].first == a);
    CHECK(box.retrieve(task, {}).empty());
  }

  SUBCASE("unknown view ids are an error") {
    CHECK_THROWS_WITH_AS(box.retrieve(task, {"t99_ghost"}),
                         "unknown tool id 't99_ghost'", CoreError);
  }
}

TEST_CASE("use accounting and the rolling reuse window") {
  Toolbox box(4);  // small window to exercise eviction
  NicheKey n1 = niche_of(Family::cycle, Difficulty::D1);
  std::string id =
      box.accept_candidate("cycle_oracle", Family::cycle, n1, 99).tool_id;

  CHECK_THROWS_AS(box.record_use("t09_missing", true), CoreError);
  CHECK(box.activated_count() == 0);

  box.record_use(id, true);
  box.record_use(id, false);
  CHECK(box.at(id).reuse_count == 2);
  CHECK(box.at(id).pass_count == 1);
  CHECK(box.at(id).activated);
  CHECK(box.activated_count() == 1);

  CHECK(box.rolling_reuse_rate() == doctest::Approx(0.0));
  for (bool reused : {true, true, false, true, true}) box.note_episode(reused);
  // Window holds the last 4 episodes: T F T T.
  CHECK(box.rolling_reuse_rate() == doctest::Approx(0.75));
}

TEST_CASE("manifests round-trip a frozen toolbox") {
  Toolbox box;
  NicheKey n1 = niche_of(Family::scc, Difficulty::D1);
  std::string a =
      box.accept_candidate("scc_oracle", Family::scc, n1, 99, 2, 3).tool_id;
  std::string b = box.accept_candidate("omni_router", Family::bridges,
                                       niche_of(Family::bridges, Difficulty::D2),
                                       99, 2, 8, a)
                      .tool_id;
  box.record_use(a, true);

  json m = box.manifest();
  Toolbox frozen = Toolbox::from_manifest(m);
  CHECK(frozen.manifest() == m);
  CHECK(frozen.size() == 2);
  CHECK(frozen.at(a).reuse_count == 1);
  CHECK(frozen.at(a).activated);
  CHECK(frozen.at(b).meta.parent_id == a);

  SUBCASE("reloaded bodies still execute") {
    StructuredTask t = make_task(Family::scc, Difficulty::D1, 40);
    Answer ans = frozen.at(a).body(t);
    CHECK(verify(ans, t).passed);
  }

  SUBCASE("fresh registrations continue the id sequence") {
    AcceptOutcome next = frozen.accept_candidate(
        "mst_oracle", Family::mst, niche_of(Family::mst, Difficulty::D1), 99);
    CHECK(next.tool_id == "t03_mst_oracle");
  }

  SUBCASE("manifest naming unknown bodies is rejected") {
    json bad = m;
    bad["tools"][0]["body"] = "scc_oracle_v7";
    CHECK_THROWS_WITH_AS(Toolbox::from_manifest(bad),
                         "unknown body 'scc_oracle_v7'", CoreError);
  }

  SUBCASE("structurally broken manifests are rejected") {
    json bad = m;
    bad["tools"][0].erase("niche");
    CHECK_THROWS_AS(Toolbox::from_manifest(bad), CoreError);
    CHECK_THROWS_AS(Toolbox::from_manifest(json{{"tools", 5}}), CoreError);
  }
}

TEST_CASE("body bank inventory and repair mapping") {
  const std::vector<std::string>& ids = body_bank_ids();
  CHECK(ids.size() == 2 * 19 + 1);
  for (Family f : all_families()) {
    CHECK(std::count(ids.begin(), ids.end(), oracle_body_for(f)) == 1);
    CHECK(std::count(ids.begin(), ids.end(), buggy_body_for(f)) == 1);
    CHECK(body_families(oracle_body_for(f)) ==
          std::vector<std::string>{to_string(f)});
  }
  CHECK(body_families("omni_router").size() == 19);

  CHECK(repaired_body_for("max_flow_buggy_v1") == "max_flow_oracle");
  CHECK_FALSE(repaired_body_for("max_flow_oracle").has_value());
  CHECK_FALSE(repaired_body_for("omni_router").has_value());
  CHECK_FALSE(repaired_body_for("_buggy_v1").has_value());
  CHECK_THROWS_AS(tool_body("nonesuch"), CoreError);
}

TEST_CASE("bank bodies execute with strict payload discipline") {
  SUBCASE("oracle bodies solve their own family") {
    for (Family f : all_families()) {
      StructuredTask t = make_task(f, Difficulty::D2, 5);
      Answer ans = tool_body(oracle_body_for(f))(t);
      CHECK(verify(ans, t).passed);
    }
  }

  SUBCASE("the dispatcher body serves every family") {
    ToolBody omni = tool_body("omni_router");
    for (Family f : {Family::tsp, Family::gnn_sum, Family::vertex_cover}) {
      StructuredTask t = make_task(f, Difficulty::D1, 6);
      CHECK(verify(omni(t), t).passed);
    }
  }

  SUBCASE("defective bodies always fail verification") {
    for (Family f : all_families()) {
      for (uint64_t seed : {1ULL, 2ULL}) {
        StructuredTask t = make_task(f, Difficulty::D1, seed);
        Answer ans = tool_body(buggy_body_for(f))(t);
        VerifierEvidence ev = verify(ans, t);
        CHECK_MESSAGE(!ev.passed, to_string(f), " seed ", seed);
      }
    }
  }

  SUBCASE("cross-family payloads are refused") {
    StructuredTask t = make_task(Family::scc, Difficulty::D1, 9);
    CHECK_THROWS_WITH_AS(tool_body("mst_oracle")(t),
                         "body serves mst tasks, got a scc task", CoreError);
  }

  SUBCASE("payloads missing required slots are refused") {
    StructuredTask t = make_task(Family::shortest_path, Difficulty::D1, 9);
    t.query.target.reset();
    CHECK_THROWS_WITH_AS(tool_body("shortest_path_oracle")(t),
                         "payload rejected at slot 'query.target'", CoreError);
  }
}
