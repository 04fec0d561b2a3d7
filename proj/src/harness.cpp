#include "graphforge/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <utility>

#include "graphforge/credit.hpp"
#include "graphforge/rng.hpp"
#include "graphforge/verifier.hpp"

namespace graphforge {

// ---------------------------------------------------------------------------
// Configuration

void RunConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0)
      throw CoreError(std::string(name) + " must be positive, got " +
                      std::to_string(v));
  };
  positive(episodes, "episodes");
  positive(attempts, "attempts");
  positive(validation_cases, "validation_cases");
  positive(probe_cases, "probe_cases");
  positive(population_cap, "population_cap");
  positive(reeval_cadence, "reeval_cadence");
  positive(workers, "workers");
  if (curriculum != "progressive" && curriculum != "fixed:D4")
    throw CoreError("unknown curriculum mode '" + curriculum + "'");
  if (sca != "routed" && sca != "blind")
    throw CoreError("unknown credit mode '" + sca + "'");
}

Curriculum RunConfig::make_curriculum() const {
  return Curriculum(curriculum == "fixed:D4");
}

// ---------------------------------------------------------------------------
// Episode records

json EpisodeRecord::to_json() const {
  if (excluded) return json{{"episode", episode}, {"excluded", true},
                            {"error", error}};
  return json{{"episode", episode},
              {"task_kind", task_kind},
              {"difficulty", difficulty},
              {"passed", passed},
              {"tool_used", tool_used},
              {"candidate_ran", candidate_ran},
              {"credit_assignment",
               json{{"route", route}, {"subtarget", subtarget},
                    {"focus", focus}}},
              {"typed_missing_slots", typed_missing_slots},
              {"protocol_signature", protocol_signature},
              {"protocol_ok", protocol_ok},
              {"attempts", attempts},
              {"timing", timing},
              {"instruction_mutations", instruction_mutations},
              {"tools_packaged", tools_packaged},
              {"frontier_size", frontier_size}};
}

EpisodeRecord EpisodeRecord::from_json(const json& j) {
  EpisodeRecord r;
  try {
    r.episode = j.at("episode").get<int>();
    r.excluded = j.value("excluded", false);
    if (r.excluded) {
      r.error = j.value("error", "");
      return r;
    }
    r.task_kind = j.at("task_kind").get<std::string>();
    r.difficulty = j.at("difficulty").get<std::string>();
    r.passed = j.at("passed").get<bool>();
    r.tool_used = j.at("tool_used").get<std::string>();
    r.candidate_ran = j.at("candidate_ran").get<bool>();
    const json& ca = j.at("credit_assignment");
    r.route = ca.at("route").get<std::string>();
    r.subtarget = ca.at("subtarget").get<std::string>();
    r.focus = ca.at("focus").get<std::string>();
    r.typed_missing_slots =
        j.at("typed_missing_slots").get<std::vector<std::string>>();
    r.protocol_signature = j.at("protocol_signature").get<std::string>();
    r.protocol_ok = j.at("protocol_ok").get<bool>();
    r.attempts = j.at("attempts").get<int>();
    r.timing = j.at("timing").get<int>();
    r.instruction_mutations = j.at("instruction_mutations").get<int>();
    r.tools_packaged = j.at("tools_packaged").get<std::vector<std::string>>();
    r.frontier_size = j.at("frontier_size").get<int>();
  } catch (const json::exception& e) {
    throw CoreError(std::string("invalid episode record: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Summaries

namespace {

bool reused_existing(const EpisodeRecord& r) {
  return r.tool_used != "none" &&
         std::find(r.tools_packaged.begin(), r.tools_packaged.end(),
                   r.tool_used) == r.tools_packaged.end();
}

}  // namespace

RunSummary summarize(const std::vector<EpisodeRecord>& records) {
  RunSummary s;
  std::set<std::string> used;
  std::vector<bool> reuse_flags;
  int passes = 0, protocol = 0, attempts = 0;
  for (const EpisodeRecord& r : records) {
    if (r.excluded) {
      ++s.excluded;
      continue;
    }
    ++s.counted;
    passes += r.passed ? 1 : 0;
    protocol += r.protocol_ok ? 1 : 0;
    attempts += r.attempts;
    s.instruction_mutations += r.instruction_mutations;
    s.packaged_tools += static_cast<int>(r.tools_packaged.size());
    if (r.tool_used != "none") used.insert(r.tool_used);
    reuse_flags.push_back(reused_existing(r));
    s.frontier_size = r.frontier_size;
    TierStat& t = s.per_tier[r.difficulty];
    ++t.episodes;
    if (t.first_seen < 0) t.first_seen = r.episode;
    FamilyStat& f = s.per_family[r.task_kind];
    ++f.episodes;
    f.passes += r.passed ? 1 : 0;
  }
  if (s.counted == 0) return s;
  s.pass_rate = static_cast<double>(passes) / s.counted;
  s.protocol_reliability = static_cast<double>(protocol) / s.counted;
  s.mean_attempts = static_cast<double>(attempts) / s.counted;
  s.used_tools = static_cast<int>(used.size());
  auto mean_of = [](auto first, auto last) {
    int n = 0, hits = 0;
    for (auto it = first; it != last; ++it, ++n) hits += *it ? 1 : 0;
    return n == 0 ? 0.0 : static_cast<double>(hits) / n;
  };
  s.reuse_rate = mean_of(reuse_flags.begin(), reuse_flags.end());
  size_t window = std::min<size_t>(kRollingWindow, reuse_flags.size());
  s.rolling_reuse_rate =
      mean_of(reuse_flags.end() - static_cast<long>(window),
              reuse_flags.end());
  return s;
}

json RunSummary::to_json() const {
  json tiers = json::object();
  for (const auto& [tier, st] : per_tier)
    tiers[tier] = json{{"episodes", st.episodes}, {"first_seen", st.first_seen}};
  json fams = json::object();
  for (const auto& [fam, st] : per_family)
    fams[fam] = json{{"episodes", st.episodes}, {"passes", st.passes}};
  return json{{"counted", counted},
              {"excluded", excluded},
              {"pass_rate", pass_rate},
              {"protocol_reliability", protocol_reliability},
              {"instruction_mutations", instruction_mutations},
              {"packaged_tools", packaged_tools},
              {"used_tools", used_tools},
              {"frontier_size", frontier_size},
              {"mean_attempts", mean_attempts},
              {"reuse_rate", reuse_rate},
              {"rolling_reuse_rate", rolling_reuse_rate},
              {"per_tier", tiers},
              {"per_family", fams}};
}

RunSummary RunSummary::from_json(const json& j) {
  RunSummary s;
  try {
    s.counted = j.at("counted").get<int>();
    s.excluded = j.at("excluded").get<int>();
    s.pass_rate = j.at("pass_rate").get<double>();
    s.protocol_reliability = j.at("protocol_reliability").get<double>();
    s.instruction_mutations = j.at("instruction_mutations").get<int>();
    s.packaged_tools = j.at("packaged_tools").get<int>();
    s.used_tools = j.at("used_tools").get<int>();
    s.frontier_size = j.at("frontier_size").get<int>();
    s.mean_attempts = j.at("mean_attempts").get<double>();
    s.reuse_rate = j.at("reuse_rate").get<double>();
    s.rolling_reuse_rate = j.at("rolling_reuse_rate").get<double>();
    for (const auto& [tier, st] : j.at("per_tier").items())
      s.per_tier[tier] = TierStat{st.at("episodes").get<int>(),
                                  st.at("first_seen").get<int>()};
    for (const auto& [fam, st] : j.at("per_family").items())
      s.per_family[fam] = FamilyStat{st.at("episodes").get<int>(),
                                     st.at("passes").get<int>()};
  } catch (const json::exception& e) {
    throw CoreError(std::string("invalid run summary: ") + e.what());
  }
  return s;
}

std::vector<EpisodeRecord> read_episode_log(
    const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw CoreError("cannot open episode log: " + file.string());
  std::vector<EpisodeRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(EpisodeRecord::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw CoreError("episode log line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return records;
}

RunSummary metrics_rollup(const std::filesystem::path& file) {
  return summarize(read_episode_log(file));
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

std::string counter_id(char prefix, int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%04d", prefix, n);
  return buf;
}

/// Visible slice of the registry: every tool id, or the newest kViewSizeCap
/// by creation episode when the registry outgrows the view.
std::vector<std::string> acting_view(const Toolbox& box) {
  std::vector<std::string> ids = box.ids();
  if (static_cast<int>(ids.size()) <= kViewSizeCap) return ids;
  std::sort(ids.begin(), ids.end(),
            [&box](const std::string& a, const std::string& b) {
              const Tool& ta = box.at(a);
              const Tool& tb = box.at(b);
              if (ta.meta.created_episode != tb.meta.created_episode)
                return ta.meta.created_episode > tb.meta.created_episode;
              return a > b;
            });
  ids.resize(kViewSizeCap);
  std::sort(ids.begin(), ids.end());
  return ids;
}

struct ValidationCase {
  Family family = Family::shortest_path;
  Difficulty tier = Difficulty::D1;
  uint64_t seed = 0;
};

/// One validation episode: fresh agent, proposals off, single attempt.
ValidationOutcome run_validation_case(const RunConfig& cfg, Toolbox& box,
                                      const InstructionGenome& genome,
                                      const std::vector<std::string>& view,
                                      const ValidationCase& vc) {
  TaskInstance inst = generate(vc.family, vc.tier, vc.seed);
  RandomStream rng(derive_seed(vc.seed, "validation_rng"));
  std::unique_ptr<Agent> agent = make_agent(cfg.agent);
  EpisodeOptions opts;
  opts.allow_propose = false;
  EpisodeOutcome out = run_episode(*agent, inst, box, view, genome, opts, rng);
  return ValidationOutcome{vc.family, out.evidence.passed,
                           protocol_check(out.trajectory).first};
}

/// Evaluate the working pair on validation_cases instances per family at the
/// family's current tier. Workers >1 only parallelize these read-only
/// episodes; result order is fixed by the case list.
std::vector<ValidationOutcome> validate_pair(
    const RunConfig& cfg, const Curriculum& cur, Toolbox& box,
    const InstructionGenome& genome, const std::vector<std::string>& view,
    int round) {
  std::vector<ValidationCase> cases;
  for (int i = 0; i < kFamilyCount; ++i) {
    Family f = static_cast<Family>(i);
    for (int c = 0; c < cfg.validation_cases; ++c)
      cases.push_back(
          {f, cur.tier(f),
           derive_seed(cfg.seed, "validation", static_cast<uint64_t>(round),
                       static_cast<uint64_t>(i * cfg.validation_cases + c))});
  }
  std::vector<ValidationOutcome> results(cases.size());
  int workers = std::min<int>(cfg.workers, static_cast<int>(cases.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < cases.size(); ++i)
      results[i] = run_validation_case(cfg, box, genome, view, cases[i]);
    return results;
  }
  std::vector<std::future<void>> tasks;
  tasks.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w)
    tasks.push_back(std::async(std::launch::async, [&, w] {
      for (size_t i = static_cast<size_t>(w); i < cases.size();
           i += static_cast<size_t>(workers))
        results[i] = run_validation_case(cfg, box, genome, view, cases[i]);
    }));
  for (auto& t : tasks) t.get();
  return results;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw CoreError("cannot write " + file.string());
  out << text;
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw CoreError("cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Toolbox initial_toolbox(const RunConfig& cfg) {
  if (cfg.seed_toolbox.empty()) return Toolbox();
  if (cfg.seed_toolbox == "oracle")
    return seed_oracle_toolbox(derive_seed(cfg.seed, "seed_toolbox"));
  return Toolbox::from_manifest(json::parse(read_text(cfg.seed_toolbox)));
}

}  // namespace

Toolbox seed_oracle_toolbox(uint64_t probe_seed) {
  Toolbox box;
  for (int i = 0; i < kFamilyCount; ++i) {
    Family f = static_cast<Family>(i);
    TaskInstance sample =
        generate(f, Difficulty::D1,
                 derive_seed(probe_seed, "seed_tool", static_cast<uint64_t>(i)));
    AcceptOutcome res = box.accept_candidate(
        oracle_body_for(f), f, niche_key(sample.task),
        derive_seed(probe_seed, "seed_probe", static_cast<uint64_t>(i)));
    if (!res.accepted)
      throw CoreError("seed tool rejected for " + to_string(f) + ": " +
                      res.reason);
  }
  return box;
}

TrainResult train(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.out_dir.empty()) throw CoreError("training needs an output directory");
  std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  std::ofstream log(out / "episodes.jsonl");
  if (!log) throw CoreError("cannot write " + (out / "episodes.jsonl").string());

  Curriculum cur = cfg.make_curriculum();
  Toolbox box = initial_toolbox(cfg);
  std::unique_ptr<Agent> agent = make_agent(cfg.agent);
  InstructionGenome genome = seed_genome();
  json lineage = json::array({genome.to_json()});
  int genome_counter = 0;
  int pair_counter = 0;
  std::string last_pair_id;
  std::vector<PolicyPair> frontier;
  // Every evaluated pair, kept for lineage inspection; only the frontier
  // stays live for selection.
  json archive = json::array();
  std::vector<EpisodeRecord> records;
  int round = 0;

  auto next_genome_id = [&genome_counter] {
    return counter_id('g', ++genome_counter);
  };
  auto apply_instruction = [&](const MutationResult& res, EpisodeRecord& rec) {
    if (!res.changed) return;
    genome = res.genome;
    lineage.push_back(genome.to_json());
    ++rec.instruction_mutations;
  };

  for (int e = 1; e <= cfg.episodes; ++e) {
    // Snapshots make a thrown episode side-effect free.
    Curriculum cur_before = cur;
    Toolbox box_before = box;
    InstructionGenome genome_before = genome;
    json lineage_before = lineage;
    int genome_counter_before = genome_counter;

    EpisodeRecord rec;
    rec.episode = e;
    try {
      auto [fam, tier] = cur.next_episode();
      rec.task_kind = to_string(fam);
      rec.difficulty = to_string(tier);
      TaskInstance inst =
          generate(fam, tier, derive_seed(cfg.seed, "episode",
                                          static_cast<uint64_t>(e)));

      EpisodeOutcome last;
      bool attempts_clean = true;
      for (int a = 0; a < cfg.attempts; ++a) {
        RandomStream rng(derive_seed(cfg.seed, "attempt",
                                     static_cast<uint64_t>(e),
                                     static_cast<uint64_t>(a)));
        EpisodeOptions opts;
        opts.allow_propose = cfg.propose_tool;
        opts.probe_seed = derive_seed(cfg.seed, "probe",
                                      static_cast<uint64_t>(e),
                                      static_cast<uint64_t>(a));
        opts.probe_cases = cfg.probe_cases;
        opts.created_episode = e;
        opts.attempt = a;
        EpisodeOutcome outcome = run_episode(*agent, inst, box,
                                             acting_view(box), genome, opts,
                                             rng);
        ++rec.attempts;
        rec.timing += static_cast<int>(outcome.trajectory.steps.size());
        if (!outcome.accepted_tool.empty())
          rec.tools_packaged.push_back(outcome.accepted_tool);
        attempts_clean =
            attempts_clean && protocol_check(outcome.trajectory).first;
        last = std::move(outcome);
        if (last.evidence.passed) break;
      }

      rec.passed = last.evidence.passed;
      if (!last.tool_used.empty()) rec.tool_used = last.tool_used;
      rec.candidate_ran = !last.candidate_body.empty();
      rec.protocol_signature = last.trajectory.protocol_signature();
      // A retried breach still counts against the episode: every attempt
      // must have sequenced cleanly.
      rec.protocol_ok = attempts_clean;
      if (rec.tool_used != "none") box.record_use(rec.tool_used, rec.passed);
      box.note_episode(reused_existing(rec));

      Diagnostics diag = diagnose(last.trajectory, last.evidence, inst.task);
      Attribution att = assign_credit(diag, last.evidence);
      rec.route = to_string(att.route);
      rec.subtarget = to_string(att.subtarget);
      rec.focus = att.focus;
      rec.typed_missing_slots = diag.typed_missing_slots;

      if (cfg.sca == "blind") {
        // Ablation: mutate every section each episode, evidence unused.
        for (Section s : all_sections())
          apply_instruction(mutate_section_blind(genome, s, e,
                                                 next_genome_id()),
                            rec);
      } else {
        DispatchContext dctx;
        dctx.executed_tool = last.tool_used;
        dctx.executed_body = !last.candidate_body.empty()
                                 ? last.candidate_body
                                 : (last.tool_used.empty()
                                        ? ""
                                        : box.at(last.tool_used).body_id);
        dctx.family = fam;
        dctx.task_niche = niche_key(inst.task).render();
        UpdatePlan plan = dispatch_update(att, diag, dctx);
        switch (plan.op) {
          case PlanOperator::mutate_instruction:
            apply_instruction(mutate_instruction(genome, plan,
                                                 next_genome_id()),
                              rec);
            break;
          case PlanOperator::tool_repair:
          case PlanOperator::tool_grow: {
            ToolMutation tm = mutate_tool(box, plan);
            if (tm.has_candidate) {
              AcceptOutcome res = box.accept_candidate(
                  tm.body_id, tm.family, tm.niche,
                  derive_seed(cfg.seed, "repair_probe",
                              static_cast<uint64_t>(e)),
                  cfg.probe_cases, e, tm.parent_tool);
              if (res.accepted) rec.tools_packaged.push_back(res.tool_id);
            }
            break;
          }
          case PlanOperator::identity:
            break;
        }
      }

      cur.record_result(fam, rec.passed);

      if (e % cfg.reeval_cadence == 0 || e == cfg.episodes) {
        PolicyPair pair;
        pair.id = counter_id('p', ++pair_counter);
        pair.genome = genome;
        pair.view = acting_view(box);
        pair.parent_id = last_pair_id;
        pair.born_episode = e;
        pair.objective = objective_vector(
            pair, validate_pair(cfg, cur, box, genome, pair.view, ++round));
        last_pair_id = pair.id;
        json archived = pair.to_json();
        frontier = frontier_update(std::move(frontier), std::move(pair),
                                   cfg.population_cap);
        archive.push_back(std::move(archived));
      }
      rec.frontier_size = static_cast<int>(frontier.size());
    } catch (const std::exception& ex) {
      cur = std::move(cur_before);
      box = std::move(box_before);
      genome = std::move(genome_before);
      lineage = std::move(lineage_before);
      genome_counter = genome_counter_before;
      rec = EpisodeRecord{};
      rec.episode = e;
      rec.excluded = true;
      rec.error = ex.what();
    }
    log << rec.to_json().dump() << "\n";
    records.push_back(std::move(rec));
  }
  log.close();

  TrainResult result;
  result.summary = summarize(records);
  result.frontier = frontier;
  result.selected = select_final(frontier);

  write_text(out / "toolbox.json", box.manifest().dump(2) + "\n");
  write_text(out / "genomes.json",
             json{{"lineage", lineage}, {"active", genome.id}}.dump(2) + "\n");
  json pairs = json::array();
  for (const PolicyPair& p : frontier) pairs.push_back(p.to_json());
  write_text(out / "frontier.json",
             json{{"pairs", pairs},
                  {"archive", archive},
                  {"selected", result.selected.id}}
                     .dump(2) +
                 "\n");
  write_text(out / "summary.json", result.summary.to_json().dump(2) + "\n");
  return result;
}

// ---------------------------------------------------------------------------
// Benchmark evaluation

void write_benchmark(const std::filesystem::path& file,
                     const std::vector<BenchmarkCase>& cases) {
  std::ofstream out(file);
  if (!out) throw CoreError("cannot write " + file.string());
  for (const BenchmarkCase& c : cases)
    out << json{{"family", to_string(c.family)},
                {"difficulty", to_string(c.difficulty)},
                {"seed", c.seed}}
               .dump()
        << "\n";
}

std::vector<BenchmarkCase> read_benchmark(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw CoreError("cannot open benchmark file: " + file.string());
  std::vector<BenchmarkCase> cases;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      cases.push_back({family_from_string(j.at("family").get<std::string>()),
                       difficulty_from_string(
                           j.at("difficulty").get<std::string>()),
                       j.at("seed").get<uint64_t>()});
    } catch (const std::exception& e) {
      throw CoreError("benchmark line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return cases;
}

json EvalReport::to_json() const {
  json fams = json::object();
  for (const auto& [fam, st] : per_family)
    fams[fam] = json{{"episodes", st.episodes}, {"passes", st.passes}};
  return json{{"pair_id", pair_id},
              {"cases", cases},
              {"passed", passed},
              {"pass_rate", pass_rate},
              {"protocol_reliability", protocol_reliability},
              {"per_family", fams}};
}

EvalReport evaluate(const std::filesystem::path& run_dir,
                    const std::filesystem::path& benchmark,
                    const RunConfig& cfg) {
  json toolbox_manifest;
  json frontier_manifest;
  try {
    toolbox_manifest = json::parse(read_text(run_dir / "toolbox.json"));
    frontier_manifest = json::parse(read_text(run_dir / "frontier.json"));
  } catch (const json::exception& e) {
    throw CoreError("run manifests failed to parse: " + std::string(e.what()));
  }
  Toolbox box = Toolbox::from_manifest(toolbox_manifest);
  std::vector<PolicyPair> pairs;
  try {
    for (const json& p : frontier_manifest.at("pairs"))
      pairs.push_back(PolicyPair::from_json(p));
  } catch (const json::exception& e) {
    throw CoreError("frontier manifest: " + std::string(e.what()));
  }
  PolicyPair selected = select_final(pairs);
  if (box.manifest() != toolbox_manifest)
    throw CoreError("toolbox manifest did not round-trip");

  std::vector<BenchmarkCase> cases = read_benchmark(benchmark);
  std::unique_ptr<Agent> agent = make_agent(cfg.agent);

  EvalReport report;
  report.pair_id = selected.id;
  int protocol = 0;
  for (size_t i = 0; i < cases.size(); ++i) {
    const BenchmarkCase& c = cases[i];
    TaskInstance inst = generate(c.family, c.difficulty, c.seed);
    RandomStream rng(derive_seed(c.seed, "evaluation",
                                 static_cast<uint64_t>(i)));
    EpisodeOptions opts;  // eval mode: one attempt, proposals off
    opts.allow_propose = false;
    EpisodeOutcome out = run_episode(*agent, inst, box, selected.view,
                                     selected.genome, opts, rng);
    ++report.cases;
    report.passed += out.evidence.passed ? 1 : 0;
    protocol += protocol_check(out.trajectory).first ? 1 : 0;
    FamilyStat& st = report.per_family[to_string(c.family)];
    ++st.episodes;
    st.passes += out.evidence.passed ? 1 : 0;
  }
  if (report.cases > 0) {
    report.pass_rate = static_cast<double>(report.passed) / report.cases;
    report.protocol_reliability =
        static_cast<double>(protocol) / report.cases;
  }

  if (box.manifest() != toolbox_manifest)
    throw CoreError("evaluation mutated the tool registry");
  json pairs_after = json::array();
  for (const PolicyPair& p : pairs) pairs_after.push_back(p.to_json());
  if (pairs_after != frontier_manifest.at("pairs"))
    throw CoreError("evaluation mutated the frontier pairs");

  write_text(run_dir / "evaluation.json", report.to_json().dump(2) + "\n");
  return report;
}

}  // namespace graphforge
