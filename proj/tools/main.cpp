#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "graphforge/harness.hpp"

namespace fs = std::filesystem;
using namespace graphforge;

namespace {

std::string read_text(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw CoreError("cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void print_summary(const RunSummary& s) {
  std::printf("episodes        %d counted, %d excluded\n", s.counted,
              s.excluded);
  std::printf("pass rate       %.4f\n", s.pass_rate);
  std::printf("protocol        %.4f\n", s.protocol_reliability);
  std::printf("inst. mutations %d\n", s.instruction_mutations);
  std::printf("packaged tools  %d (used: %d)\n", s.packaged_tools,
              s.used_tools);
  std::printf("reuse rate      %.4f (rolling %.4f)\n", s.reuse_rate,
              s.rolling_reuse_rate);
  std::printf("frontier size   %d\n", s.frontier_size);
  for (const auto& [tier, st] : s.per_tier)
    std::printf("tier %-4s       %4d episodes, first seen at %d\n",
                tier.c_str(), st.episodes, st.first_seen);
}

int run_train(const RunConfig& cfg) {
  TrainResult res = train(cfg);
  print_summary(res.summary);
  std::printf("selected pair   %s (genome %s, %zu tools in view)\n",
              res.selected.id.c_str(), res.selected.genome.id.c_str(),
              res.selected.view.size());
  std::printf("artifacts       %s\n", cfg.out_dir.c_str());
  return 0;
}

int run_evaluate(const std::string& run_dir, const std::string& benchmark,
                 const RunConfig& cfg) {
  EvalReport report = evaluate(run_dir, benchmark, cfg);
  std::cout << report.to_json().dump(2) << "\n";
  return 0;
}

int run_rollup(const std::string& log) {
  std::cout << metrics_rollup(log).to_json().dump(2) << "\n";
  return 0;
}

int run_inspect(const std::string& target) {
  fs::path path(target);
  if (fs::is_directory(path)) path /= "toolbox.json";
  Toolbox box = Toolbox::from_manifest(json::parse(read_text(path)));
  std::printf("%-28s %-22s %-34s %6s %6s %s\n", "id", "families", "niche",
              "reuse", "pass", "active");
  for (const std::string& id : box.ids()) {
    const Tool& t = box.at(id);
    std::string families;
    for (const std::string& f : t.meta.families)
      families += (families.empty() ? "" : ",") + f;
    std::printf("%-28s %-22s %-34s %6d %6d %s\n", id.c_str(),
                families.c_str(), t.meta.niche.render().c_str(),
                t.reuse_count, t.pass_count, t.activated ? "yes" : "no");
  }
  std::printf("%zu tools, %d activated\n", box.size(), box.activated_count());
  return 0;
}

InstructionGenome load_genome(const fs::path& file, const std::string& id) {
  json j = json::parse(read_text(file));
  if (j.contains("lineage")) {
    std::string want = id.empty() ? j.at("active").get<std::string>() : id;
    for (const json& g : j.at("lineage"))
      if (g.at("id") == want) return InstructionGenome::from_json(g);
    throw CoreError("genome '" + want + "' is not in " + file.string());
  }
  if (!id.empty())
    throw CoreError(file.string() + " holds a single genome; drop the id");
  return InstructionGenome::from_json(j);
}

int run_diff(const std::vector<std::string>& files, const std::string& from_id,
             const std::string& to_id) {
  InstructionGenome a, b;
  if (files.size() == 2) {
    a = load_genome(files[0], from_id);
    b = load_genome(files[1], to_id);
  } else {
    json j = json::parse(read_text(files[0]));
    if (!j.contains("lineage"))
      throw CoreError("diffing within a file needs a genome lineage");
    std::string from = from_id.empty()
                           ? j.at("lineage").front().at("id").get<std::string>()
                           : from_id;
    a = load_genome(files[0], from);
    b = load_genome(files[0], to_id);
  }
  std::printf("%s -> %s\n", a.id.c_str(), b.id.c_str());
  bool any = false;
  for (Section s : all_sections()) {
    for (const GenomeRule& r : b.section(s)) {
      const GenomeRule* old = a.find_rule(s, r.tag);
      if (!old) {
        std::printf("  + %s: %s %s\n", to_string(s).c_str(), r.tag.c_str(),
                    r.params.empty() ? "" : r.params.dump().c_str());
        any = true;
      } else if (old->params != r.params) {
        std::printf("  ~ %s: %s %s -> %s\n", to_string(s).c_str(),
                    r.tag.c_str(), old->params.dump().c_str(),
                    r.params.dump().c_str());
        any = true;
      }
    }
    for (const GenomeRule& r : a.section(s))
      if (!b.find_rule(s, r.tag)) {
        std::printf("  - %s: %s\n", to_string(s).c_str(), r.tag.c_str());
        any = true;
      }
  }
  if (!any) std::printf("  (no rule changes)\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph-reasoning environment and self-improvement harness"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string agent_spec = "oracle";
  bool no_propose = false;

  auto add_agent_flags = [&](CLI::App* cmd) {
    cmd->add_option("--agent", agent_spec,
                    "oracle | fault:MODE:RATE | external:COMMAND")
        ->capture_default_str();
  };

  CLI::App* t = app.add_subcommand("train", "run the co-evolution loop");
  t->add_option("--episodes", cfg.episodes, "training episodes")
      ->capture_default_str();
  t->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
  t->add_option("--curriculum", cfg.curriculum, "progressive | fixed:D4")
      ->capture_default_str();
  add_agent_flags(t);
  t->add_flag("--no-propose-tool", no_propose, "disable tool growth");
  t->add_option("--out", cfg.out_dir, "artifact directory")->required();
  t->add_option("--workers", cfg.workers, "validation worker threads")
      ->capture_default_str();
  t->add_option("--attempts", cfg.attempts, "attempts per episode")
      ->capture_default_str();
  t->add_option("--sca", cfg.sca,
                "routed | blind (mutate every section, ignore credit)")
      ->capture_default_str();
  t->add_option("--seed-toolbox", cfg.seed_toolbox,
                "'oracle' or a toolbox manifest to preload");
  t->add_option("--cadence", cfg.reeval_cadence, "pair re-evaluation cadence")
      ->capture_default_str();
  t->add_option("--population-cap", cfg.population_cap, "frontier capacity")
      ->capture_default_str();

  std::string run_dir, benchmark;
  CLI::App* e = app.add_subcommand("evaluate",
                                   "benchmark a frozen trained pair");
  e->add_option("--run", run_dir, "training artifact directory")->required();
  e->add_option("--benchmark", benchmark, "benchmark case file (jsonl)")
      ->required();
  add_agent_flags(e);
  e->add_flag("--no-propose-tool", no_propose,
              "accepted for symmetry; evaluation always disables proposals");

  std::string log_file;
  CLI::App* r = app.add_subcommand("rollup",
                                   "recompute a summary from an episode log");
  r->add_option("log", log_file, "episodes.jsonl path")->required();

  std::string inspect_target;
  CLI::App* i = app.add_subcommand("inspect-toolbox",
                                   "list a tool registry manifest");
  i->add_option("manifest", inspect_target,
                "toolbox.json or a run directory")
      ->required();

  std::vector<std::string> diff_files;
  std::string from_id, to_id;
  CLI::App* d = app.add_subcommand("diff-genome",
                                   "show rule changes between two genomes");
  d->add_option("files", diff_files,
                "genomes.json (lineage) or two genome files")
      ->expected(1, 2)
      ->required();
  d->add_option("--from", from_id, "lineage id to diff from (default: first)");
  d->add_option("--to", to_id, "lineage id to diff to (default: active)");

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.agent = AgentConfig::parse(agent_spec);
    if (no_propose) cfg.propose_tool = false;
    if (t->parsed()) return run_train(cfg);
    if (e->parsed()) return run_evaluate(run_dir, benchmark, cfg);
    if (r->parsed()) return run_rollup(log_file);
    if (i->parsed()) return run_inspect(inspect_target);
    if (d->parsed()) return run_diff(diff_files, from_id, to_id);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
