#include "graphforge/toolbox.hpp"

#include <algorithm>
#include <cstdio>

#include "graphforge/solvers.hpp"

namespace graphforge {

// ---------------------------------------------------------------------------
// Niche keys

std::string NicheKey::render() const {
  return regime + " / " + constraint_tag + " / " + exactness + " / " + tier;
}

NicheKey NicheKey::parse(const std::string& rendered) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t pos = rendered.find(" / ", start);
    if (pos == std::string::npos) {
      parts.push_back(rendered.substr(start));
      break;
    }
    parts.push_back(rendered.substr(start, pos - start));
    start = pos + 3;
  }
  if (parts.size() != 4)
    throw CoreError("niche key needs 4 ' / '-separated components: '" +
                    rendered + "'");
  // Tier and exactness come from closed vocabularies; fail fast on typos.
  difficulty_from_string(parts[3]);
  exactness_from_string(parts[2]);
  return NicheKey{parts[0], parts[1], parts[2], parts[3]};
}

NicheKey niche_key(const StructuredTask& t) {
  return NicheKey{regime_for(t.family, t.difficulty),
                  constraint_tag_for(t.family, t.difficulty),
                  to_string(effective_exactness(t.family, t.difficulty)),
                  to_string(t.difficulty)};
}

double compat(const ToolMeta& meta, const StructuredTask& recovered) {
  const std::string fam = to_string(recovered.family);
  if (std::find(meta.families.begin(), meta.families.end(), fam) ==
      meta.families.end())
    return 0.0;
  const NicheKey want = niche_key(recovered);
  int hits = 0;
  if (meta.niche.regime == want.regime) ++hits;
  if (meta.niche.constraint_tag == want.constraint_tag) ++hits;
  if (meta.niche.exactness == want.exactness) ++hits;
  if (tier_index(difficulty_from_string(meta.niche.tier)) <=
      tier_index(recovered.difficulty))
    ++hits;
  return hits / 4.0;
}

// ---------------------------------------------------------------------------
// Registry

RetrievalResult Toolbox::retrieve(const StructuredTask& recovered,
                                  const std::vector<std::string>& view) const {
  RetrievalResult out;
  for (const std::string& id : view) {
    const Tool& t = at(id);
    double score = compat(t.meta, recovered);
    if (score > 0.0) out.ranked.emplace_back(id, score);
  }
  std::sort(out.ranked.begin(), out.ranked.end(),
            [this](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              int ra = tools_.at(a.first).reuse_count;
              int rb = tools_.at(b.first).reuse_count;
              if (ra != rb) return ra > rb;
              return a.first < b.first;
            });
  return out;
}

AcceptOutcome Toolbox::accept_candidate(const std::string& body_id, Family f,
                                        const NicheKey& niche,
                                        uint64_t probe_seed, int n_probes,
                                        int created_episode,
                                        const std::string& parent_id) {
  AcceptOutcome out;
  for (const auto& [id, t] : tools_) {
    if (t.body_id == body_id && t.meta.niche == niche) {
      out.reason = "redundant: same body and niche as " + id;
      return out;
    }
  }
  ToolBody body = tool_body(body_id);
  Difficulty tier = difficulty_from_string(niche.tier);
  out.report = probe_candidate(body, f, tier, probe_seed, n_probes);
  if (!out.report.all_passed()) {
    out.reason = "hidden probes failed (" +
                 std::to_string(out.report.probes_passed) + "/" +
                 std::to_string(out.report.probes_run) + " passed)";
    return out;
  }
  char prefix[16];
  std::snprintf(prefix, sizeof(prefix), "t%02d_", next_index_);
  ++next_index_;
  std::string id = prefix + body_id;
  tools_[id] = Tool{id,
                    body_id,
                    std::move(body),
                    ToolMeta{niche, body_families(body_id), created_episode,
                             parent_id},
                    0,
                    0,
                    false};
  out.accepted = true;
  out.tool_id = id;
  return out;
}

void Toolbox::record_use(const std::string& id, bool passed) {
  auto it = tools_.find(id);
  if (it == tools_.end()) throw CoreError("unknown tool id '" + id + "'");
  it->second.reuse_count += 1;
  if (passed) it->second.pass_count += 1;
  it->second.activated = true;
}

void Toolbox::note_episode(bool reused_existing_tool) {
  recent_.push_back(reused_existing_tool);
  while (static_cast<int>(recent_.size()) > window_) recent_.pop_front();
}

double Toolbox::rolling_reuse_rate() const {
  if (recent_.empty()) return 0.0;
  int hits = 0;
  for (bool b : recent_) hits += b;
  return static_cast<double>(hits) / static_cast<double>(recent_.size());
}

const Tool* Toolbox::find(const std::string& id) const {
  auto it = tools_.find(id);
  return it == tools_.end() ? nullptr : &it->second;
}

const Tool& Toolbox::at(const std::string& id) const {
  const Tool* t = find(id);
  if (!t) throw CoreError("unknown tool id '" + id + "'");
  return *t;
}

std::vector<std::string> Toolbox::ids() const {
  std::vector<std::string> out;
  out.reserve(tools_.size());
  for (const auto& [id, _] : tools_) out.push_back(id);
  return out;
}

int Toolbox::activated_count() const {
  int n = 0;
  for (const auto& [_, t] : tools_) n += t.activated;
  return n;
}

json Toolbox::manifest() const {
  json tools = json::array();
  for (const auto& [id, t] : tools_) {
    tools.push_back(json{{"id", id},
                         {"body", t.body_id},
                         {"families", t.meta.families},
                         {"niche", t.meta.niche.render()},
                         {"created_episode", t.meta.created_episode},
                         {"parent", t.meta.parent_id},
                         {"reuse_count", t.reuse_count},
                         {"pass_count", t.pass_count},
                         {"activated", t.activated}});
  }
  return json{{"next_index", next_index_}, {"tools", tools}};
}

Toolbox Toolbox::from_manifest(const json& m, int reuse_window) {
  Toolbox box(reuse_window);
  try {
    box.next_index_ = m.at("next_index").get<int>();
    for (const json& e : m.at("tools")) {
      std::string id = e.at("id").get<std::string>();
      std::string body_id = e.at("body").get<std::string>();
      Tool t{id,
             body_id,
             tool_body(body_id),
             ToolMeta{NicheKey::parse(e.at("niche").get<std::string>()),
                      e.at("families").get<std::vector<std::string>>(),
                      e.at("created_episode").get<int>(),
                      e.at("parent").get<std::string>()},
             e.at("reuse_count").get<int>(),
             e.at("pass_count").get<int>(),
             e.at("activated").get<bool>()};
      if (!box.tools_.emplace(id, std::move(t)).second)
        throw CoreError("duplicate tool id '" + id + "'");
    }
  } catch (const json::exception& ex) {
    throw CoreError(std::string("invalid toolbox manifest: ") + ex.what());
  }
  return box;
}

// ---------------------------------------------------------------------------
// Body bank

namespace {

/// Strict execution discipline shared by all bank bodies: refuse
/// cross-family payloads and payloads missing required interface slots, so a
/// degraded task document fails loudly instead of producing a plausible
/// answer for the wrong input.
Answer run_family_solver(Family f, const StructuredTask& t) {
  if (t.family != f)
    throw CoreError("body serves " + to_string(f) + " tasks, got a " +
                    to_string(t.family) + " task");
  Discrepancy d = validate_structure(canonical_json(t), interface_for(f));
  if (!d.clean()) {
    std::string slot = !d.missing_slots.empty()   ? d.missing_slots.front()
                       : !d.mismatched.empty()    ? d.mismatched.front().first
                                                  : d.extra_slots.front();
    throw CoreError("payload rejected at slot '" + slot + "'");
  }
  return solve(t).answer;
}

/// Deterministic defect applied to an otherwise-correct output. Each shape
/// is chosen so the verifier always rejects it: off-by-one values break the
/// claim/witness consistency checks, boolean flips contradict the recomputed
/// truth, and structural edits break coverage.
Answer corrupt_output(Answer a) {
  switch (a.family) {
    case Family::topological_sort:
      if (a.witness.is_object() && a.witness.contains("order") &&
          !a.witness["order"].empty())
        a.witness["order"].erase(a.witness["order"].size() - 1);
      return a;
    case Family::gnn_sum:
      if (a.witness.is_object() && a.witness.contains("states"))
        for (auto& [id, vec] : a.witness["states"].items()) {
          if (vec.is_array() && !vec.empty())
            vec[0] = vec[0].get<int64_t>() + 1;
          break;
        }
      return a;
    case Family::hamilton:
    case Family::connectivity:
    case Family::cycle:
    case Family::bipartite_check:
    case Family::substructure:
      if (a.value.is_boolean()) a.value = !a.value.get<bool>();
      return a;
    default:
      if (a.value.is_number_integer()) a.value = a.value.get<int64_t>() + 1;
      return a;
  }
}

struct BankEntry {
  ToolBody body;
  std::vector<std::string> families;
};

const std::map<std::string, BankEntry>& bank() {
  static const std::map<std::string, BankEntry>* instance = [] {
    auto* b = new std::map<std::string, BankEntry>();
    std::vector<std::string> all_tags;
    for (Family f : all_families()) all_tags.push_back(to_string(f));
    for (Family f : all_families()) {
      (*b)[oracle_body_for(f)] = {
          [f](const StructuredTask& t) { return run_family_solver(f, t); },
          {to_string(f)}};
      (*b)[buggy_body_for(f)] = {
          [f](const StructuredTask& t) {
            return corrupt_output(run_family_solver(f, t));
          },
          {to_string(f)}};
    }
    (*b)["omni_router"] = {
        [](const StructuredTask& t) { return run_family_solver(t.family, t); },
        all_tags};
    return b;
  }();
  return *instance;
}

}  // namespace

const std::vector<std::string>& body_bank_ids() {
  static const std::vector<std::string>* ids = [] {
    auto* v = new std::vector<std::string>();
    for (const auto& [id, _] : bank()) v->push_back(id);
    return v;
  }();
  return *ids;
}

ToolBody tool_body(const std::string& body_id) {
  auto it = bank().find(body_id);
  if (it == bank().end()) throw CoreError("unknown body '" + body_id + "'");
  return it->second.body;
}

std::vector<std::string> body_families(const std::string& body_id) {
  auto it = bank().find(body_id);
  if (it == bank().end()) throw CoreError("unknown body '" + body_id + "'");
  return it->second.families;
}

std::string oracle_body_for(Family f) { return to_string(f) + "_oracle"; }

std::string buggy_body_for(Family f) { return to_string(f) + "_buggy_v1"; }

std::optional<std::string> repaired_body_for(const std::string& body_id) {
  const std::string suffix = "_buggy_v1";
  if (body_id.size() <= suffix.size() ||
      body_id.compare(body_id.size() - suffix.size(), suffix.size(), suffix) !=
          0)
    return std::nullopt;
  std::string fixed =
      body_id.substr(0, body_id.size() - suffix.size()) + "_oracle";
  if (bank().find(fixed) == bank().end()) return std::nullopt;
  return fixed;
}

}  // namespace graphforge
