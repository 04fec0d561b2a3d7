#include "graphforge/core.hpp"

#include <algorithm>

namespace graphforge {

namespace {

const char* kFamilyNames[kFamilyCount] = {
    "shortest_path", "shortest_path_cost", "tsp",
    "hamilton",      "mst",                "max_flow",
    "bipartite_matching", "topological_sort", "scc",
    "bridges",       "connectivity",       "cycle",
    "bipartite_check", "common_neighbors", "triangle_max_sum",
    "substructure",  "gnn_sum",            "coloring",
    "vertex_cover",
};

const char* kDifficultyNames[4] = {"D1", "D2", "D3", "D4"};

const char* kExactnessNames[6] = {
    "exact",    "exact_small",    "exact_medium",
    "feasible", "feasible_large", "boolean_with_witness",
};

std::pair<std::string, std::string> ordered(const std::string& a,
                                            const std::string& b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

const std::vector<Family>& all_families() {
  static const std::vector<Family> fams = [] {
    std::vector<Family> v;
    for (int i = 0; i < kFamilyCount; ++i) v.push_back(static_cast<Family>(i));
    return v;
  }();
  return fams;
}

std::string to_string(Family f) { return kFamilyNames[static_cast<int>(f)]; }
std::string to_string(Difficulty d) { return kDifficultyNames[static_cast<int>(d)]; }
std::string to_string(Exactness e) { return kExactnessNames[static_cast<int>(e)]; }

Family family_from_string(const std::string& s) {
  for (int i = 0; i < kFamilyCount; ++i)
    if (s == kFamilyNames[i]) return static_cast<Family>(i);
  throw CoreError("unknown task family: '" + s + "'");
}

Difficulty difficulty_from_string(const std::string& s) {
  for (int i = 0; i < 4; ++i)
    if (s == kDifficultyNames[i]) return static_cast<Difficulty>(i);
  throw CoreError("unknown difficulty tier: '" + s + "'");
}

Exactness exactness_from_string(const std::string& s) {
  for (int i = 0; i < 6; ++i)
    if (s == kExactnessNames[i]) return static_cast<Exactness>(i);
  throw CoreError("unknown exactness tag: '" + s + "'");
}

int tier_index(Difficulty d) { return static_cast<int>(d) + 1; }

// ---------------------------------------------------------------------------
// Graph

bool Graph::has_node(const std::string& id) const {
  return std::find(nodes.begin(), nodes.end(), id) != nodes.end();
}

bool Graph::has_edge(const std::string& a, const std::string& b) const {
  for (const auto& e : edges) {
    if (e.u == a && e.v == b) return true;
    if (!directed && e.u == b && e.v == a) return true;
  }
  return false;
}

std::optional<int64_t> Graph::edge_weight(const std::string& a,
                                          const std::string& b) const {
  for (const auto& e : edges) {
    if ((e.u == a && e.v == b) || (!directed && e.u == b && e.v == a))
      return e.weight;
  }
  return std::nullopt;
}

std::vector<std::string> graph_violations(const Graph& g) {
  std::vector<std::string> out;
  std::set<std::string> ids(g.nodes.begin(), g.nodes.end());
  if (ids.size() != g.nodes.size()) out.push_back("duplicate node ids");

  size_t weighted = 0, capacitated = 0;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : g.edges) {
    if (!ids.count(e.u) || !ids.count(e.v))
      out.push_back("edge endpoint not a node: " + e.u + "," + e.v);
    if (e.u == e.v) out.push_back("self loop at " + e.u);
    auto key = g.directed ? std::make_pair(e.u, e.v) : ordered(e.u, e.v);
    if (!seen.insert(key).second)
      out.push_back("duplicate edge " + e.u + "," + e.v);
    if (e.weight) ++weighted;
    if (e.capacity) ++capacitated;
  }
  if (weighted != 0 && weighted != g.edges.size())
    out.push_back("edge weights must cover all edges or none");
  if (capacitated != 0 && capacitated != g.edges.size())
    out.push_back("edge capacities must cover all edges or none");

  auto check_attr = [&](size_t count, const char* what) {
    if (count != 0 && count != g.nodes.size())
      out.push_back(std::string(what) + " must cover all nodes or none");
  };
  check_attr(g.node_labels.size(), "node labels");
  check_attr(g.node_weights.size(), "node weights");
  check_attr(g.node_embeddings.size(), "node embeddings");
  for (const auto& [id, _] : g.node_labels)
    if (!ids.count(id)) out.push_back("label on unknown node " + id);
  for (const auto& [id, _] : g.node_weights)
    if (!ids.count(id)) out.push_back("weight on unknown node " + id);
  for (const auto& [id, _] : g.node_embeddings)
    if (!ids.count(id)) out.push_back("embedding on unknown node " + id);
  return out;
}

bool ConstraintSet::blocks(const std::string& a, const std::string& b,
                           bool directed) const {
  for (const auto& [u, v] : blocked_edges) {
    if (u == a && v == b) return true;
    if (!directed && u == b && v == a) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Canonical JSON

json graph_to_json(const Graph& g) {
  json j;
  std::vector<std::string> nodes = g.nodes;
  std::sort(nodes.begin(), nodes.end());
  j["nodes"] = nodes;
  j["directed"] = g.directed;

  std::vector<json> edges;
  for (const auto& e : g.edges) {
    std::string u = e.u, v = e.v;
    if (!g.directed && v < u) std::swap(u, v);
    json je;
    je["u"] = u;
    je["v"] = v;
    if (e.weight) je["weight"] = *e.weight;
    if (e.capacity) je["capacity"] = *e.capacity;
    edges.push_back(std::move(je));
  }
  std::sort(edges.begin(), edges.end(), [](const json& a, const json& b) {
    auto ka = std::make_pair(a.at("u").get<std::string>(), a.at("v").get<std::string>());
    auto kb = std::make_pair(b.at("u").get<std::string>(), b.at("v").get<std::string>());
    return ka < kb;
  });
  j["edges"] = edges;

  if (!g.node_labels.empty()) j["node_labels"] = g.node_labels;
  if (!g.node_weights.empty()) j["node_weights"] = g.node_weights;
  if (!g.node_embeddings.empty()) j["node_embeddings"] = g.node_embeddings;
  return j;
}

Graph graph_from_json(const json& j) {
  if (!j.is_object()) throw CoreError("graph must be an object");
  Graph g;
  if (!j.contains("nodes") || !j.at("nodes").is_array())
    throw CoreError("graph.nodes missing or not an array");
  for (const auto& n : j.at("nodes")) {
    if (!n.is_string()) throw CoreError("graph.nodes entries must be strings");
    g.nodes.push_back(n.get<std::string>());
  }
  g.directed = j.value("directed", false);
  if (j.contains("edges")) {
    if (!j.at("edges").is_array())
      throw CoreError("graph.edges must be an array");
    for (const auto& je : j.at("edges")) {
      if (!je.is_object() || !je.contains("u") || !je.contains("v"))
        throw CoreError("graph edge must be an object with u and v");
      Edge e;
      e.u = je.at("u").get<std::string>();
      e.v = je.at("v").get<std::string>();
      if (je.contains("weight")) e.weight = je.at("weight").get<int64_t>();
      if (je.contains("capacity")) e.capacity = je.at("capacity").get<int64_t>();
      g.edges.push_back(std::move(e));
    }
  }
  if (j.contains("node_labels"))
    g.node_labels = j.at("node_labels").get<std::map<std::string, std::string>>();
  if (j.contains("node_weights"))
    g.node_weights = j.at("node_weights").get<std::map<std::string, int64_t>>();
  if (j.contains("node_embeddings"))
    g.node_embeddings =
        j.at("node_embeddings").get<std::map<std::string, std::vector<int64_t>>>();
  return g;
}

json query_to_json(const Query& q) {
  json j = json::object();
  if (q.source) j["source"] = *q.source;
  if (q.target) j["target"] = *q.target;
  if (q.pair) j["pair"] = json::array({q.pair->first, q.pair->second});
  if (q.pattern) j["pattern"] = graph_to_json(*q.pattern);
  if (q.rounds) j["rounds"] = *q.rounds;
  if (q.aggregation) j["aggregation"] = *q.aggregation;
  return j;
}

Query query_from_json(const json& j) {
  if (!j.is_object()) throw CoreError("query must be an object");
  Query q;
  if (j.contains("source")) q.source = j.at("source").get<std::string>();
  if (j.contains("target")) q.target = j.at("target").get<std::string>();
  if (j.contains("pair")) {
    const auto& p = j.at("pair");
    if (!p.is_array() || p.size() != 2)
      throw CoreError("query.pair must be a two-element array");
    q.pair = {p[0].get<std::string>(), p[1].get<std::string>()};
  }
  if (j.contains("pattern")) q.pattern = graph_from_json(j.at("pattern"));
  if (j.contains("rounds")) {
    if (!j.at("rounds").is_number_integer())
      throw CoreError("query.rounds must be an integer");
    q.rounds = j.at("rounds").get<int>();
  }
  if (j.contains("aggregation"))
    q.aggregation = j.at("aggregation").get<std::string>();
  return q;
}

json constraints_to_json(const ConstraintSet& c) {
  json j = json::object();
  if (!c.blocked_edges.empty()) {
    std::vector<json> blocked;
    for (const auto& [u, v] : c.blocked_edges)
      blocked.push_back(json::array({u, v}));
    std::sort(blocked.begin(), blocked.end());
    j["blocked_edges"] = blocked;
  }
  if (c.max_cost) j["max_cost"] = *c.max_cost;
  if (c.max_colors) j["max_colors"] = *c.max_colors;
  if (c.max_size) j["max_size"] = *c.max_size;
  return j;
}

ConstraintSet constraints_from_json(const json& j) {
  if (!j.is_object()) throw CoreError("constraints must be an object");
  ConstraintSet c;
  if (j.contains("blocked_edges")) {
    for (const auto& b : j.at("blocked_edges")) {
      if (!b.is_array() || b.size() != 2)
        throw CoreError("blocked edge must be a two-element array");
      c.blocked_edges.emplace_back(b[0].get<std::string>(), b[1].get<std::string>());
    }
  }
  if (j.contains("max_cost")) c.max_cost = j.at("max_cost").get<int64_t>();
  if (j.contains("max_colors")) c.max_colors = j.at("max_colors").get<int>();
  if (j.contains("max_size")) c.max_size = j.at("max_size").get<int>();
  return c;
}

json task_input_to_json(const StructuredTask& t) {
  json j;
  j["graph"] = graph_to_json(t.graph);
  j["query"] = query_to_json(t.query);
  j["constraints"] = constraints_to_json(t.constraints);
  return j;
}

json canonical_json(const StructuredTask& t) {
  json j;
  j["family"] = to_string(t.family);
  j["difficulty"] = to_string(t.difficulty);
  j["seed"] = t.seed;
  j["task_input"] = task_input_to_json(t);
  return j;
}

std::string canonical_serialize(const StructuredTask& t) {
  return canonical_json(t).dump();
}

StructuredTask task_from_json(const json& j) {
  if (!j.is_object()) throw CoreError("task must be an object");
  StructuredTask t;
  if (!j.contains("family")) throw CoreError("task.family missing");
  t.family = family_from_string(j.at("family").get<std::string>());
  t.difficulty = difficulty_from_string(j.value("difficulty", "D1"));
  t.seed = j.value("seed", uint64_t{0});
  if (!j.contains("task_input") || !j.at("task_input").is_object())
    throw CoreError("task.task_input missing");
  const json& ti = j.at("task_input");
  if (!ti.contains("graph")) throw CoreError("task_input.graph missing");
  t.graph = graph_from_json(ti.at("graph"));
  if (ti.contains("query")) t.query = query_from_json(ti.at("query"));
  if (ti.contains("constraints"))
    t.constraints = constraints_from_json(ti.at("constraints"));
  return t;
}

json answer_to_json(const Answer& a) {
  json j;
  j["family"] = to_string(a.family);
  j["value"] = a.value;
  j["witness"] = a.witness;
  return j;
}

Answer answer_from_json(const json& j) {
  if (!j.is_object() || !j.contains("family"))
    throw CoreError("answer must be an object with a family tag");
  Answer a;
  a.family = family_from_string(j.at("family").get<std::string>());
  if (j.contains("value")) a.value = j.at("value");
  if (j.contains("witness")) a.witness = j.at("witness");
  return a;
}

bool operator==(const StructuredTask& a, const StructuredTask& b) {
  return canonical_serialize(a) == canonical_serialize(b);
}

// ---------------------------------------------------------------------------
// Interface table

namespace {

TypedInterface make_iface(Family f, std::vector<std::string> req,
                          std::vector<std::string> opt, Exactness e) {
  TypedInterface t;
  t.family = f;
  t.required = std::move(req);
  t.optional = std::move(opt);
  t.exactness = e;
  return t;
}

}  // namespace

TypedInterface interface_for(Family f) {
  using F = Family;
  using E = Exactness;
  const std::vector<std::string> ge = {"graph.nodes", "graph.edges"};
  switch (f) {
    case F::shortest_path:
      return make_iface(f, {"graph.nodes", "graph.edges", "query.source", "query.target"},
                        {"graph.edge_weights", "graph.directed", "constraints.blocked_edges"},
                        E::exact);
    case F::shortest_path_cost:
      return make_iface(f, {"graph.nodes", "graph.edges", "query.source", "query.target"},
                        {"graph.edge_weights", "graph.directed", "constraints.blocked_edges"},
                        E::exact);
    case F::tsp:
      return make_iface(f, {"graph.nodes", "graph.edges", "graph.directed"},
                        {"graph.edge_weights", "constraints.blocked_edges", "constraints.max_cost"},
                        E::exact_small);
    case F::hamilton:
      return make_iface(f, {"graph.nodes", "graph.edges", "graph.directed"}, {},
                        E::exact_small);
    case F::mst:
      return make_iface(f, {"graph.nodes", "graph.edges", "graph.edge_weights"},
                        {"graph.directed"}, E::exact);
    case F::max_flow:
      return make_iface(f,
                        {"graph.nodes", "graph.edges", "graph.edge_capacities",
                         "graph.directed", "query.source", "query.target"},
                        {}, E::exact);
    case F::bipartite_matching:
      return make_iface(f, {"graph.nodes", "graph.edges", "graph.node_labels"},
                        {"graph.directed"}, E::exact);
    case F::topological_sort:
      return make_iface(f, {"graph.nodes", "graph.edges", "graph.directed"}, {},
                        E::exact);
    case F::scc:
      return make_iface(f, {"graph.nodes", "graph.edges", "graph.directed"}, {},
                        E::exact);
    case F::bridges:
      return make_iface(f, {"graph.nodes", "graph.edges", "graph.directed"}, {},
                        E::exact);
    case F::connectivity:
      return make_iface(f, {"graph.nodes", "graph.edges", "query.source", "query.target"},
                        {"graph.directed"}, E::boolean_with_witness);
    case F::cycle:
      return make_iface(f, ge, {"graph.directed"}, E::boolean_with_witness);
    case F::bipartite_check:
      return make_iface(f, ge, {"graph.directed"}, E::boolean_with_witness);
    case F::common_neighbors:
      return make_iface(f, {"graph.nodes", "graph.edges", "query.pair"},
                        {"graph.directed"}, E::exact);
    case F::triangle_max_sum:
      return make_iface(f, {"graph.nodes", "graph.edges", "graph.node_weights"},
                        {"graph.directed"}, E::exact);
    case F::substructure:
      return make_iface(f, {"graph.nodes", "graph.edges", "graph.directed", "query.pattern"},
                        {}, E::exact_small);
    case F::gnn_sum:
      return make_iface(f,
                        {"graph.nodes", "graph.edges", "graph.node_embeddings",
                         "query.rounds", "query.aggregation"},
                        {"graph.directed"}, E::exact);
    case F::coloring:
      return make_iface(f, {"graph.nodes", "graph.edges", "constraints.max_colors"},
                        {"graph.directed"}, E::exact_small);
    case F::vertex_cover:
      return make_iface(f, {"graph.nodes", "graph.edges", "constraints.max_size"},
                        {"graph.directed"}, E::exact_small);
  }
  throw CoreError("unknown task family enum value");
}

TypedInterface interface_for(const std::string& family_tag) {
  return interface_for(family_from_string(family_tag));
}

// ---------------------------------------------------------------------------
// Structural validation and slot diffs

namespace {

const json* find_path(const json& root, const std::string& dotted) {
  const json* cur = &root;
  size_t start = 0;
  while (start <= dotted.size()) {
    size_t dot = dotted.find('.', start);
    std::string key = dotted.substr(start, dot == std::string::npos
                                               ? std::string::npos
                                               : dot - start);
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &cur->at(key);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return cur;
}

// Presence + well-formedness of a dotted slot in a task document. The two
// virtual slots graph.edge_weights / graph.edge_capacities are considered
// present when every edge carries the attribute.
enum class SlotState { absent, present, invalid };

SlotState slot_state(const json& doc, const std::string& slot, std::string& why) {
  const json* ti = doc.is_object() && doc.contains("task_input")
                       ? &doc.at("task_input")
                       : nullptr;
  if (!ti || !ti->is_object()) return SlotState::absent;

  auto edge_attr_state = [&](const char* attr) {
    const json* edges = find_path(*ti, "graph.edges");
    if (!edges || !edges->is_array() || edges->empty()) return SlotState::absent;
    size_t with = 0;
    for (const auto& e : *edges)
      if (e.is_object() && e.contains(attr)) ++with;
    if (with == edges->size()) return SlotState::present;
    if (with == 0) return SlotState::absent;
    why = "only some edges carry " + std::string(attr);
    return SlotState::invalid;
  };
  if (slot == "graph.edge_weights") return edge_attr_state("weight");
  if (slot == "graph.edge_capacities") return edge_attr_state("capacity");

  const json* v = find_path(*ti, slot);
  if (!v) return SlotState::absent;

  auto bad = [&](const char* msg) {
    why = msg;
    return SlotState::invalid;
  };
  if (slot == "graph.nodes") {
    if (!v->is_array()) return bad("not an array");
    for (const auto& n : *v)
      if (!n.is_string()) return bad("node ids must be strings");
  } else if (slot == "graph.edges") {
    if (!v->is_array()) return bad("not an array");
    for (const auto& e : *v)
      if (!e.is_object() || !e.contains("u") || !e.contains("v"))
        return bad("edges must be objects with u and v");
  } else if (slot == "graph.directed") {
    if (!v->is_boolean()) return bad("not a boolean");
  } else if (slot == "graph.node_labels" || slot == "graph.node_weights" ||
             slot == "graph.node_embeddings") {
    if (!v->is_object()) return bad("not an object");
  } else if (slot == "query.rounds") {
    if (!v->is_number_integer() || v->get<int64_t>() < 0)
      return bad("must be a non-negative integer");
  } else if (slot == "query.pair") {
    if (!v->is_array() || v->size() != 2) return bad("must be a pair of node ids");
  } else if (slot == "query.pattern") {
    if (!v->is_object() || !v->contains("nodes") || !v->contains("edges"))
      return bad("pattern must be a graph object");
  } else if (slot == "constraints.blocked_edges") {
    if (!v->is_array()) return bad("not an array");
  } else if (slot == "constraints.max_cost" || slot == "constraints.max_colors" ||
             slot == "constraints.max_size") {
    if (!v->is_number_integer()) return bad("not an integer");
  } else if (slot == "query.source" || slot == "query.target") {
    if (!v->is_string()) return bad("not a string");
  } else if (slot == "query.aggregation") {
    if (!v->is_string()) return bad("not a string");
  }
  return SlotState::present;
}

// All slots a document actually populates, expressed against the same
// vocabulary validate_structure checks. Edge attributes become the virtual
// slots; unknown query/constraint keys are reported verbatim.
std::vector<std::string> populated_slots(const json& doc) {
  std::vector<std::string> out;
  if (!doc.is_object() || !doc.contains("task_input")) return out;
  const json& ti = doc.at("task_input");
  if (!ti.is_object()) return out;

  if (ti.contains("graph") && ti.at("graph").is_object()) {
    const json& g = ti.at("graph");
    for (const auto& key : {"nodes", "edges", "directed", "node_labels",
                            "node_weights", "node_embeddings"})
      if (g.contains(key)) out.push_back(std::string("graph.") + key);
    if (g.contains("edges") && g.at("edges").is_array() && !g.at("edges").empty()) {
      bool any_w = false, any_c = false;
      for (const auto& e : g.at("edges")) {
        if (e.is_object() && e.contains("weight")) any_w = true;
        if (e.is_object() && e.contains("capacity")) any_c = true;
      }
      if (any_w) out.push_back("graph.edge_weights");
      if (any_c) out.push_back("graph.edge_capacities");
    }
  }
  if (ti.contains("query") && ti.at("query").is_object())
    for (const auto& [k, _] : ti.at("query").items())
      out.push_back("query." + k);
  if (ti.contains("constraints") && ti.at("constraints").is_object())
    for (const auto& [k, _] : ti.at("constraints").items())
      out.push_back("constraints." + k);
  return out;
}

void finish(Discrepancy& d) {
  d.scalar = static_cast<int>(d.missing_slots.size() + d.extra_slots.size() +
                              d.mismatched.size());
}

}  // namespace

json Discrepancy::to_json() const {
  json j;
  j["missing_slots"] = missing_slots;
  j["extra_slots"] = extra_slots;
  json mm = json::array();
  for (const auto& [slot, summary] : mismatched)
    mm.push_back(json{{"slot", slot}, {"summary", summary}});
  j["mismatched"] = mm;
  j["scalar"] = scalar;
  return j;
}

Discrepancy validate_structure(const json& doc, const TypedInterface& iface) {
  Discrepancy d;
  for (const auto& slot : iface.required) {
    std::string why;
    switch (slot_state(doc, slot, why)) {
      case SlotState::absent:
        d.missing_slots.push_back(slot);
        break;
      case SlotState::invalid:
        d.mismatched.emplace_back(slot, why);
        break;
      case SlotState::present:
        break;
    }
  }
  const std::set<std::string> required(iface.required.begin(), iface.required.end());
  std::set<std::string> allowed = required;
  allowed.insert(iface.optional.begin(), iface.optional.end());
  // graph.directed is part of every serialized graph even when the family
  // ignores it, so it is never flagged as foreign.
  allowed.insert("graph.directed");
  for (const auto& slot : populated_slots(doc)) {
    if (required.count(slot)) continue;  // already checked above
    if (allowed.count(slot)) {
      std::string why;
      if (slot_state(doc, slot, why) == SlotState::invalid)
        d.mismatched.emplace_back(slot, why);
      continue;
    }
    d.extra_slots.push_back(slot);
  }
  std::sort(d.extra_slots.begin(), d.extra_slots.end());
  finish(d);
  return d;
}

namespace {

std::string set_diff_summary(const std::set<std::string>& want,
                             const std::set<std::string>& got,
                             const char* unit) {
  int missing = 0, extra = 0;
  for (const auto& w : want)
    if (!got.count(w)) ++missing;
  for (const auto& g : got)
    if (!want.count(g)) ++extra;
  std::string s;
  if (missing) s += std::to_string(missing) + " " + unit + (missing == 1 ? "" : "s") + " missing";
  if (extra) {
    if (!s.empty()) s += ", ";
    s += std::to_string(extra) + " " + unit + (extra == 1 ? "" : "s") + " extra";
  }
  if (s.empty()) s = "order or attribute mismatch";
  return s;
}

std::set<std::string> edge_keys(const json& edges, bool with_attrs) {
  std::set<std::string> out;
  if (!edges.is_array()) return out;
  for (const auto& e : edges) {
    if (!e.is_object() || !e.contains("u") || !e.contains("v")) continue;
    std::string k = e.at("u").dump() + ">" + e.at("v").dump();
    if (with_attrs) {
      if (e.contains("weight")) k += " w" + e.at("weight").dump();
      if (e.contains("capacity")) k += " c" + e.at("capacity").dump();
    }
    out.insert(k);
  }
  return out;
}

}  // namespace

Discrepancy json_discrepancy(const json& recovered, const json& canonical) {
  Discrepancy d;

  auto get = [](const json& root, const std::string& path) -> const json* {
    return find_path(root, path);
  };

  // Envelope scalars plus the fixed graph slots; query/constraints keys are
  // diffed as the union of what either side populates.
  std::vector<std::string> slots = {"family", "difficulty", "seed",
                                    "task_input.graph.nodes",
                                    "task_input.graph.edges",
                                    "task_input.graph.directed",
                                    "task_input.graph.node_labels",
                                    "task_input.graph.node_weights",
                                    "task_input.graph.node_embeddings"};
  std::set<std::string> dyn;
  for (const json* side : {&recovered, &canonical}) {
    if (!side->is_object() || !side->contains("task_input")) continue;
    const json& ti = side->at("task_input");
    if (!ti.is_object()) continue;
    for (const char* sec : {"query", "constraints"})
      if (ti.contains(sec) && ti.at(sec).is_object())
        for (const auto& [k, _] : ti.at(sec).items())
          dyn.insert(std::string("task_input.") + sec + "." + k);
  }
  slots.insert(slots.end(), dyn.begin(), dyn.end());

  for (const auto& path : slots) {
    const json* want = get(canonical, path);
    const json* got = get(recovered, path);
    // Strip the envelope prefix so reports use the interface vocabulary.
    std::string label = path.rfind("task_input.", 0) == 0 ? path.substr(11) : path;
    if (want && !got) {
      d.missing_slots.push_back(label);
      continue;
    }
    if (!want && got) {
      d.extra_slots.push_back(label);
      continue;
    }
    if (!want || *want == *got) continue;

    if (label == "graph.nodes") {
      std::set<std::string> w, g;
      if (want->is_array())
        for (const auto& n : *want) w.insert(n.dump());
      if (got->is_array())
        for (const auto& n : *got) g.insert(n.dump());
      if (w == g) continue;  // ordering is not a semantic difference
      d.mismatched.emplace_back(label, set_diff_summary(w, g, "node"));
    } else if (label == "graph.edges") {
      auto w = edge_keys(*want, false), g = edge_keys(*got, false);
      if (w == g) {
        // Same endpoint sets; the difference is in edge attributes.
        auto wa = edge_keys(*want, true), ga = edge_keys(*got, true);
        if (wa == ga) continue;
        d.mismatched.emplace_back(label, "edge attributes differ");
      } else {
        d.mismatched.emplace_back(label, set_diff_summary(w, g, "edge"));
      }
    } else {
      d.mismatched.emplace_back(label, "expected " + want->dump() + ", got " + got->dump());
    }
  }
  finish(d);
  return d;
}

Discrepancy structured_discrepancy(const StructuredTask& recovered,
                                   const StructuredTask& canonical) {
  if (recovered.family != canonical.family)
    throw CoreError("cannot diff tasks from different families: " +
                    to_string(recovered.family) + " vs " + to_string(canonical.family));
  return json_discrepancy(canonical_json(recovered), canonical_json(canonical));
}

}  // namespace graphforge
