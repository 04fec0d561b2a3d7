#include "graphforge/verifier.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <set>

#include "graphforge/rng.hpp"
#include "graphforge/solvers.hpp"

namespace graphforge {

json ProbeReport::to_json() const {
  return json{{"probes_run", probes_run},
              {"probes_passed", probes_passed},
              {"messages", messages}};
}

json VerifierEvidence::to_json() const {
  json j{{"passed", passed},
         {"schema_valid", schema_valid},
         {"feasible", feasible},
         {"exactness_residual", exactness_residual},
         {"error_messages", error_messages},
         {"missing_slots", missing_slots}};
  if (hidden_test_report) j["hidden_test_report"] = hidden_test_report->to_json();
  return j;
}

namespace {

// First-failure accumulator shared by the witness checks.
struct Check {
  bool ok = true;
  std::string msg;
  void fail(const std::string& m) {
    if (ok) {
      ok = false;
      msg = m;
    }
  }
};

const Edge* find_edge(const Graph& g, const std::string& a,
                      const std::string& b) {
  for (const auto& e : g.edges) {
    if (e.u == a && e.v == b) return &e;
    if (!g.directed && e.u == b && e.v == a) return &e;
  }
  return nullptr;
}

int64_t edge_cost(const Edge& e) { return e.weight.value_or(1); }

std::vector<std::string> id_list(const json& j, Check& c, const std::string& what) {
  std::vector<std::string> out;
  if (!j.is_array()) {
    c.fail(what + " is not a list");
    return out;
  }
  for (const auto& x : j) {
    if (!x.is_string()) {
      c.fail(what + " contains a non-id entry");
      return {};
    }
    out.push_back(x.get<std::string>());
  }
  return out;
}

void require_nodes_exist(const Graph& g, const std::vector<std::string>& ids,
                         Check& c, const std::string& what) {
  for (const auto& id : ids)
    if (!g.has_node(id)) {
      c.fail(what + " references unknown node " + id);
      return;
    }
}

// Consecutive entries must be real edges (direction-aware).
void require_walk(const Graph& g, const std::vector<std::string>& ids, Check& c,
                  const std::string& what) {
  if (ids.empty()) {
    c.fail(what + " is empty");
    return;
  }
  require_nodes_exist(g, ids, c, what);
  for (size_t i = 0; c.ok && i + 1 < ids.size(); ++i)
    if (!find_edge(g, ids[i], ids[i + 1]))
      c.fail("invalid path: " + ids[i] + " to " + ids[i + 1] +
             " is not an edge");
}

void check_path(const Graph& g, const json& w, Check& c) {
  require_walk(g, id_list(w.at("path"), c, "path"), c, "path");
}

void check_hamilton_path(const Graph& g, const json& w, Check& c) {
  std::vector<std::string> ids = id_list(w.at("path"), c, "path");
  if (!c.ok) return;
  require_walk(g, ids, c, "path");
  if (!c.ok) return;
  std::set<std::string> seen(ids.begin(), ids.end());
  if (seen.size() != ids.size()) {
    c.fail("repeated node on the path");
    return;
  }
  if (ids.size() != g.nodes.size()) c.fail("path does not visit every node");
}

void check_tour(const Graph& g, const json& w, Check& c) {
  std::vector<std::string> ids = id_list(w.at("tour"), c, "tour");
  if (!c.ok) return;
  if (ids.size() != g.nodes.size()) {
    c.fail("tour does not visit every node exactly once");
    return;
  }
  std::set<std::string> seen(ids.begin(), ids.end());
  if (seen.size() != ids.size()) {
    c.fail("repeated node on the tour");
    return;
  }
  require_nodes_exist(g, ids, c, "tour");
  for (size_t i = 0; c.ok && i < ids.size(); ++i) {
    const std::string& a = ids[i];
    const std::string& b = ids[(i + 1) % ids.size()];
    if (!find_edge(g, a, b))
      c.fail("invalid path: " + a + " to " + b + " is not an edge");
  }
}

void check_tree(const Graph& g, const json& w, Check& c) {
  const json& edges = w.at("tree_edges");
  if (!edges.is_array()) {
    c.fail("tree_edges is not a list");
    return;
  }
  std::map<std::string, std::string> parent;
  std::function<std::string(const std::string&)> root =
      [&](const std::string& x) {
        auto it = parent.find(x);
        if (it == parent.end() || it->second == x) return x;
        return it->second = root(it->second);
      };
  for (const auto& id : g.nodes) parent[id] = id;
  size_t count = 0;
  for (const auto& je : edges) {
    if (!je.is_array() || je.size() != 2 || !je[0].is_string() ||
        !je[1].is_string()) {
      c.fail("tree_edges entries must be [u, v] pairs");
      return;
    }
    std::string a = je[0].get<std::string>(), b = je[1].get<std::string>();
    if (!find_edge(g, a, b)) {
      c.fail("tree edge " + a + " to " + b + " is not a graph edge");
      return;
    }
    std::string ra = root(a), rb = root(b);
    if (ra == rb) {
      c.fail("tree edges contain a cycle through " + a);
      return;
    }
    parent[ra] = rb;
    ++count;
  }
  if (count + 1 != g.nodes.size()) {
    c.fail("tree has " + std::to_string(count) + " edges, expected " +
           std::to_string(g.nodes.size() - 1));
    return;
  }
  std::string r0 = root(g.nodes.front());
  for (const auto& id : g.nodes)
    if (root(id) != r0) {
      c.fail("tree does not span node " + id);
      return;
    }
}

void check_flow(const StructuredTask& t, const json& w, Check& c) {
  const json& entries = w.at("flow");
  if (!entries.is_array()) {
    c.fail("flow is not a list");
    return;
  }
  std::map<std::string, int64_t> balance;
  std::set<std::pair<std::string, std::string>> used;
  for (const auto& je : entries) {
    if (!je.is_object() || !je.contains("u") || !je.contains("v") ||
        !je.contains("flow") || !je["flow"].is_number_integer()) {
      c.fail("flow entries must be {u, v, flow} records");
      return;
    }
    std::string a = je["u"].get<std::string>(), b = je["v"].get<std::string>();
    int64_t fl = je["flow"].get<int64_t>();
    if (fl <= 0) {
      c.fail("flow on " + a + " to " + b + " must be positive");
      return;
    }
    if (!used.insert({a, b}).second) {
      c.fail("duplicate flow entry for " + a + " to " + b);
      return;
    }
    const Edge* e = find_edge(t.graph, a, b);
    if (!e || (t.graph.directed && e->u != a)) {
      c.fail("flow uses " + a + " to " + b + " which is not an arc");
      return;
    }
    if (!e->capacity || fl > *e->capacity) {
      c.fail("capacity violation on " + a + " to " + b);
      return;
    }
    balance[a] -= fl;
    balance[b] += fl;
  }
  const std::string& s = *t.query.source;
  const std::string& tt = *t.query.target;
  for (const auto& [id, net] : balance)
    if (id != s && id != tt && net != 0) {
      c.fail("flow is not conserved at " + id);
      return;
    }
}

void check_matching(const StructuredTask& t, const json& w, Check& c) {
  const json& entries = w.at("matching");
  if (!entries.is_array()) {
    c.fail("matching is not a list");
    return;
  }
  std::set<std::string> touched;
  for (const auto& je : entries) {
    if (!je.is_array() || je.size() != 2 || !je[0].is_string() ||
        !je[1].is_string()) {
      c.fail("matching entries must be [u, v] pairs");
      return;
    }
    std::string a = je[0].get<std::string>(), b = je[1].get<std::string>();
    if (!find_edge(t.graph, a, b)) {
      c.fail("unmatched edge: " + a + " to " + b + " is not a graph edge");
      return;
    }
    auto la = t.graph.node_labels.find(a), lb = t.graph.node_labels.find(b);
    if (la == t.graph.node_labels.end() || lb == t.graph.node_labels.end() ||
        la->second == lb->second) {
      c.fail("matching pair " + a + ", " + b + " does not cross the parts");
      return;
    }
    bool fresh_a = touched.insert(a).second;
    bool fresh_b = touched.insert(b).second;
    if (!fresh_a || !fresh_b) {
      c.fail("node matched twice: " + (!fresh_a ? a : b));
      return;
    }
  }
}

void check_order(const Graph& g, const json& w, Check& c) {
  std::vector<std::string> ids = id_list(w.at("order"), c, "order");
  if (!c.ok) return;
  std::map<std::string, size_t> pos;
  for (size_t i = 0; i < ids.size(); ++i)
    if (!pos.emplace(ids[i], i).second) {
      c.fail("order repeats node " + ids[i]);
      return;
    }
  if (pos.size() != g.nodes.size()) {
    c.fail("order does not cover every node");
    return;
  }
  for (const auto& id : g.nodes)
    if (!pos.count(id)) {
      c.fail("order misses node " + id);
      return;
    }
  for (const auto& e : g.edges)
    if (pos[e.u] >= pos[e.v]) {
      c.fail("order violates arc " + e.u + " to " + e.v);
      return;
    }
}

void check_partition(const Graph& g, const json& w, Check& c) {
  const json& comps = w.at("components");
  if (!comps.is_array()) {
    c.fail("components is not a list");
    return;
  }
  std::set<std::string> seen;
  for (const auto& comp : comps) {
    std::vector<std::string> ids = id_list(comp, c, "component");
    if (!c.ok) return;
    if (ids.empty()) {
      c.fail("empty component");
      return;
    }
    require_nodes_exist(g, ids, c, "component");
    for (const auto& id : ids)
      if (!seen.insert(id).second) {
        c.fail("node " + id + " appears in two components");
        return;
      }
  }
  if (c.ok && seen.size() != g.nodes.size())
    c.fail("components do not cover every node");
}

void check_edge_list(const Graph& g, const json& w, const char* key, Check& c) {
  const json& entries = w.at(key);
  if (!entries.is_array()) {
    c.fail(std::string(key) + " is not a list");
    return;
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& je : entries) {
    if (!je.is_array() || je.size() != 2 || !je[0].is_string() ||
        !je[1].is_string()) {
      c.fail(std::string(key) + " entries must be [u, v] pairs");
      return;
    }
    std::string a = je[0].get<std::string>(), b = je[1].get<std::string>();
    if (!find_edge(g, a, b)) {
      c.fail(std::string(key) + " lists " + a + " to " + b +
             " which is not a graph edge");
      return;
    }
    auto norm = g.directed || a <= b ? std::pair{a, b} : std::pair{b, a};
    if (!seen.insert(norm).second) {
      c.fail(std::string(key) + " lists " + a + " to " + b + " twice");
      return;
    }
  }
}

void check_closed_walk(const Graph& g, const json& w, const char* key,
                       bool odd_only, Check& c) {
  std::vector<std::string> ids = id_list(w.at(key), c, key);
  if (!c.ok) return;
  // Two antiparallel arcs close a directed cycle; undirected cycles need
  // three distinct edges.
  size_t min_entries = g.directed ? 3 : 4;
  if (ids.size() < min_entries || ids.front() != ids.back()) {
    c.fail(std::string(key) + " is not a closed simple walk");
    return;
  }
  if (odd_only && (ids.size() - 1) % 2 == 0) {
    c.fail(std::string(key) + " has even length");
    return;
  }
  std::set<std::string> interior(ids.begin(), ids.end() - 1);
  if (interior.size() != ids.size() - 1) {
    c.fail("repeated node on the " + std::string(key));
    return;
  }
  require_walk(g, ids, c, key);
}

void check_two_coloring(const Graph& g, const json& w, Check& c) {
  const json& colors = w.at("coloring");
  if (!colors.is_object()) {
    c.fail("coloring is not a node-to-side map");
    return;
  }
  for (const auto& id : g.nodes) {
    auto it = colors.find(id);
    if (it == colors.end()) {
      c.fail("coloring misses node " + id);
      return;
    }
    if (!it->is_number_integer() || (it->get<int>() != 0 && it->get<int>() != 1)) {
      c.fail("coloring side for " + id + " must be 0 or 1");
      return;
    }
  }
  for (const auto& e : g.edges)
    if (colors.at(e.u) == colors.at(e.v)) {
      c.fail("invalid color assignment: " + e.u + " and " + e.v +
             " share a side");
      return;
    }
}

void check_coloring(const Graph& g, const json& w, Check& c) {
  const json& colors = w.at("colors");
  if (!colors.is_object()) {
    c.fail("colors is not a node-to-color map");
    return;
  }
  for (const auto& id : g.nodes) {
    auto it = colors.find(id);
    if (it == colors.end()) {
      c.fail("colors misses node " + id);
      return;
    }
    if (!it->is_number_integer()) {
      c.fail("color of " + id + " is not an integer");
      return;
    }
  }
  for (const auto& e : g.edges)
    if (colors.at(e.u) == colors.at(e.v)) {
      c.fail("invalid color assignment: " + e.u + " and " + e.v +
             " share color " + colors.at(e.u).dump());
      return;
    }
}

void check_component_cut(const Graph& g, const json& w, Check& c) {
  std::vector<std::string> ids = id_list(w.at("component"), c, "component");
  if (!c.ok) return;
  if (ids.empty()) {
    c.fail("component is empty");
    return;
  }
  require_nodes_exist(g, ids, c, "component");
  if (!c.ok) return;
  std::set<std::string> inside(ids.begin(), ids.end());
  for (const auto& e : g.edges) {
    bool iu = inside.count(e.u) > 0, iv = inside.count(e.v) > 0;
    if (iu && !iv) {
      c.fail("edge " + e.u + " to " + e.v + " leaves the claimed component");
      return;
    }
    if (!g.directed && iv && !iu) {
      c.fail("edge " + e.u + " to " + e.v + " leaves the claimed component");
      return;
    }
  }
}

void check_common_nodes(const StructuredTask& t, const json& w, Check& c) {
  std::vector<std::string> ids = id_list(w.at("nodes"), c, "nodes");
  if (!c.ok) return;
  require_nodes_exist(t.graph, ids, c, "nodes");
  if (!c.ok) return;
  std::set<std::string> seen;
  const auto& [a, b] = *t.query.pair;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      c.fail("nodes lists " + id + " twice");
      return;
    }
    if (id == a || id == b) {
      c.fail("nodes lists query endpoint " + id);
      return;
    }
    if (!find_edge(t.graph, a, id) || !find_edge(t.graph, b, id)) {
      c.fail(id + " is not adjacent to both query nodes");
      return;
    }
  }
}

void check_triangle(const Graph& g, const json& w, Check& c) {
  std::vector<std::string> ids = id_list(w.at("nodes"), c, "nodes");
  if (!c.ok) return;
  if (ids.size() != 3 || std::set<std::string>(ids.begin(), ids.end()).size() != 3) {
    c.fail("triangle witness must list three distinct nodes");
    return;
  }
  require_nodes_exist(g, ids, c, "nodes");
  if (!c.ok) return;
  if (!find_edge(g, ids[0], ids[1]) || !find_edge(g, ids[1], ids[2]) ||
      !find_edge(g, ids[0], ids[2]))
    c.fail("claimed triangle is missing an edge");
}

void check_mapping(const StructuredTask& t, const json& w, Check& c) {
  if (!t.query.pattern) {
    c.fail("task carries no pattern");
    return;
  }
  const Graph& pat = *t.query.pattern;
  const json& m = w.at("mapping");
  if (!m.is_object()) {
    c.fail("mapping is not a pattern-to-host map");
    return;
  }
  std::map<std::string, std::string> image;
  std::set<std::string> targets;
  for (const auto& pid : pat.nodes) {
    auto it = m.find(pid);
    if (it == m.end() || !it->is_string()) {
      c.fail("mapping misses pattern node " + pid);
      return;
    }
    std::string host = it->get<std::string>();
    if (!t.graph.has_node(host)) {
      c.fail("mapping sends " + pid + " to unknown node " + host);
      return;
    }
    if (!targets.insert(host).second) {
      c.fail("mapping is not injective at " + host);
      return;
    }
    image[pid] = host;
  }
  for (const auto& e : pat.edges) {
    const Edge* he = find_edge(t.graph, image[e.u], image[e.v]);
    if (!he || (t.graph.directed && he->u != image[e.u])) {
      c.fail("mapping does not preserve pattern edge " + e.u + " to " + e.v);
      return;
    }
  }
}

void check_states(const StructuredTask& t, const json& w, Check& c) {
  const json& states = w.at("states");
  if (!states.is_object()) {
    c.fail("states is not a node-to-vector map");
    return;
  }
  size_t dim = 0;
  bool first = true;
  for (const auto& id : t.graph.nodes) {
    auto it = states.find(id);
    if (it == states.end() || !it->is_array()) {
      c.fail("states misses node " + id);
      return;
    }
    for (const auto& x : *it)
      if (!x.is_number_integer()) {
        c.fail("state of " + id + " contains a non-integer");
        return;
      }
    if (first) {
      dim = it->size();
      first = false;
    } else if (it->size() != dim) {
      c.fail("state of " + id + " has the wrong dimension");
      return;
    }
  }
}

void check_cover(const Graph& g, const json& w, Check& c) {
  std::vector<std::string> ids = id_list(w.at("cover"), c, "cover");
  if (!c.ok) return;
  require_nodes_exist(g, ids, c, "cover");
  if (!c.ok) return;
  std::set<std::string> cover(ids.begin(), ids.end());
  if (cover.size() != ids.size()) {
    c.fail("cover lists a node twice");
    return;
  }
  for (const auto& e : g.edges)
    if (!cover.count(e.u) && !cover.count(e.v)) {
      c.fail("uncovered edge " + e.u + " to " + e.v);
      return;
    }
}

}  // namespace

std::pair<bool, std::string> validate_witness(Family f, const json& witness,
                                              const StructuredTask& task) {
  Check c;
  if (!witness.is_object()) return {false, "witness is not a record"};
  auto has = [&](const char* key) { return witness.contains(key); };
  try {
    switch (f) {
      case Family::shortest_path:
      case Family::shortest_path_cost:
        if (!has("path")) return {false, "witness carries no path"};
        check_path(task.graph, witness, c);
        break;
      case Family::tsp:
        if (!has("tour")) return {false, "witness carries no tour"};
        check_tour(task.graph, witness, c);
        break;
      case Family::hamilton:
        if (!has("path")) return {false, "witness carries no path"};
        check_hamilton_path(task.graph, witness, c);
        break;
      case Family::mst:
        if (!has("tree_edges")) return {false, "witness carries no tree_edges"};
        check_tree(task.graph, witness, c);
        break;
      case Family::max_flow:
        if (!has("flow")) return {false, "witness carries no flow"};
        check_flow(task, witness, c);
        break;
      case Family::bipartite_matching:
        if (!has("matching")) return {false, "witness carries no matching"};
        check_matching(task, witness, c);
        break;
      case Family::topological_sort:
        if (!has("order")) return {false, "witness carries no order"};
        check_order(task.graph, witness, c);
        break;
      case Family::scc:
        if (!has("components")) return {false, "witness carries no components"};
        check_partition(task.graph, witness, c);
        break;
      case Family::bridges:
        if (!has("bridges")) return {false, "witness carries no bridges"};
        check_edge_list(task.graph, witness, "bridges", c);
        break;
      case Family::connectivity:
        if (has("path"))
          check_path(task.graph, witness, c);
        else if (has("component"))
          check_component_cut(task.graph, witness, c);
        else
          return {false, "witness carries neither path nor component"};
        break;
      case Family::cycle:
        if (!has("cycle")) return {false, "witness carries no cycle"};
        check_closed_walk(task.graph, witness, "cycle", false, c);
        break;
      case Family::bipartite_check:
        if (has("coloring"))
          check_two_coloring(task.graph, witness, c);
        else if (has("odd_cycle"))
          check_closed_walk(task.graph, witness, "odd_cycle", true, c);
        else
          return {false, "witness carries neither coloring nor odd_cycle"};
        break;
      case Family::common_neighbors:
        if (!has("nodes")) return {false, "witness carries no nodes"};
        check_common_nodes(task, witness, c);
        break;
      case Family::triangle_max_sum:
        if (!has("nodes")) return {false, "witness carries no nodes"};
        check_triangle(task.graph, witness, c);
        break;
      case Family::substructure:
        if (!has("mapping")) return {false, "witness carries no mapping"};
        check_mapping(task, witness, c);
        break;
      case Family::gnn_sum:
        if (!has("states")) return {false, "witness carries no states"};
        check_states(task, witness, c);
        break;
      case Family::coloring:
        if (!has("colors")) return {false, "witness carries no colors"};
        check_coloring(task.graph, witness, c);
        break;
      case Family::vertex_cover:
        if (!has("cover")) return {false, "witness carries no cover"};
        check_cover(task.graph, witness, c);
        break;
    }
  } catch (const std::exception& e) {
    return {false, std::string("malformed witness: ") + e.what()};
  }
  return {c.ok, c.msg};
}

// ---------------------------------------------------------------------------
// Full verdicts

namespace {

enum class ValueKind { integer, boolean, none };

ValueKind value_kind(Family f) {
  switch (f) {
    case Family::hamilton:
    case Family::connectivity:
    case Family::cycle:
    case Family::bipartite_check:
    case Family::substructure:
      return ValueKind::boolean;
    case Family::topological_sort:
    case Family::gnn_sum:
      return ValueKind::none;
    default:
      return ValueKind::integer;
  }
}

// Witness component the answer must carry, given the claimed value.
// Empty string = no witness required.
std::string required_witness_key(Family f, const json& value) {
  bool claim = value.is_boolean() && value.get<bool>();
  switch (f) {
    case Family::shortest_path:
      return "path";
    case Family::shortest_path_cost:
      return "";  // cost-only family; the optimum comparison is the claim
    case Family::tsp:
      return "tour";
    case Family::hamilton:
      return claim ? "path" : "";
    case Family::mst:
      return "tree_edges";
    case Family::max_flow:
      return "flow";
    case Family::bipartite_matching:
      return "matching";
    case Family::topological_sort:
      return "order";
    case Family::scc:
      return "components";
    case Family::bridges:
      return "bridges";
    case Family::connectivity:
      return claim ? "path" : "component";
    case Family::cycle:
      return claim ? "cycle" : "";
    case Family::bipartite_check:
      return claim ? "coloring" : "odd_cycle";
    case Family::common_neighbors:
    case Family::triangle_max_sum:
      return "nodes";
    case Family::substructure:
      return claim ? "mapping" : "";
    case Family::gnn_sum:
      return "states";
    case Family::coloring:
      return "colors";
    case Family::vertex_cover:
      return "cover";
  }
  return "";
}

int64_t walk_cost(const Graph& g, const std::vector<std::string>& ids) {
  int64_t total = 0;
  for (size_t i = 0; i + 1 < ids.size(); ++i)
    total += edge_cost(*find_edge(g, ids[i], ids[i + 1]));
  return total;
}

std::vector<std::string> witness_ids(const json& witness, const char* key) {
  std::vector<std::string> out;
  for (const auto& x : witness.at(key)) out.push_back(x.get<std::string>());
  return out;
}

bool walk_blocked(const StructuredTask& t, const std::vector<std::string>& ids,
                  bool closed) {
  const size_t n = ids.size();
  if (n < 2) return false;
  const size_t steps = closed ? n : n - 1;
  for (size_t i = 0; i < steps; ++i)
    if (t.constraints.blocks(ids[i], ids[(i + 1) % n], t.graph.directed))
      return true;
  return false;
}

// Canonical set form of a components witness, for uniqueness comparison.
std::set<std::set<std::string>> component_sets(const json& witness) {
  std::set<std::set<std::string>> out;
  for (const auto& comp : witness.at("components")) {
    std::set<std::string> s;
    for (const auto& id : comp) s.insert(id.get<std::string>());
    out.insert(std::move(s));
  }
  return out;
}

std::set<std::pair<std::string, std::string>> pair_set(const json& witness,
                                                       const char* key,
                                                       bool directed) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& je : witness.at(key)) {
    std::string a = je[0].get<std::string>(), b = je[1].get<std::string>();
    if (!directed && b < a) std::swap(a, b);
    out.insert({a, b});
  }
  return out;
}

}  // namespace

VerifierEvidence verify(const Answer& a, const StructuredTask& t) {
  VerifierEvidence ev;
  ev.schema_valid = true;
  ev.feasible = true;

  if (a.family != t.family) {
    ev.schema_valid = false;
    ev.feasible = false;
    ev.error_messages.push_back("answer targets " + to_string(a.family) +
                                " but the task is " + to_string(t.family));
    return ev;
  }

  // --- answer shape -------------------------------------------------------
  ValueKind vk = value_kind(t.family);
  if (vk == ValueKind::integer && !a.value.is_number_integer()) {
    ev.schema_valid = false;
    if (a.value.is_null())
      ev.missing_slots.push_back("answer.value");
    else
      ev.error_messages.push_back("answer.value must be an integer");
  }
  if (vk == ValueKind::boolean && !a.value.is_boolean()) {
    ev.schema_valid = false;
    if (a.value.is_null())
      ev.missing_slots.push_back("answer.value");
    else
      ev.error_messages.push_back("answer.value must be a boolean");
  }
  std::string wkey;
  if (ev.schema_valid) {
    wkey = required_witness_key(t.family, a.value);
    if (!wkey.empty() && (!a.witness.is_object() || !a.witness.contains(wkey))) {
      ev.schema_valid = false;
      ev.missing_slots.push_back("answer.witness." + wkey);
    }
  }
  if (!ev.schema_valid) {
    ev.feasible = false;
    if (ev.error_messages.empty())
      ev.error_messages.push_back("answer is missing required components");
    return ev;
  }

  // --- witness structure --------------------------------------------------
  if (!wkey.empty()) {
    auto [ok, msg] = validate_witness(t.family, a.witness, t);
    if (!ok) {
      ev.feasible = false;
      ev.error_messages.push_back(msg);
    }
  }

  // --- value/witness consistency, constraints, optimality ------------------
  Exactness ex = effective_exactness(t.family, t.difficulty);
  bool exact_grade = ex == Exactness::exact || ex == Exactness::exact_small ||
                     ex == Exactness::exact_medium;

  auto fail = [&](const std::string& msg, int64_t residual = 0) {
    ev.feasible = false;
    ev.error_messages.push_back(msg);
    if (residual > ev.exactness_residual) ev.exactness_residual = residual;
  };
  std::optional<Answer> oracle_cache;
  auto oracle = [&]() -> const Answer& {
    if (!oracle_cache) {
      SolverResult r = solve(t);
      if (r.status != SolveStatus::solved)
        throw CoreError("grader could not solve the canonical task");
      oracle_cache = std::move(r.answer);
    }
    return *oracle_cache;
  };

  try {
    switch (t.family) {
      case Family::shortest_path_cost:
        break;  // graded purely on the optimum comparison below
      case Family::shortest_path: {
        if (!ev.feasible) break;
        auto ids = witness_ids(a.witness, "path");
        if (ids.front() != *t.query.source || ids.back() != *t.query.target)
          fail("path endpoints do not match the query");
        else if (walk_blocked(t, ids, false))
          fail("path uses a blocked edge");
        else if (walk_cost(t.graph, ids) != a.value.get<int64_t>())
          fail("claimed cost differs from the path cost");
        break;
      }
      case Family::tsp: {
        if (!ev.feasible) break;
        auto ids = witness_ids(a.witness, "tour");
        int64_t cost = walk_cost(t.graph, ids) +
                       edge_cost(*find_edge(t.graph, ids.back(), ids.front()));
        if (walk_blocked(t, ids, true))
          fail("tour uses a blocked edge");
        else if (cost != a.value.get<int64_t>())
          fail("claimed cost differs from the tour cost");
        else if (t.constraints.max_cost && cost > *t.constraints.max_cost)
          fail("tour exceeds the cost budget", cost - *t.constraints.max_cost);
        break;
      }
      case Family::mst: {
        if (!ev.feasible) break;
        int64_t total = 0;
        for (const auto& je : a.witness.at("tree_edges"))
          total += edge_cost(*find_edge(t.graph, je[0].get<std::string>(),
                                        je[1].get<std::string>()));
        if (total != a.value.get<int64_t>())
          fail("claimed weight differs from the tree weight");
        break;
      }
      case Family::max_flow: {
        if (!ev.feasible) break;
        int64_t out = 0;
        for (const auto& je : a.witness.at("flow")) {
          if (je["u"] == *t.query.source) out += je["flow"].get<int64_t>();
          if (je["v"] == *t.query.source) out -= je["flow"].get<int64_t>();
        }
        if (out != a.value.get<int64_t>())
          fail("claimed flow differs from the witness net flow");
        break;
      }
      case Family::bipartite_matching:
        if (ev.feasible &&
            static_cast<int64_t>(a.witness.at("matching").size()) !=
                a.value.get<int64_t>())
          fail("claimed size differs from the matching size");
        break;
      case Family::topological_sort:
        break;  // a valid order is the whole claim
      case Family::scc: {
        if (!ev.feasible) break;
        if (static_cast<int64_t>(a.witness.at("components").size()) !=
            a.value.get<int64_t>()) {
          fail("claimed count differs from the component count");
          break;
        }
        if (component_sets(a.witness) !=
            component_sets(oracle().witness))
          fail("claimed components are not the strongly connected components",
               1);
        break;
      }
      case Family::bridges: {
        if (!ev.feasible) break;
        if (static_cast<int64_t>(a.witness.at("bridges").size()) !=
            a.value.get<int64_t>()) {
          fail("claimed count differs from the listed bridges");
          break;
        }
        if (pair_set(a.witness, "bridges", false) !=
            pair_set(oracle().witness, "bridges", false))
          fail("listed bridges are not exactly the bridge edges", 1);
        break;
      }
      case Family::common_neighbors: {
        if (!ev.feasible) break;
        if (static_cast<int64_t>(a.witness.at("nodes").size()) !=
            a.value.get<int64_t>()) {
          fail("claimed count differs from the listed nodes");
          break;
        }
        auto got = witness_ids(a.witness, "nodes");
        auto want = witness_ids(oracle().witness, "nodes");
        if (std::set<std::string>(got.begin(), got.end()) !=
            std::set<std::string>(want.begin(), want.end()))
          fail("listed nodes are not exactly the common neighbors", 1);
        break;
      }
      case Family::triangle_max_sum: {
        if (!ev.feasible) break;
        int64_t sum = 0;
        for (const auto& id : a.witness.at("nodes"))
          sum += t.graph.node_weights.at(id.get<std::string>());
        if (sum != a.value.get<int64_t>())
          fail("claimed sum differs from the triangle weight");
        break;
      }
      case Family::gnn_sum: {
        if (!ev.feasible) break;
        if (a.witness.at("states") != oracle().witness.at("states"))
          fail("states do not match the aggregation result", 1);
        break;
      }
      case Family::coloring: {
        if (!ev.feasible) break;
        std::set<json> used;
        for (const auto& [id, color] : a.witness.at("colors").items()) {
          (void)id;
          used.insert(color);
        }
        int64_t count = static_cast<int64_t>(used.size());
        if (count != a.value.get<int64_t>())
          fail("claimed count differs from the colors used");
        else if (t.constraints.max_colors && count > *t.constraints.max_colors)
          fail("invalid color assignment: budget exceeded",
               count - *t.constraints.max_colors);
        break;
      }
      case Family::vertex_cover: {
        if (!ev.feasible) break;
        int64_t size = static_cast<int64_t>(a.witness.at("cover").size());
        if (size != a.value.get<int64_t>())
          fail("claimed size differs from the cover size");
        else if (t.constraints.max_size && size > *t.constraints.max_size)
          fail("cover exceeds the size budget", size - *t.constraints.max_size);
        break;
      }
      case Family::hamilton:
      case Family::connectivity:
      case Family::cycle:
      case Family::bipartite_check:
      case Family::substructure:
        break;  // boolean families are graded against the oracle below
    }

    // Optimality / truth, graded strictness.
    if (vk == ValueKind::boolean) {
      bool truth = oracle().value.get<bool>();
      if (a.value.get<bool>() != truth) {
        ev.exactness_residual = std::max<int64_t>(ev.exactness_residual, 1);
        ev.error_messages.push_back("claimed " +
                                    std::string(a.value.get<bool>() ? "true" : "false") +
                                    " but the answer is " +
                                    (truth ? "true" : "false"));
      }
      // connectivity: the witness side must match the claim's endpoints.
      if (t.family == Family::connectivity && ev.feasible) {
        if (a.value.get<bool>()) {
          auto ids = witness_ids(a.witness, "path");
          if (ids.front() != *t.query.source || ids.back() != *t.query.target)
            fail("path endpoints do not match the query");
        } else {
          std::set<std::string> side;
          for (const auto& id : a.witness.at("component"))
            side.insert(id.get<std::string>());
          if (!side.count(*t.query.source) || side.count(*t.query.target))
            fail("claimed component does not separate the query nodes");
        }
      }
    } else if (exact_grade && vk == ValueKind::integer) {
      int64_t claimed = a.value.get<int64_t>();
      int64_t best = oracle().value.get<int64_t>();
      int64_t residual = claimed > best ? claimed - best : best - claimed;
      if (residual != 0) {
        ev.exactness_residual = std::max(ev.exactness_residual, residual);
        ev.error_messages.push_back(
            "claimed value " + std::to_string(claimed) + " is off by " +
            std::to_string(residual) + " from the optimum");
      }
    }
  } catch (const std::exception& e) {
    ev.feasible = false;
    ev.error_messages.push_back(std::string("grading failed: ") + e.what());
  }

  ev.passed = ev.schema_valid && ev.feasible && ev.exactness_residual == 0;
  return ev;
}

ProbeReport probe_candidate(const ToolBody& candidate, Family f,
                            Difficulty tier, uint64_t probe_seed, int n_probes,
                            double timeout_seconds) {
  ProbeReport rep;
  for (int i = 0; i < n_probes; ++i) {
    ++rep.probes_run;
    std::string tag = "probe " + std::to_string(i);
    try {
      TaskInstance inst =
          generate(f, tier, derive_seed(probe_seed, "probe", i));
      auto start = std::chrono::steady_clock::now();
      Answer got = candidate(inst.task);
      double secs = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      if (secs > timeout_seconds) {
        rep.messages.push_back(tag + ": timed out after " +
                               std::to_string(secs) + "s");
        continue;
      }
      VerifierEvidence ev = verify(got, inst.task);
      if (ev.passed) {
        ++rep.probes_passed;
      } else {
        std::string why = ev.error_messages.empty()
                              ? "failed verification"
                              : ev.error_messages.front();
        rep.messages.push_back(tag + ": " + why);
      }
    } catch (const std::exception& e) {
      rep.messages.push_back(tag + ": candidate raised: " + e.what());
    }
  }
  return rep;
}

}  // namespace graphforge
