#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace graphforge {

using json = nlohmann::json;

/// Thrown on malformed task/answer payloads and unknown enum tags.
class CoreError : public std::runtime_error {
 public:
  explicit CoreError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Enumerations

enum class Family {
  shortest_path,
  shortest_path_cost,
  tsp,
  hamilton,
  mst,
  max_flow,
  bipartite_matching,
  topological_sort,
  scc,
  bridges,
  connectivity,
  cycle,
  bipartite_check,
  common_neighbors,
  triangle_max_sum,
  substructure,
  gnn_sum,
  coloring,
  vertex_cover,
};

inline constexpr int kFamilyCount = 19;

enum class Difficulty { D1, D2, D3, D4 };

enum class Exactness {
  exact,
  exact_small,
  exact_medium,
  feasible,
  feasible_large,
  boolean_with_witness,
};

const std::vector<Family>& all_families();
std::string to_string(Family f);
std::string to_string(Difficulty d);
std::string to_string(Exactness e);
Family family_from_string(const std::string& s);
Difficulty difficulty_from_string(const std::string& s);
Exactness exactness_from_string(const std::string& s);
int tier_index(Difficulty d);  // D1 -> 1 ... D4 -> 4

// ---------------------------------------------------------------------------
// Graph model

struct Edge {
  std::string u;
  std::string v;
  std::optional<int64_t> weight;
  std::optional<int64_t> capacity;
};

/// Node-labelled, optionally weighted graph over opaque string ids.
/// Attribution is homogeneous: either every edge carries a weight or none
/// does, and likewise for capacities and per-node attributes.
struct Graph {
  std::vector<std::string> nodes;
  std::vector<Edge> edges;
  bool directed = false;
  std::map<std::string, std::string> node_labels;
  std::map<std::string, int64_t> node_weights;
  std::map<std::string, std::vector<int64_t>> node_embeddings;

  bool has_node(const std::string& id) const;
  bool has_edge(const std::string& a, const std::string& b) const;
  std::optional<int64_t> edge_weight(const std::string& a, const std::string& b) const;
};

/// Structural invariants: ids unique, endpoints exist, no self loops, no
/// duplicate edges (order-insensitive when undirected), homogeneous
/// attribution. Returns human-readable violations; empty means valid.
std::vector<std::string> graph_violations(const Graph& g);

struct Query {
  std::optional<std::string> source;
  std::optional<std::string> target;
  std::optional<std::pair<std::string, std::string>> pair;
  std::optional<Graph> pattern;
  std::optional<int> rounds;
  std::optional<std::string> aggregation;
};

struct ConstraintSet {
  std::vector<std::pair<std::string, std::string>> blocked_edges;
  std::optional<int64_t> max_cost;
  std::optional<int> max_colors;
  std::optional<int> max_size;

  bool empty() const {
    return blocked_edges.empty() && !max_cost && !max_colors && !max_size;
  }
  bool blocks(const std::string& a, const std::string& b, bool directed) const;
};

/// One task instance. (family, difficulty, seed) regenerates it exactly;
/// two tasks are equal iff their canonical serializations are byte-equal.
struct StructuredTask {
  Family family = Family::shortest_path;
  Difficulty difficulty = Difficulty::D1;
  uint64_t seed = 0;
  Graph graph;
  Query query;
  ConstraintSet constraints;
};

/// Schema contract for a family: which dotted slot paths must / may appear
/// in a task document, and how strictly answers are graded by default.
struct TypedInterface {
  Family family = Family::shortest_path;
  std::vector<std::string> required;
  std::vector<std::string> optional;
  Exactness exactness = Exactness::exact;
};

/// Claimed solution. `value` is an integer or boolean scalar (null when the
/// family is witness-only); `witness` is a family-shaped object or null.
struct Answer {
  Family family = Family::shortest_path;
  json value;    // number, boolean, or null
  json witness;  // object or null

  static Answer empty(Family f) { return Answer{f, json(), json()}; }
};

/// Slot-level difference report. `scalar` is the total number of listed
/// slots; an edge-set difference counts as one slot regardless of how many
/// edges differ (the summary string carries the counts).
struct Discrepancy {
  std::vector<std::string> missing_slots;
  std::vector<std::string> extra_slots;
  std::vector<std::pair<std::string, std::string>> mismatched;  // slot, summary
  int scalar = 0;

  bool clean() const { return scalar == 0; }
  json to_json() const;
};

// ---------------------------------------------------------------------------
// Canonical JSON forms
//
// Canonical task layout (object keys are emitted sorted):
//   {family, difficulty, seed,
//    task_input: {graph: {nodes, edges, directed, node_labels?,
//                         node_weights?, node_embeddings?},
//                 query: {...}, constraints: {...}}}
// Nodes are sorted; undirected edge endpoints are ordered; edges are sorted
// by (u, v). Empty attribute maps and empty constraint slots are omitted.

json graph_to_json(const Graph& g);
Graph graph_from_json(const json& j);
json query_to_json(const Query& q);
Query query_from_json(const json& j);
json constraints_to_json(const ConstraintSet& c);
ConstraintSet constraints_from_json(const json& j);

json task_input_to_json(const StructuredTask& t);
json canonical_json(const StructuredTask& t);
std::string canonical_serialize(const StructuredTask& t);
StructuredTask task_from_json(const json& j);

json answer_to_json(const Answer& a);
Answer answer_from_json(const json& j);

bool operator==(const StructuredTask& a, const StructuredTask& b);

// ---------------------------------------------------------------------------
// Interface table and structural checks

/// Slot schema for a family. Throws CoreError on an unknown family tag
/// (string overload) so callers surface typos instead of guessing.
TypedInterface interface_for(Family f);
TypedInterface interface_for(const std::string& family_tag);

/// Check an arbitrary task document (parsed JSON, possibly malformed)
/// against an interface. Never throws: malformed input yields a populated
/// report. Slots are the dotted paths of the TypedInterface plus the
/// envelope fields (family, difficulty, seed).
Discrepancy validate_structure(const json& doc, const TypedInterface& iface);

/// Slot-level diff of a recovered task document against the canonical one.
/// Both inputs are canonical-layout JSON; the recovered side may be
/// arbitrarily broken. Never throws.
Discrepancy json_discrepancy(const json& recovered, const json& canonical);

/// Typed wrapper over json_discrepancy. Errors (CoreError) when the two
/// tasks disagree on family: cross-family diffs are meaningless.
Discrepancy structured_discrepancy(const StructuredTask& recovered,
                                   const StructuredTask& canonical);

}  // namespace graphforge
