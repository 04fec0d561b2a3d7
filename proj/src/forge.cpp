#include "graphforge/forge.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "graphforge/rng.hpp"

namespace graphforge {

namespace {

std::string nid(int i) { return "n" + std::to_string(i); }
std::string pid(int i) { return "p" + std::to_string(i); }

}  // namespace

// ---------------------------------------------------------------------------
// Difficulty profiles and instance taxonomy

DifficultyProfile profile_for(Family f, Difficulty d) {
  using E = Exactness;
  // Default node bands per tier; routing families are clamped lower because
  // their exact solvers are exponential in n.
  static constexpr int bands[4][2] = {{4, 8}, {8, 14}, {12, 20}, {18, 30}};
  static constexpr int routing[4][2] = {{4, 8}, {8, 10}, {12, 15}, {18, 22}};
  int di = static_cast<int>(d);

  DifficultyProfile p;
  bool is_routing = f == Family::tsp || f == Family::hamilton;
  p.min_nodes = is_routing ? routing[di][0] : bands[di][0];
  p.max_nodes = is_routing ? routing[di][1] : bands[di][1];

  switch (f) {
    case Family::connectivity:
    case Family::cycle:
    case Family::bipartite_check:
      p.strictness = E::boolean_with_witness;
      break;
    case Family::tsp:
      p.strictness = d == Difficulty::D4 ? E::feasible_large : E::exact_small;
      break;
    case Family::hamilton:
      p.strictness = E::exact_small;
      break;
    case Family::substructure:
      p.strictness = d == Difficulty::D4 ? E::exact_medium : E::exact_small;
      break;
    case Family::coloring:
      p.strictness = d == Difficulty::D1 ? E::exact_small : E::feasible;
      break;
    case Family::vertex_cover:
      p.strictness = d == Difficulty::D1   ? E::exact_small
                     : d == Difficulty::D4 ? E::feasible_large
                                           : E::feasible;
      break;
    default:
      p.strictness = E::exact;
  }
  return p;
}

Exactness effective_exactness(Family f, Difficulty d) {
  return profile_for(f, d).strictness;
}

std::string regime_for(Family f, Difficulty d) {
  using F = Family;
  bool late = d == Difficulty::D3 || d == Difficulty::D4;
  switch (f) {
    case F::shortest_path:
    case F::shortest_path_cost:
      return late ? "directed_blocked" : "weighted_base";
    case F::tsp:
      return d == Difficulty::D4   ? "feasible_large"
             : d == Difficulty::D3 ? "constraint_tight"
                                   : "exact_small";
    case F::hamilton:
      return "chain_planted";
    case F::mst:
      return late ? "sparse_undirected" : "dense_undirected";
    case F::max_flow:
    case F::topological_sort:
    case F::scc:
      return "sparse_directed";
    case F::bipartite_matching:
      return "balanced_bipartite";
    case F::bridges:
    case F::connectivity:
    case F::cycle:
    case F::common_neighbors:
    case F::triangle_max_sum:
      return "sparse_undirected";
    case F::bipartite_check:
      return "tree_like";
    case F::substructure:
      return d == Difficulty::D4   ? "planted_pattern_dense_host"
             : d == Difficulty::D3 ? "planted_pattern_sparse_host"
                                   : "small_dag_pattern";
    case F::gnn_sum:
      return "1_layer_sparse";
    case F::coloring:
      return d == Difficulty::D1 ? "bipartite_easy" : "sparse_undirected";
    case F::vertex_cover:
      return d == Difficulty::D1   ? "exact_small"
             : d == Difficulty::D4 ? "constraint_tight"
                                   : "sparse_undirected";
  }
  return "unknown";
}

std::string constraint_tag_for(Family f, Difficulty d) {
  bool late = d == Difficulty::D3 || d == Difficulty::D4;
  switch (f) {
    case Family::shortest_path:
    case Family::shortest_path_cost:
      return late ? "blocked_edges" : "none";
    case Family::tsp:
      return late ? "blocked_edges+max_cost" : "none";
    case Family::coloring:
      return "max_colors";
    case Family::vertex_cover:
      return "max_size";
    case Family::substructure:
      return "pattern_graph";
    default:
      return "none";
  }
}

// ---------------------------------------------------------------------------
// Generators

namespace {

struct GenContext {
  RandomStream& rs;
  int n;
  Difficulty d;
};

// Random spanning tree over n fresh nodes (connected undirected base).
Graph tree_base(GenContext& c) {
  Graph g;
  for (int i = 0; i < c.n; ++i) g.nodes.push_back(nid(i));
  std::vector<int> order(c.n);
  std::iota(order.begin(), order.end(), 0);
  c.rs.shuffle(order);
  for (int i = 1; i < c.n; ++i) {
    int parent = order[static_cast<size_t>(c.rs.uniform(0, i - 1))];
    g.edges.push_back({nid(order[i]), nid(parent), {}, {}});
  }
  return g;
}

void add_extra_edges(Graph& g, GenContext& c, int count) {
  int guard = count * 20;
  while (count > 0 && guard-- > 0) {
    int a = static_cast<int>(c.rs.uniform(0, c.n - 1));
    int b = static_cast<int>(c.rs.uniform(0, c.n - 1));
    if (a == b || g.has_edge(nid(a), nid(b))) continue;
    g.edges.push_back({nid(a), nid(b), {}, {}});
    --count;
  }
}

void weight_edges(Graph& g, GenContext& c, int lo, int hi) {
  for (auto& e : g.edges) e.weight = c.rs.uniform(lo, hi);
}

StructuredTask shell(Family f, Difficulty d, uint64_t seed, Graph g) {
  StructuredTask t;
  t.family = f;
  t.difficulty = d;
  t.seed = seed;
  t.graph = std::move(g);
  return t;
}

StructuredTask gen_path(Family f, GenContext& c, Difficulty d, uint64_t seed) {
  bool late = d == Difficulty::D3 || d == Difficulty::D4;
  Graph g;
  std::vector<int> order(c.n);
  std::iota(order.begin(), order.end(), 0);
  c.rs.shuffle(order);
  for (int i = 0; i < c.n; ++i) g.nodes.push_back(nid(i));
  g.directed = late;

  // Plant a source->target path along the shuffled order, then add noise.
  std::set<std::pair<int, int>> planted;
  for (int i = 0; i + 1 < c.n; ++i) {
    g.edges.push_back({nid(order[i]), nid(order[i + 1]), {}, {}});
    planted.insert({order[i], order[i + 1]});
  }
  int extras = c.n / 2 + 1;
  int guard = extras * 20;
  while (extras > 0 && guard-- > 0) {
    int a = static_cast<int>(c.rs.uniform(0, c.n - 1));
    int b = static_cast<int>(c.rs.uniform(0, c.n - 1));
    if (a == b || g.has_edge(nid(a), nid(b))) continue;
    if (!g.directed && g.has_edge(nid(b), nid(a))) continue;
    g.edges.push_back({nid(a), nid(b), {}, {}});
    --extras;
  }
  weight_edges(g, c, 1, 9);

  StructuredTask t = shell(f, d, seed, std::move(g));
  t.query.source = nid(order[0]);
  t.query.target = nid(order[c.n - 1]);
  if (late) {
    // Block up to three non-planted edges; the planted route stays open.
    std::vector<std::pair<std::string, std::string>> candidates;
    for (const auto& e : t.graph.edges) {
      int a = std::stoi(e.u.substr(1)), b = std::stoi(e.v.substr(1));
      if (!planted.count({a, b})) candidates.emplace_back(e.u, e.v);
    }
    int take = std::min<int>(static_cast<int>(c.rs.uniform(1, 3)),
                             static_cast<int>(candidates.size()));
    for (int i = 0; i < take; ++i)
      t.constraints.blocked_edges.push_back(
          candidates[static_cast<size_t>(c.rs.uniform(0, candidates.size() - 1))]);
    std::sort(t.constraints.blocked_edges.begin(), t.constraints.blocked_edges.end());
    t.constraints.blocked_edges.erase(
        std::unique(t.constraints.blocked_edges.begin(), t.constraints.blocked_edges.end()),
        t.constraints.blocked_edges.end());
  }
  return t;
}

StructuredTask gen_tsp(GenContext& c, Difficulty d, uint64_t seed) {
  bool directed = d == Difficulty::D4;
  bool late = d == Difficulty::D3 || d == Difficulty::D4;
  Graph g;
  for (int i = 0; i < c.n; ++i) g.nodes.push_back(nid(i));
  g.directed = directed;

  // Planted tour over a random permutation. Tour arcs are strictly cheaper
  // than everything else, so the planted tour bounds the optimum and greedy
  // search recovers a within-budget tour on large instances.
  std::vector<int> tour(c.n);
  std::iota(tour.begin(), tour.end(), 0);
  c.rs.shuffle(tour);
  std::set<std::pair<int, int>> on_tour;
  int64_t planted_cost = 0;
  for (int i = 0; i < c.n; ++i) {
    int a = tour[i], b = tour[(i + 1) % c.n];
    int64_t w = c.rs.uniform(1, 4);
    planted_cost += w;
    g.edges.push_back({nid(a), nid(b), w, {}});
    on_tour.insert({a, b});
    if (!directed) on_tour.insert({b, a});
  }
  for (int a = 0; a < c.n; ++a)
    for (int b = directed ? 0 : a + 1; b < c.n; ++b) {
      if (a == b || on_tour.count({a, b})) continue;
      g.edges.push_back({nid(a), nid(b), c.rs.uniform(5, 15), {}});
    }

  StructuredTask t = shell(Family::tsp, d, seed, std::move(g));
  if (late) {
    std::vector<std::pair<std::string, std::string>> off_tour;
    for (const auto& e : t.graph.edges) {
      int a = std::stoi(e.u.substr(1)), b = std::stoi(e.v.substr(1));
      if (!on_tour.count({a, b})) off_tour.emplace_back(e.u, e.v);
    }
    int take = std::min<int>(static_cast<int>(c.rs.uniform(1, 3)),
                             static_cast<int>(off_tour.size()));
    std::set<std::pair<std::string, std::string>> chosen;
    for (int i = 0; i < take; ++i)
      chosen.insert(off_tour[static_cast<size_t>(c.rs.uniform(0, off_tour.size() - 1))]);
    t.constraints.blocked_edges.assign(chosen.begin(), chosen.end());
    t.constraints.max_cost = planted_cost;
  }
  return t;
}

StructuredTask gen_hamilton(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g;
  for (int i = 0; i < c.n; ++i) g.nodes.push_back(nid(i));
  std::vector<int> chain(c.n);
  std::iota(chain.begin(), chain.end(), 0);
  c.rs.shuffle(chain);
  for (int i = 0; i + 1 < c.n; ++i)
    g.edges.push_back({nid(chain[i]), nid(chain[i + 1]), {}, {}});
  add_extra_edges(g, c, c.n / 2);
  return shell(Family::hamilton, d, seed, std::move(g));
}

StructuredTask gen_mst(GenContext& c, Difficulty d, uint64_t seed) {
  bool dense = d == Difficulty::D1 || d == Difficulty::D2;
  Graph g = tree_base(c);
  add_extra_edges(g, c, dense ? c.n : c.n / 3);
  weight_edges(g, c, 1, 12);
  return shell(Family::mst, d, seed, std::move(g));
}

StructuredTask gen_max_flow(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g;
  for (int i = 0; i < c.n; ++i) g.nodes.push_back(nid(i));
  g.directed = true;
  std::vector<int> order(c.n);
  std::iota(order.begin(), order.end(), 0);
  c.rs.shuffle(order);
  int s = order[0], t_ = order[c.n - 1];

  // Two planted source->sink routes plus random forward arcs.
  auto plant = [&](int stride) {
    int prev = s;
    for (int i = stride; i + 1 < c.n; i += stride) {
      if (!g.has_edge(nid(prev), nid(order[i])))
        g.edges.push_back({nid(prev), nid(order[i]), {}, {}});
      prev = order[i];
    }
    if (!g.has_edge(nid(prev), nid(t_)))
      g.edges.push_back({nid(prev), nid(t_), {}, {}});
  };
  plant(1);
  plant(2);
  int extras = c.n / 2;
  int guard = extras * 20;
  while (extras > 0 && guard-- > 0) {
    int a = static_cast<int>(c.rs.uniform(0, c.n - 1));
    int b = static_cast<int>(c.rs.uniform(0, c.n - 1));
    if (a == b || b == s || a == t_ || g.has_edge(nid(a), nid(b))) continue;
    g.edges.push_back({nid(a), nid(b), {}, {}});
    --extras;
  }
  for (auto& e : g.edges) e.capacity = c.rs.uniform(1, 9);

  StructuredTask t = shell(Family::max_flow, d, seed, std::move(g));
  t.query.source = nid(s);
  t.query.target = nid(t_);
  return t;
}

StructuredTask gen_matching(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g;
  int left = c.n / 2;
  for (int i = 0; i < c.n; ++i) {
    g.nodes.push_back(nid(i));
    g.node_labels[nid(i)] = i < left ? "L" : "R";
  }
  // Planted partial matching keeps instances away from trivial zeros.
  for (int i = 0; i < left && left + i < c.n; ++i)
    if (c.rs.bernoulli(0.8)) g.edges.push_back({nid(i), nid(left + i), {}, {}});
  for (int i = 0; i < left; ++i)
    for (int j = left; j < c.n; ++j)
      if (!g.has_edge(nid(i), nid(j)) && c.rs.bernoulli(0.3))
        g.edges.push_back({nid(i), nid(j), {}, {}});
  return shell(Family::bipartite_matching, d, seed, std::move(g));
}

StructuredTask gen_topo(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g;
  for (int i = 0; i < c.n; ++i) g.nodes.push_back(nid(i));
  g.directed = true;
  std::vector<int> order(c.n);
  std::iota(order.begin(), order.end(), 0);
  c.rs.shuffle(order);
  // Arcs only point forward in the hidden order: acyclic by construction.
  for (int i = 0; i + 1 < c.n; ++i)
    if (c.rs.bernoulli(0.7))
      g.edges.push_back({nid(order[i]), nid(order[i + 1]), {}, {}});
  for (int i = 0; i < c.n; ++i)
    for (int j = i + 2; j < c.n; ++j)
      if (c.rs.bernoulli(0.15))
        g.edges.push_back({nid(order[i]), nid(order[j]), {}, {}});
  if (g.edges.empty())
    g.edges.push_back({nid(order[0]), nid(order[1]), {}, {}});
  return shell(Family::topological_sort, d, seed, std::move(g));
}

StructuredTask gen_scc(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g;
  for (int i = 0; i < c.n; ++i) g.nodes.push_back(nid(i));
  g.directed = true;
  // Partition into blocks; each block of size >= 2 becomes a directed
  // cycle; blocks are linked by forward-only arcs so they stay separate.
  int blocks = static_cast<int>(c.rs.uniform(2, std::min(4, c.n / 2)));
  std::vector<int> order(c.n);
  std::iota(order.begin(), order.end(), 0);
  c.rs.shuffle(order);
  std::vector<std::vector<int>> groups(blocks);
  for (int i = 0; i < c.n; ++i)
    groups[i * blocks / c.n].push_back(order[i]);
  for (const auto& grp : groups)
    if (grp.size() >= 2)
      for (size_t i = 0; i < grp.size(); ++i)
        g.edges.push_back({nid(grp[i]), nid(grp[(i + 1) % grp.size()]), {}, {}});
  for (int bi = 0; bi < blocks; ++bi)
    for (int bj = bi + 1; bj < blocks; ++bj)
      if (c.rs.bernoulli(0.5)) {
        int a = groups[bi][static_cast<size_t>(c.rs.uniform(0, groups[bi].size() - 1))];
        int b = groups[bj][static_cast<size_t>(c.rs.uniform(0, groups[bj].size() - 1))];
        if (!g.has_edge(nid(a), nid(b)))
          g.edges.push_back({nid(a), nid(b), {}, {}});
      }
  return shell(Family::scc, d, seed, std::move(g));
}

StructuredTask gen_bridges(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g;
  for (int i = 0; i < c.n; ++i) g.nodes.push_back(nid(i));
  // Chain of small cycles; the links between consecutive cycles are the
  // planted bridges.
  int pos = 0, prev_anchor = -1;
  while (pos < c.n) {
    int size = std::min<int>(c.n - pos, static_cast<int>(c.rs.uniform(1, 4)));
    if (size >= 3) {
      for (int i = 0; i < size; ++i)
        g.edges.push_back({nid(pos + i), nid(pos + (i + 1) % size), {}, {}});
    } else if (size == 2) {
      g.edges.push_back({nid(pos), nid(pos + 1), {}, {}});
    }
    if (prev_anchor >= 0) g.edges.push_back({nid(prev_anchor), nid(pos), {}, {}});
    prev_anchor = pos;
    pos += size;
  }
  return shell(Family::bridges, d, seed, std::move(g));
}

StructuredTask gen_connectivity(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g;
  for (int i = 0; i < c.n; ++i) g.nodes.push_back(nid(i));
  // Two clusters, each internally connected; joined only half the time.
  int split = c.n / 2;
  auto link_range = [&](int lo, int hi) {
    for (int i = lo + 1; i < hi; ++i) {
      int j = static_cast<int>(c.rs.uniform(lo, i - 1));
      g.edges.push_back({nid(i), nid(j), {}, {}});
    }
  };
  link_range(0, split);
  link_range(split, c.n);
  bool joined = c.rs.bernoulli(0.5);
  if (joined)
    g.edges.push_back({nid(static_cast<int>(c.rs.uniform(0, split - 1))),
                       nid(static_cast<int>(c.rs.uniform(split, c.n - 1))), {}, {}});
  StructuredTask t = shell(Family::connectivity, d, seed, std::move(g));
  t.query.source = nid(static_cast<int>(c.rs.uniform(0, split - 1)));
  t.query.target = nid(static_cast<int>(c.rs.uniform(split, c.n - 1)));
  return t;
}

StructuredTask gen_cycle(GenContext& c, Difficulty d, uint64_t seed) {
  bool want_cycle = c.rs.bernoulli(0.5);
  Graph g;
  if (want_cycle) {
    g = tree_base(c);
    add_extra_edges(g, c, 1 + c.n / 6);  // any extra edge closes a cycle
  } else {
    // Forest: drop a few tree edges.
    g = tree_base(c);
    int drop = static_cast<int>(c.rs.uniform(0, c.n / 4));
    for (int i = 0; i < drop && !g.edges.empty(); ++i)
      g.edges.erase(g.edges.begin() +
                    static_cast<size_t>(c.rs.uniform(0, g.edges.size() - 1)));
  }
  return shell(Family::cycle, d, seed, std::move(g));
}

StructuredTask gen_bipartite_check(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g = tree_base(c);  // trees are bipartite
  bool odd = c.rs.bernoulli(0.5);
  if (odd && c.n >= 3) {
    // Walk two steps from a random node and close the triangle.
    const Edge e0 = g.edges[static_cast<size_t>(c.rs.uniform(0, g.edges.size() - 1))];
    for (const auto& e : g.edges) {
      if (e.u == e0.v && e.v != e0.u && !g.has_edge(e0.u, e.v)) {
        g.edges.push_back({e0.u, e.v, {}, {}});
        break;
      }
      if (e.v == e0.v && e.u != e0.u && !g.has_edge(e0.u, e.u)) {
        g.edges.push_back({e0.u, e.u, {}, {}});
        break;
      }
    }
  }
  return shell(Family::bipartite_check, d, seed, std::move(g));
}

StructuredTask gen_common_neighbors(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g = tree_base(c);
  add_extra_edges(g, c, c.n / 2);
  int a = static_cast<int>(c.rs.uniform(0, c.n - 1));
  int b;
  do {
    b = static_cast<int>(c.rs.uniform(0, c.n - 1));
  } while (b == a);
  // Plant one or two shared neighbours.
  int plant = static_cast<int>(c.rs.uniform(1, 2));
  for (int i = 0; i < plant; ++i) {
    int x = static_cast<int>(c.rs.uniform(0, c.n - 1));
    if (x == a || x == b) continue;
    if (!g.has_edge(nid(a), nid(x))) g.edges.push_back({nid(a), nid(x), {}, {}});
    if (!g.has_edge(nid(b), nid(x))) g.edges.push_back({nid(b), nid(x), {}, {}});
  }
  StructuredTask t = shell(Family::common_neighbors, d, seed, std::move(g));
  t.query.pair = {nid(a), nid(b)};
  return t;
}

StructuredTask gen_triangle(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g = tree_base(c);
  add_extra_edges(g, c, c.n / 2);
  // Plant two triangles so a maximum always exists.
  for (int k = 0; k < 2; ++k) {
    int a = static_cast<int>(c.rs.uniform(0, c.n - 1));
    int b = (a + 1 + static_cast<int>(c.rs.uniform(0, c.n - 2))) % c.n;
    int x = (b + 1 + static_cast<int>(c.rs.uniform(0, c.n - 2))) % c.n;
    if (a == b || b == x || a == x) continue;
    for (auto [u, v] : {std::pair{a, b}, {b, x}, {a, x}})
      if (!g.has_edge(nid(u), nid(v))) g.edges.push_back({nid(u), nid(v), {}, {}});
  }
  for (const auto& node : g.nodes) g.node_weights[node] = c.rs.uniform(1, 9);
  return shell(Family::triangle_max_sum, d, seed, std::move(g));
}

StructuredTask gen_substructure(GenContext& c, Difficulty d, uint64_t seed) {
  bool small = d == Difficulty::D1 || d == Difficulty::D2;
  bool dense = d == Difficulty::D4;
  Graph host;
  for (int i = 0; i < c.n; ++i) host.nodes.push_back(nid(i));
  host.directed = small;  // early tiers use DAG hosts, later ones undirected
  double p = dense ? 0.45 : 0.22;
  for (int i = 0; i < c.n; ++i)
    for (int j = i + 1; j < c.n; ++j)
      if (c.rs.bernoulli(p))
        host.edges.push_back({nid(i), nid(j), {}, {}});  // i<j keeps DAG hosts acyclic

  int psize = small ? 3 : (d == Difficulty::D3 ? 4 : static_cast<int>(c.rs.uniform(5, 6)));
  Graph pat;
  pat.directed = host.directed;
  for (int i = 0; i < psize; ++i) pat.nodes.push_back(pid(i));
  for (int i = 0; i + 1 < psize; ++i)
    pat.edges.push_back({pid(i), pid(i + 1), {}, {}});
  for (int i = 0; i < psize; ++i)
    for (int j = i + 2; j < psize; ++j)
      if (c.rs.bernoulli(0.3)) pat.edges.push_back({pid(i), pid(j), {}, {}});

  // Plant the pattern on random distinct host nodes (arcs keep DAG order).
  std::vector<int> spots(c.n);
  std::iota(spots.begin(), spots.end(), 0);
  c.rs.shuffle(spots);
  spots.resize(psize);
  std::sort(spots.begin(), spots.end());  // preserves direction in DAG hosts
  for (const auto& e : pat.edges) {
    int a = spots[std::stoi(e.u.substr(1))], b = spots[std::stoi(e.v.substr(1))];
    if (!host.has_edge(nid(a), nid(b)) && (!host.directed || a < b))
      host.edges.push_back({nid(a), nid(b), {}, {}});
    else if (host.directed && a > b && !host.has_edge(nid(b), nid(a)))
      host.edges.push_back({nid(b), nid(a), {}, {}});
  }

  StructuredTask t = shell(Family::substructure, d, seed, std::move(host));
  t.query.pattern = std::move(pat);
  return t;
}

StructuredTask gen_gnn(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g = tree_base(c);
  add_extra_edges(g, c, c.n / 4);
  int dim = (d == Difficulty::D1 || d == Difficulty::D2) ? 2 : 3;
  for (const auto& node : g.nodes) {
    std::vector<int64_t> h;
    for (int k = 0; k < dim; ++k) h.push_back(c.rs.uniform(-4, 4));
    g.node_embeddings[node] = h;
  }
  StructuredTask t = shell(Family::gnn_sum, d, seed, std::move(g));
  t.query.rounds = d == Difficulty::D1   ? 1
                   : d == Difficulty::D4 ? 3
                                         : 2;
  t.query.aggregation = "sum";
  return t;
}

StructuredTask gen_coloring(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g;
  for (int i = 0; i < c.n; ++i) g.nodes.push_back(nid(i));
  if (d == Difficulty::D1) {
    // Bipartite instance, budget 2.
    int split = c.n / 2;
    for (int i = 0; i < split; ++i)
      for (int j = split; j < c.n; ++j)
        if (c.rs.bernoulli(0.5)) g.edges.push_back({nid(i), nid(j), {}, {}});
    if (g.edges.empty()) g.edges.push_back({nid(0), nid(split), {}, {}});
    StructuredTask t = shell(Family::coloring, d, seed, std::move(g));
    t.constraints.max_colors = 2;
    return t;
  }
  // Planted 3-partite graph with a slack budget of 4.
  std::vector<int> cls(c.n);
  for (int i = 0; i < c.n; ++i) cls[i] = static_cast<int>(c.rs.uniform(0, 2));
  for (int i = 0; i < c.n; ++i)
    for (int j = i + 1; j < c.n; ++j)
      if (cls[i] != cls[j] && c.rs.bernoulli(0.35))
        g.edges.push_back({nid(i), nid(j), {}, {}});
  if (g.edges.empty()) g.edges.push_back({nid(0), nid(1), {}, {}});
  StructuredTask t = shell(Family::coloring, d, seed, std::move(g));
  t.constraints.max_colors = 4;
  return t;
}

StructuredTask gen_vertex_cover(GenContext& c, Difficulty d, uint64_t seed) {
  Graph g;
  for (int i = 0; i < c.n; ++i) g.nodes.push_back(nid(i));
  // Planted cover: edges only touch the first k nodes.
  int k = std::max(2, c.n / 3);
  for (int i = 0; i < k; ++i) {
    int fan = static_cast<int>(c.rs.uniform(1, 3));
    for (int t2 = 0; t2 < fan; ++t2) {
      int j = static_cast<int>(c.rs.uniform(0, c.n - 1));
      if (j == i || g.has_edge(nid(i), nid(j))) continue;
      g.edges.push_back({nid(i), nid(j), {}, {}});
    }
  }
  if (g.edges.empty()) g.edges.push_back({nid(0), nid(1), {}, {}});
  StructuredTask t = shell(Family::vertex_cover, d, seed, std::move(g));
  t.constraints.max_size = k;  // provisional; tightened by generate()
  return t;
}

StructuredTask build_task(Family f, Difficulty d, uint64_t seed, int attempt) {
  DifficultyProfile p = profile_for(f, d);
  RandomStream rs(derive_seed(seed, "gen_" + to_string(f),
                              static_cast<uint64_t>(d), attempt));
  int n = static_cast<int>(rs.uniform(p.min_nodes, p.max_nodes));
  GenContext c{rs, n, d};
  switch (f) {
    case Family::shortest_path:
    case Family::shortest_path_cost: return gen_path(f, c, d, seed);
    case Family::tsp: return gen_tsp(c, d, seed);
    case Family::hamilton: return gen_hamilton(c, d, seed);
    case Family::mst: return gen_mst(c, d, seed);
    case Family::max_flow: return gen_max_flow(c, d, seed);
    case Family::bipartite_matching: return gen_matching(c, d, seed);
    case Family::topological_sort: return gen_topo(c, d, seed);
    case Family::scc: return gen_scc(c, d, seed);
    case Family::bridges: return gen_bridges(c, d, seed);
    case Family::connectivity: return gen_connectivity(c, d, seed);
    case Family::cycle: return gen_cycle(c, d, seed);
    case Family::bipartite_check: return gen_bipartite_check(c, d, seed);
    case Family::common_neighbors: return gen_common_neighbors(c, d, seed);
    case Family::triangle_max_sum: return gen_triangle(c, d, seed);
    case Family::substructure: return gen_substructure(c, d, seed);
    case Family::gnn_sum: return gen_gnn(c, d, seed);
    case Family::coloring: return gen_coloring(c, d, seed);
    case Family::vertex_cover: return gen_vertex_cover(c, d, seed);
  }
  throw CoreError("unknown task family enum value");
}

}  // namespace

TaskInstance generate(Family f, Difficulty d, uint64_t seed) {
  // Planting plus a bounded deterministic resample loop guarantees a
  // solvable instance; the reference is the solver's answer.
  for (int attempt = 0; attempt < 40; ++attempt) {
    StructuredTask task = build_task(f, d, seed, attempt);
    if (f == Family::vertex_cover) {
      // Tighten the provisional budget to the solved size (D1 is graded
      // exactly; later tiers keep one node of slack).
      SolverResult probe = solve(task);
      if (!probe.solved()) continue;
      int found = static_cast<int>(probe.answer.value.get<int64_t>());
      task.constraints.max_size =
          d == Difficulty::D1 ? found : found + 1;
    }
    SolverResult ref = solve(task);
    if (ref.status != SolveStatus::solved) continue;
    if (!graph_violations(task.graph).empty()) continue;
    TaskInstance inst;
    inst.task = std::move(task);
    inst.statement = verbalize(inst.task);
    inst.reference = std::move(ref.answer);
    inst.reference_status = ref.status;
    return inst;
  }
  throw CoreError("could not generate a feasible " + to_string(f) +
                  " instance at " + to_string(d) + " for seed " +
                  std::to_string(seed));
}

// ---------------------------------------------------------------------------
// Verbalizer

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out;
}

std::string edge_line(const Edge& e, bool directed) {
  std::string s = "  " + e.u + (directed ? " -> " : " -- ") + e.v;
  if (e.weight) s += " with weight " + std::to_string(*e.weight);
  if (e.capacity) s += " with capacity " + std::to_string(*e.capacity);
  return s;
}

void emit_edges(std::ostringstream& out, const Graph& g, const char* header,
                const char* empty_note) {
  if (g.edges.empty()) {
    out << empty_note << "\n";
    return;
  }
  out << header << "\n";
  for (const auto& e : g.edges) out << edge_line(e, g.directed) << "\n";
}

std::string query_sentence(const StructuredTask& t) {
  const Query& q = t.query;
  switch (t.family) {
    case Family::shortest_path:
      return "Query: find a minimum-cost path from " + *q.source + " to " +
             *q.target + " and report its total cost.";
    case Family::shortest_path_cost:
      return "Query: report the minimum possible travel cost from " +
             *q.source + " to " + *q.target + ".";
    case Family::tsp:
      return "Query: find a cheapest tour visiting every node exactly once "
             "and returning to its start.";
    case Family::hamilton:
      return "Query: decide whether a path visiting every node exactly once "
             "exists.";
    case Family::mst:
      return "Query: find a spanning tree of minimum total weight and report "
             "that weight.";
    case Family::max_flow:
      return "Query: compute the maximum flow from " + *q.source + " to " +
             *q.target + " and give a feasible assignment.";
    case Family::bipartite_matching:
      return "Query: find a maximum matching between the L-labelled and "
             "R-labelled nodes.";
    case Family::topological_sort:
      return "Query: produce a topological ordering of the nodes.";
    case Family::scc:
      return "Query: partition the nodes into strongly connected components.";
    case Family::bridges:
      return "Query: list every bridge edge.";
    case Family::connectivity:
      return "Query: decide whether there is a path from " + *q.source +
             " to " + *q.target + ".";
    case Family::cycle:
      return "Query: decide whether the graph contains a cycle.";
    case Family::bipartite_check:
      return "Query: decide whether the graph is bipartite.";
    case Family::common_neighbors:
      return "Query: list the common neighbors of " + q.pair->first + " and " +
             q.pair->second + ".";
    case Family::triangle_max_sum:
      return "Query: find a triangle maximizing the sum of its node weights "
             "and report that sum.";
    case Family::substructure:
      return "Query: decide whether the pattern below appears inside the "
             "graph.";
    case Family::gnn_sum:
      return "Query: run " + std::to_string(*q.rounds) +
             " rounds of sum aggregation, where each round adds to every "
             "node state the sum of its neighbors' states, and report all "
             "final states.";
    case Family::coloring:
      return "Query: assign each node a color so adjacent nodes always "
             "differ.";
    case Family::vertex_cover:
      return "Query: pick a set of nodes that touches every edge.";
  }
  throw CoreError("unknown task family enum value");
}

std::string constraints_sentence(const StructuredTask& t) {
  const ConstraintSet& c = t.constraints;
  std::vector<std::string> parts;
  if (!c.blocked_edges.empty()) {
    std::string s = "these edges are unavailable: ";
    for (size_t i = 0; i < c.blocked_edges.size(); ++i) {
      if (i) s += ", ";
      s += c.blocked_edges[i].first + (t.graph.directed ? "->" : "--") +
           c.blocked_edges[i].second;
    }
    parts.push_back(s);
  }
  if (c.max_cost) parts.push_back("total cost at most " + std::to_string(*c.max_cost));
  if (c.max_colors) parts.push_back("use at most " + std::to_string(*c.max_colors) + " colors");
  if (c.max_size) parts.push_back("choose at most " + std::to_string(*c.max_size) + " nodes");
  if (parts.empty()) return "";
  std::string s = "Constraints: ";
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) s += "; ";
    s += parts[i];
  }
  return s + ".";
}

}  // namespace

std::string verbalize(const StructuredTask& t) {
  std::ostringstream out;
  out << "Task " << to_string(t.family) << " (difficulty "
      << to_string(t.difficulty) << ", instance " << t.seed << ").\n";
  out << "The graph is " << (t.graph.directed ? "directed" : "undirected")
      << " with " << t.graph.nodes.size()
      << (t.graph.nodes.size() == 1 ? " node: " : " nodes: ")
      << join_ids(t.graph.nodes) << ".\n";

  if (!t.graph.node_labels.empty()) {
    out << "Node labels: ";
    bool first = true;
    for (const auto& [id, lab] : t.graph.node_labels) {
      if (!first) out << ", ";
      out << id << "=" << lab;
      first = false;
    }
    out << ".\n";
  }
  if (!t.graph.node_weights.empty()) {
    out << "Node weights: ";
    bool first = true;
    for (const auto& [id, w] : t.graph.node_weights) {
      if (!first) out << ", ";
      out << id << "=" << w;
      first = false;
    }
    out << ".\n";
  }
  if (!t.graph.node_embeddings.empty()) {
    out << "Node embeddings: ";
    bool first = true;
    for (const auto& [id, h] : t.graph.node_embeddings) {
      if (!first) out << ", ";
      out << id << "=[";
      for (size_t k = 0; k < h.size(); ++k) {
        if (k) out << ", ";
        out << h[k];
      }
      out << "]";
      first = false;
    }
    out << ".\n";
  }

  emit_edges(out, t.graph, "Edges (one per line):", "No edges.");
  out << query_sentence(t) << "\n";
  if (t.family == Family::substructure) {
    const Graph& pat = *t.query.pattern;
    out << "Pattern nodes: " << join_ids(pat.nodes) << ".\n";
    emit_edges(out, pat, "Pattern edges (one per line):", "No pattern edges.");
  }
  std::string cs = constraints_sentence(t);
  if (!cs.empty()) out << cs << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Parser (exact inverse of the verbalizer)

namespace {

struct LineReader {
  std::vector<std::string> lines;
  size_t pos = 0;

  explicit LineReader(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  bool done() const { return pos >= lines.size(); }
  const std::string& peek() const {
    static const std::string empty;
    return done() ? empty : lines[pos];
  }
  std::string take() {
    if (done()) throw ParseError(static_cast<int>(pos) + 1, "", "unexpected end of statement");
    return lines[pos++];
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError(static_cast<int>(pos) + 1, peek(), why);
  }
};

// Strip `prefix` from `s` or report the line as unmatched.
std::string expect_prefix(LineReader& r, const std::string& s,
                          const std::string& prefix, const std::string& what) {
  if (s.rfind(prefix, 0) != 0) {
    --r.pos;  // point the error at the offending line
    r.fail("expected " + what);
  }
  return s.substr(prefix.size());
}

std::string strip_dot(LineReader& r, std::string s) {
  if (s.empty() || s.back() != '.') {
    --r.pos;
    r.fail("expected a sentence ending in '.'");
  }
  s.pop_back();
  return s;
}

std::vector<std::string> split(const std::string& s, const std::string& sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t at = s.find(sep, start);
    if (at == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, at - start));
    start = at + sep.size();
  }
}

int64_t to_int(LineReader& r, const std::string& s) {
  try {
    size_t used = 0;
    int64_t v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    --r.pos;
    r.fail("expected an integer, saw '" + s + "'");
  }
}

// "  u -- v [with weight w] [with capacity c]" / "  u -> v ..."
Edge parse_edge_line(LineReader& r, const std::string& line, bool directed) {
  if (line.rfind("  ", 0) != 0) {
    --r.pos;
    r.fail("expected an indented edge line");
  }
  std::string body = line.substr(2);
  std::string sep = directed ? " -> " : " -- ";
  size_t at = body.find(sep);
  if (at == std::string::npos) {
    --r.pos;
    r.fail(directed ? "expected 'u -> v'" : "expected 'u -- v'");
  }
  Edge e;
  e.u = body.substr(0, at);
  std::string rest = body.substr(at + sep.size());
  size_t sp = rest.find(' ');
  e.v = sp == std::string::npos ? rest : rest.substr(0, sp);
  std::string attrs = sp == std::string::npos ? "" : rest.substr(sp);
  size_t w = attrs.find(" with weight ");
  if (w != std::string::npos) {
    std::string tail = attrs.substr(w + 13);
    e.weight = to_int(r, tail.substr(0, tail.find(' ')));
  }
  size_t cp = attrs.find(" with capacity ");
  if (cp != std::string::npos) {
    std::string tail = attrs.substr(cp + 15);
    e.capacity = to_int(r, tail.substr(0, tail.find(' ')));
  }
  return e;
}

void parse_edge_block(LineReader& r, Graph& g, const std::string& header,
                      const std::string& empty_note) {
  std::string line = r.take();
  if (line == empty_note) return;
  if (line != header) {
    --r.pos;
    r.fail("expected '" + header + "' or '" + empty_note + "'");
  }
  while (!r.done() && r.peek().rfind("  ", 0) == 0)
    g.edges.push_back(parse_edge_line(r, r.take(), g.directed));
}

std::string extract_between(LineReader& r, const std::string& s,
                            const std::string& pre, const std::string& post) {
  size_t a = s.find(pre);
  if (a == std::string::npos) {
    --r.pos;
    r.fail("expected '" + pre + "'");
  }
  a += pre.size();
  size_t b = post.empty() ? s.size() : s.find(post, a);
  if (b == std::string::npos) {
    --r.pos;
    r.fail("expected '" + post + "'");
  }
  return s.substr(a, b - a);
}

void parse_query(LineReader& r, StructuredTask& t) {
  std::string line = r.take();
  int query_line_no = static_cast<int>(r.pos);
  if (line.rfind("Query: ", 0) != 0) {
    --r.pos;
    r.fail("expected the query sentence");
  }
  switch (t.family) {
    case Family::shortest_path:
      t.query.source = extract_between(r, line, "path from ", " to ");
      t.query.target = extract_between(r, line, " to ", " and report");
      break;
    case Family::shortest_path_cost:
      t.query.source = extract_between(r, line, "cost from ", " to ");
      t.query.target = strip_dot(r, extract_between(r, line, " to ", ""));
      break;
    case Family::max_flow:
      t.query.source = extract_between(r, line, "flow from ", " to ");
      t.query.target = extract_between(r, line, " to ", " and give");
      break;
    case Family::connectivity:
      t.query.source = extract_between(r, line, "path from ", " to ");
      t.query.target = strip_dot(r, extract_between(r, line, " to ", ""));
      break;
    case Family::common_neighbors: {
      std::string a = extract_between(r, line, "neighbors of ", " and ");
      std::string b = strip_dot(r, extract_between(r, line, " and ", ""));
      t.query.pair = {a, b};
      break;
    }
    case Family::gnn_sum:
      t.query.rounds = static_cast<int>(
          to_int(r, extract_between(r, line, "run ", " rounds")));
      t.query.aggregation = "sum";
      break;
    case Family::substructure: {
      std::string nodes_line = r.take();
      std::string ids = strip_dot(
          r, expect_prefix(r, nodes_line, "Pattern nodes: ", "the pattern node list"));
      Graph pat;
      pat.directed = t.graph.directed;
      for (const auto& id : split(ids, ", ")) pat.nodes.push_back(id);
      parse_edge_block(r, pat, "Pattern edges (one per line):",
                       "No pattern edges.");
      t.query.pattern = std::move(pat);
      break;
    }
    default:
      break;  // fixed sentence, nothing to extract
  }

  // Re-render and compare so any edit inside the sentence is caught.
  if (query_sentence(t) != line)
    throw ParseError(query_line_no, line,
                     "query sentence does not match the template");
}

void parse_constraints(LineReader& r, StructuredTask& t) {
  if (r.done()) return;
  std::string line = r.take();
  std::string body = strip_dot(r, expect_prefix(r, line, "Constraints: ",
                                                "the constraints sentence"));
  for (const auto& clause : split(body, "; ")) {
    if (clause.rfind("these edges are unavailable: ", 0) == 0) {
      std::string list = clause.substr(29);
      std::string sep = t.graph.directed ? "->" : "--";
      for (const auto& item : split(list, ", ")) {
        auto ends = split(item, sep);
        if (ends.size() != 2) {
          --r.pos;
          r.fail("expected blocked edge '" + item + "' as u" + sep + "v");
        }
        t.constraints.blocked_edges.emplace_back(ends[0], ends[1]);
      }
    } else if (clause.rfind("total cost at most ", 0) == 0) {
      t.constraints.max_cost = to_int(r, clause.substr(19));
    } else if (clause.rfind("use at most ", 0) == 0) {
      t.constraints.max_colors = static_cast<int>(
          to_int(r, extract_between(r, clause, "use at most ", " colors")));
    } else if (clause.rfind("choose at most ", 0) == 0) {
      t.constraints.max_size = static_cast<int>(
          to_int(r, extract_between(r, clause, "choose at most ", " nodes")));
    } else {
      --r.pos;
      r.fail("unrecognized constraint clause '" + clause + "'");
    }
  }
}

}  // namespace

StructuredTask reference_parse(const std::string& statement) {
  LineReader r(statement);
  StructuredTask t;

  std::string head = r.take();
  std::string body = expect_prefix(r, head, "Task ", "the task header");
  size_t paren = body.find(" (difficulty ");
  if (paren == std::string::npos) {
    --r.pos;
    r.fail("expected '(difficulty ..., instance ...)'");
  }
  try {
    t.family = family_from_string(body.substr(0, paren));
  } catch (const CoreError&) {
    --r.pos;
    r.fail("unknown task family '" + body.substr(0, paren) + "'");
  }
  std::string rest = body.substr(paren + 13);
  size_t comma = rest.find(", instance ");
  if (comma == std::string::npos || rest.back() != '.') {
    --r.pos;
    r.fail("expected ', instance N).'");
  }
  try {
    t.difficulty = difficulty_from_string(rest.substr(0, comma));
  } catch (const CoreError&) {
    --r.pos;
    r.fail("unknown difficulty '" + rest.substr(0, comma) + "'");
  }
  std::string seed_str = rest.substr(comma + 11);
  seed_str = seed_str.substr(0, seed_str.size() - 2);  // drop ")."
  try {
    t.seed = std::stoull(seed_str);
  } catch (const std::exception&) {
    --r.pos;
    r.fail("expected an unsigned instance seed, saw '" + seed_str + "'");
  }

  std::string gline = r.take();
  std::string grest = expect_prefix(r, gline, "The graph is ", "the graph header");
  if (grest.rfind("directed", 0) == 0) {
    t.graph.directed = true;
    grest = grest.substr(8);
  } else if (grest.rfind("undirected", 0) == 0) {
    t.graph.directed = false;
    grest = grest.substr(10);
  } else {
    --r.pos;
    r.fail("expected 'directed' or 'undirected'");
  }
  std::string ids = strip_dot(r, extract_between(r, grest, ": ", ""));
  for (const auto& id : split(ids, ", ")) t.graph.nodes.push_back(id);

  if (!r.done() && r.peek().rfind("Node labels: ", 0) == 0) {
    std::string rest2 = strip_dot(r, r.take().substr(13));
    for (const auto& item : split(rest2, ", ")) {
      auto kv = split(item, "=");
      if (kv.size() != 2) {
        --r.pos;
        r.fail("expected 'id=label'");
      }
      t.graph.node_labels[kv[0]] = kv[1];
    }
  }
  if (!r.done() && r.peek().rfind("Node weights: ", 0) == 0) {
    std::string rest2 = strip_dot(r, r.take().substr(14));
    for (const auto& item : split(rest2, ", ")) {
      auto kv = split(item, "=");
      if (kv.size() != 2) {
        --r.pos;
        r.fail("expected 'id=weight'");
      }
      t.graph.node_weights[kv[0]] = to_int(r, kv[1]);
    }
  }
  if (!r.done() && r.peek().rfind("Node embeddings: ", 0) == 0) {
    std::string rest2 = strip_dot(r, r.take().substr(17));
    // Items look like "n0=[1, -2]"; the separator between items is ", "
    // as well, so split on "], " boundaries.
    for (auto item : split(rest2, "], ")) {
      if (item.back() != ']') item += "]";
      auto kv = split(item, "=[");
      if (kv.size() != 2 || kv[1].back() != ']') {
        --r.pos;
        r.fail("expected 'id=[a, b, ...]'");
      }
      std::string nums = kv[1].substr(0, kv[1].size() - 1);
      std::vector<int64_t> h;
      for (const auto& x : split(nums, ", ")) h.push_back(to_int(r, x));
      t.graph.node_embeddings[kv[0]] = h;
    }
  }

  parse_edge_block(r, t.graph, "Edges (one per line):", "No edges.");
  parse_query(r, t);
  parse_constraints(r, t);
  if (!r.done()) r.fail("unexpected trailing line");
  return t;
}

// ---------------------------------------------------------------------------
// Curriculum

Curriculum::Curriculum(bool fixed_d4, int promotion_threshold)
    : fixed_(fixed_d4), threshold_(promotion_threshold) {
  if (fixed_) {
    for (auto& f : fams_) f.tier = Difficulty::D4;
  }
}

std::pair<Family, Difficulty> Curriculum::next_episode() {
  Family f = static_cast<Family>(cursor_);
  cursor_ = (cursor_ + 1) % kFamilyCount;
  ++episode_;
  Difficulty d = fixed_ ? Difficulty::D4 : fams_[static_cast<int>(f)].tier;
  int di = static_cast<int>(d);
  if (first_seen_[di] < 0) first_seen_[di] = episode_;
  return {f, d};
}

void Curriculum::record_result(Family f, bool passed) {
  if (fixed_ || !passed) return;  // failures never reset the counter
  FamilyState& st = fams_[static_cast<int>(f)];
  st.passes = std::min(st.passes + 1, threshold_);
  if (st.passes >= threshold_ && st.tier != Difficulty::D4) {
    st.tier = static_cast<Difficulty>(static_cast<int>(st.tier) + 1);
    st.passes = 0;
  }
}

Difficulty Curriculum::tier(Family f) const {
  return fams_[static_cast<int>(f)].tier;
}

int Curriculum::passes_at_tier(Family f) const {
  return fams_[static_cast<int>(f)].passes;
}

int Curriculum::first_seen(Difficulty d) const {
  return first_seen_[static_cast<int>(d)];
}

json Curriculum::state_json() const {
  json fams = json::object();
  for (int i = 0; i < kFamilyCount; ++i) {
    fams[to_string(static_cast<Family>(i))] = {
        {"tier", to_string(fams_[i].tier)}, {"passes", fams_[i].passes}};
  }
  json fs = json::object();
  for (int d = 0; d < 4; ++d)
    fs[to_string(static_cast<Difficulty>(d))] = first_seen_[d];
  return json{{"families", fams},
              {"episodes", episode_},
              {"fixed_d4", fixed_},
              {"first_seen", fs}};
}

}  // namespace graphforge
