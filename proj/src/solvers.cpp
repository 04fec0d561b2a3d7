#include "graphforge/solvers.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>

#include "graphforge/rng.hpp"

namespace graphforge {

namespace {

constexpr int64_t kInf = std::numeric_limits<int64_t>::max() / 4;

// Indexed view over a graph. Nodes are indexed in sorted id order so that
// index-order tie-breaking is lexicographic tie-breaking.
struct View {
  std::vector<std::string> ids;
  std::map<std::string, int> index;
  int n = 0;
  bool directed = false;
  // adj[u] = (v, weight) with weight defaulting to 1; sorted by v.
  std::vector<std::vector<std::pair<int, int64_t>>> adj;   // outgoing
  std::vector<std::vector<std::pair<int, int64_t>>> radj;  // incoming

  const std::string& id(int i) const { return ids[i]; }
  int at(const std::string& s) const {
    auto it = index.find(s);
    if (it == index.end()) throw CoreError("unknown node id '" + s + "'");
    return it->second;
  }
};

View make_view(const Graph& g, const ConstraintSet* c = nullptr) {
  View v;
  v.ids = g.nodes;
  std::sort(v.ids.begin(), v.ids.end());
  v.n = static_cast<int>(v.ids.size());
  v.directed = g.directed;
  for (int i = 0; i < v.n; ++i) v.index[v.ids[i]] = i;
  v.adj.resize(v.n);
  v.radj.resize(v.n);
  for (const auto& e : g.edges) {
    if (c && c->blocks(e.u, e.v, g.directed)) continue;
    int a = v.at(e.u), b = v.at(e.v);
    int64_t w = e.weight.value_or(1);
    v.adj[a].emplace_back(b, w);
    v.radj[b].emplace_back(a, w);
    if (!g.directed) {
      v.adj[b].emplace_back(a, w);
      v.radj[a].emplace_back(b, w);
    }
  }
  for (auto& row : v.adj) std::sort(row.begin(), row.end());
  for (auto& row : v.radj) std::sort(row.begin(), row.end());
  return v;
}

std::vector<std::string> id_path(const View& v, const std::vector<int>& ix) {
  std::vector<std::string> out;
  out.reserve(ix.size());
  for (int i : ix) out.push_back(v.id(i));
  return out;
}

SolverResult ok(Answer a) { return {SolveStatus::solved, std::move(a)}; }

SolverResult infeasible(Family f) {
  Answer a;
  a.family = f;
  a.witness = json{{"infeasible", true}};
  return {SolveStatus::infeasible, std::move(a)};
}

SolverResult out_of_range(Family f) {
  return {SolveStatus::out_of_exact_range, Answer::empty(f)};
}

json sorted_pairs(std::vector<std::pair<std::string, std::string>> pairs,
                  bool directed) {
  if (!directed)
    for (auto& [a, b] : pairs)
      if (b < a) std::swap(a, b);
  std::sort(pairs.begin(), pairs.end());
  json out = json::array();
  for (const auto& [a, b] : pairs) out.push_back(json::array({a, b}));
  return out;
}

// ---------------------------------------------------------------------------
// shortest_path / shortest_path_cost

std::vector<int64_t> dijkstra(const View& v, int src, bool reverse) {
  std::vector<int64_t> dist(v.n, kInf);
  dist[src] = 0;
  using Item = std::pair<int64_t, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  pq.emplace(0, src);
  const auto& adj = reverse ? v.radj : v.adj;
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (auto [w, cost] : adj[u])
      if (d + cost < dist[w]) {
        dist[w] = d + cost;
        pq.emplace(dist[w], w);
      }
  }
  return dist;
}

SolverResult path_impl(const StructuredTask& t) {
  if (!t.query.source || !t.query.target)
    throw CoreError("path query needs source and target");
  View v = make_view(t.graph, &t.constraints);
  int s = v.at(*t.query.source), d = v.at(*t.query.target);
  auto ds = dijkstra(v, s, false);
  if (ds[d] >= kInf) return infeasible(t.family);
  auto dt = dijkstra(v, d, true);
  int64_t total = ds[d];

  // Walk the tight-arc DAG picking the smallest-id next hop each step; this
  // yields the lexicographically smallest minimum-cost path.
  std::vector<int> path = {s};
  int cur = s;
  while (cur != d) {
    int next = -1;
    for (auto [w, cost] : v.adj[cur]) {
      if (ds[cur] + cost == ds[w] && ds[w] + dt[w] == total) {
        next = w;
        break;  // adjacency is sorted, first hit is smallest
      }
    }
    if (next < 0) throw CoreError("shortest-path reconstruction failed");
    path.push_back(next);
    cur = next;
  }

  Answer a;
  a.family = t.family;
  a.value = total;
  if (t.family == Family::shortest_path)
    a.witness = json{{"path", id_path(v, path)}};
  return ok(std::move(a));
}

// ---------------------------------------------------------------------------
// tsp / hamilton

int64_t arc_cost(const std::vector<std::vector<int64_t>>& w, int a, int b) {
  return w[a][b];
}

// Weight matrix honouring blocked edges; kInf marks unusable arcs.
std::vector<std::vector<int64_t>> weight_matrix(const View& v) {
  std::vector<std::vector<int64_t>> w(v.n, std::vector<int64_t>(v.n, kInf));
  for (int u = 0; u < v.n; ++u)
    for (auto [x, c] : v.adj[u]) w[u][x] = std::min(w[u][x], c);
  return w;
}

int64_t tour_cost(const std::vector<std::vector<int64_t>>& w,
                  const std::vector<int>& tour) {
  int64_t c = 0;
  for (size_t i = 0; i < tour.size(); ++i) {
    int64_t step = arc_cost(w, tour[i], tour[(i + 1) % tour.size()]);
    if (step >= kInf) return kInf;
    c += step;
  }
  return c;
}

// Canonical tour form: rotate to start at index 0 (smallest id); undirected
// tours also pick the direction with the smaller second element.
std::vector<int> canonical_tour(std::vector<int> tour, bool directed) {
  auto zero = std::find(tour.begin(), tour.end(), 0);
  std::rotate(tour.begin(), zero, tour.end());
  if (!directed && tour.size() > 2 && tour[1] > tour.back()) {
    std::reverse(tour.begin() + 1, tour.end());
  }
  return tour;
}

SolverResult tsp_held_karp(const StructuredTask& t, const View& v,
                           const std::vector<std::vector<int64_t>>& w) {
  int n = v.n;
  size_t full = size_t{1} << n;
  std::vector<std::vector<int64_t>> dp(full, std::vector<int64_t>(n, kInf));
  std::vector<std::vector<int>> par(full, std::vector<int>(n, -1));
  dp[1][0] = 0;  // fixed start at index 0
  for (size_t mask = 1; mask < full; ++mask) {
    if (!(mask & 1)) continue;
    for (int last = 0; last < n; ++last) {
      int64_t base = dp[mask][last];
      if (base >= kInf) continue;
      for (int nxt = 1; nxt < n; ++nxt) {
        if (mask & (size_t{1} << nxt)) continue;
        int64_t c = arc_cost(w, last, nxt);
        if (c >= kInf) continue;
        size_t m2 = mask | (size_t{1} << nxt);
        if (base + c < dp[m2][nxt]) {
          dp[m2][nxt] = base + c;
          par[m2][nxt] = last;
        }
      }
    }
  }
  int64_t best = kInf;
  int best_last = -1;
  for (int last = 1; last < n; ++last) {
    int64_t close = arc_cost(w, last, 0);
    if (close >= kInf || dp[full - 1][last] >= kInf) continue;
    int64_t total = dp[full - 1][last] + close;
    if (total < best || (total == best && last < best_last)) {
      best = total;
      best_last = last;
    }
  }
  if (best >= kInf) return infeasible(Family::tsp);
  if (t.constraints.max_cost && best > *t.constraints.max_cost)
    return infeasible(Family::tsp);

  std::vector<int> tour;
  size_t mask = full - 1;
  for (int cur = best_last; cur != -1;) {
    tour.push_back(cur);
    int p = par[mask][cur];
    mask &= ~(size_t{1} << cur);
    cur = p;
  }
  std::reverse(tour.begin(), tour.end());
  tour = canonical_tour(std::move(tour), t.graph.directed);

  Answer a;
  a.family = Family::tsp;
  a.value = best;
  a.witness = json{{"tour", id_path(v, tour)}};
  return ok(std::move(a));
}

// Feasibility search for large instances: nearest-neighbour from every
// start, then single-node relocations, then pruned DFS if the budget is
// still unmet.
SolverResult tsp_feasible(const StructuredTask& t, const View& v,
                          const std::vector<std::vector<int64_t>>& w) {
  int n = v.n;
  auto nn_from = [&](int start) {
    std::vector<int> tour = {start};
    std::vector<bool> used(n, false);
    used[start] = true;
    for (int step = 1; step < n; ++step) {
      int cur = tour.back(), best = -1;
      int64_t bw = kInf;
      for (int x = 0; x < n; ++x)
        if (!used[x] && arc_cost(w, cur, x) < bw) {
          bw = arc_cost(w, cur, x);
          best = x;
        }
      if (best < 0) return std::vector<int>{};
      used[best] = true;
      tour.push_back(best);
    }
    if (arc_cost(w, tour.back(), tour.front()) >= kInf) return std::vector<int>{};
    return tour;
  };

  std::vector<int> best_tour;
  int64_t best_cost = kInf;
  for (int s = 0; s < n; ++s) {
    auto tour = nn_from(s);
    if (tour.empty()) continue;
    // Relocation improvement: move one node to a better position.
    bool improved = true;
    int64_t cost = tour_cost(w, tour);
    while (improved) {
      improved = false;
      for (int i = 0; i < n && !improved; ++i)
        for (int j = 0; j < n && !improved; ++j) {
          if (i == j) continue;
          auto cand = tour;
          int node = cand[i];
          cand.erase(cand.begin() + i);
          cand.insert(cand.begin() + j, node);
          int64_t cc = tour_cost(w, cand);
          if (cc < cost) {
            tour = cand;
            cost = cc;
            improved = true;
          }
        }
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_tour = tour;
    }
  }

  int64_t budget = t.constraints.max_cost.value_or(kInf);
  if (best_cost > budget) {
    // Pruned DFS, cheapest arc first; finds a within-budget tour if any.
    std::vector<int> order(n), tour = {0};
    std::vector<bool> used(n, false);
    used[0] = true;
    std::function<bool(int64_t)> dfs = [&](int64_t cost) {
      if (static_cast<int>(tour.size()) == n) {
        int64_t close = arc_cost(w, tour.back(), 0);
        return close < kInf && cost + close <= budget;
      }
      int cur = tour.back();
      std::vector<std::pair<int64_t, int>> nexts;
      for (int x = 0; x < n; ++x)
        if (!used[x] && arc_cost(w, cur, x) < kInf)
          nexts.emplace_back(arc_cost(w, cur, x), x);
      std::sort(nexts.begin(), nexts.end());
      for (auto [c, x] : nexts) {
        if (cost + c > budget) break;
        used[x] = true;
        tour.push_back(x);
        if (dfs(cost + c)) return true;
        tour.pop_back();
        used[x] = false;
      }
      return false;
    };
    if (!dfs(0)) return infeasible(Family::tsp);
    best_tour = tour;
    best_cost = tour_cost(w, best_tour);
  }
  if (best_tour.empty()) return infeasible(Family::tsp);

  Answer a;
  a.family = Family::tsp;
  a.value = best_cost;
  a.witness = json{{"tour", id_path(v, canonical_tour(std::move(best_tour),
                                                      t.graph.directed))}};
  return ok(std::move(a));
}

SolverResult hamilton_impl(const StructuredTask& t) {
  View v = make_view(t.graph, &t.constraints);
  int n = v.n;
  if (n == 0) return infeasible(Family::hamilton);
  std::vector<bool> used(n, false);
  std::vector<int> path;
  std::function<bool()> dfs = [&]() {
    if (static_cast<int>(path.size()) == n) return true;
    int cur = path.back();
    for (auto [x, _] : v.adj[cur]) {
      if (used[x]) continue;
      used[x] = true;
      path.push_back(x);
      if (dfs()) return true;
      path.pop_back();
      used[x] = false;
    }
    return false;
  };
  for (int s = 0; s < n; ++s) {
    used.assign(n, false);
    used[s] = true;
    path = {s};
    if (dfs()) {
      Answer a;
      a.family = Family::hamilton;
      a.value = true;
      a.witness = json{{"path", id_path(v, path)}};
      return ok(std::move(a));
    }
  }
  return infeasible(Family::hamilton);
}

SolverResult routing_impl(const StructuredTask& t) {
  if (t.family == Family::hamilton) return hamilton_impl(t);
  View v = make_view(t.graph, &t.constraints);
  if (v.n == 0) return infeasible(Family::tsp);
  if (v.n > 64) return out_of_range(Family::tsp);
  auto w = weight_matrix(v);
  if (v.n <= kTspExactCap) return tsp_held_karp(t, v, w);
  return tsp_feasible(t, v, w);
}

// ---------------------------------------------------------------------------
// max_flow / bipartite_matching / mst

SolverResult max_flow_impl(const StructuredTask& t) {
  if (!t.query.source || !t.query.target)
    throw CoreError("max_flow query needs source and target");
  View v = make_view(t.graph);
  int s = v.at(*t.query.source), d = v.at(*t.query.target);

  // Residual capacities on node pairs; parallel arcs collapse additively.
  std::vector<std::vector<int64_t>> cap(v.n, std::vector<int64_t>(v.n, 0));
  for (const auto& e : t.graph.edges) {
    int a = v.at(e.u), b = v.at(e.v);
    int64_t c = e.capacity.value_or(1);
    cap[a][b] += c;
    if (!t.graph.directed) cap[b][a] += c;
  }
  auto base = cap;

  int64_t flow = 0;
  while (true) {
    std::vector<int> prev(v.n, -1);
    prev[s] = s;
    std::queue<int> q;
    q.push(s);
    while (!q.empty() && prev[d] == -1) {
      int u = q.front();
      q.pop();
      for (int x = 0; x < v.n; ++x)
        if (prev[x] == -1 && cap[u][x] > 0) {
          prev[x] = u;
          q.push(x);
        }
    }
    if (prev[d] == -1) break;
    int64_t aug = kInf;
    for (int x = d; x != s; x = prev[x]) aug = std::min(aug, cap[prev[x]][x]);
    for (int x = d; x != s; x = prev[x]) {
      cap[prev[x]][x] -= aug;
      cap[x][prev[x]] += aug;
    }
    flow += aug;
  }

  json assignments = json::array();
  for (int a = 0; a < v.n; ++a)
    for (int b = a + 1; b < v.n; ++b) {
      // Net flow between the pair, reported in its positive direction.
      int64_t net_ab = base[a][b] - cap[a][b];
      if (net_ab > 0)
        assignments.push_back(json{{"u", v.id(a)}, {"v", v.id(b)}, {"flow", net_ab}});
      else if (net_ab < 0)
        assignments.push_back(json{{"u", v.id(b)}, {"v", v.id(a)}, {"flow", -net_ab}});
    }

  Answer a;
  a.family = Family::max_flow;
  a.value = flow;
  a.witness = json{{"flow", assignments}};
  return ok(std::move(a));
}

SolverResult matching_impl(const StructuredTask& t) {
  View v = make_view(t.graph);
  // Left part = label "L"; matching proceeds over left nodes in id order.
  std::vector<int> left;
  for (int i = 0; i < v.n; ++i) {
    auto it = t.graph.node_labels.find(v.id(i));
    if (it == t.graph.node_labels.end())
      throw CoreError("bipartite_matching needs node labels");
    if (it->second == "L") left.push_back(i);
  }
  std::vector<int> match(v.n, -1);
  std::function<bool(int, std::vector<bool>&)> augment =
      [&](int u, std::vector<bool>& seen) {
        for (auto [x, _] : v.adj[u]) {
          if (seen[x]) continue;
          seen[x] = true;
          if (match[x] == -1 || augment(match[x], seen)) {
            match[x] = u;
            match[u] = x;
            return true;
          }
        }
        return false;
      };
  int size = 0;
  for (int u : left) {
    std::vector<bool> seen(v.n, false);
    if (augment(u, seen)) ++size;
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int u : left)
    if (match[u] != -1) pairs.emplace_back(v.id(u), v.id(match[u]));
  std::sort(pairs.begin(), pairs.end());
  json jm = json::array();
  for (const auto& [a, b] : pairs) jm.push_back(json::array({a, b}));

  Answer a;
  a.family = Family::bipartite_matching;
  a.value = size;
  a.witness = json{{"matching", jm}};
  return ok(std::move(a));
}

struct Dsu {
  std::vector<int> p;
  explicit Dsu(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    p[b] = a;
    return true;
  }
};

SolverResult mst_impl(const StructuredTask& t) {
  View v = make_view(t.graph);
  struct Item {
    int64_t w;
    std::string u, x;
  };
  std::vector<Item> items;
  for (const auto& e : t.graph.edges) {
    if (!e.weight) throw CoreError("mst needs edge weights");
    std::string a = e.u, b = e.v;
    if (b < a) std::swap(a, b);
    items.push_back({*e.weight, a, b});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return std::tie(a.w, a.u, a.x) < std::tie(b.w, b.u, b.x);
  });
  Dsu dsu(v.n);
  int64_t total = 0;
  std::vector<std::pair<std::string, std::string>> chosen;
  for (const auto& it : items)
    if (dsu.unite(v.at(it.u), v.at(it.x))) {
      total += it.w;
      chosen.emplace_back(it.u, it.x);
    }
  if (static_cast<int>(chosen.size()) != v.n - 1)
    return infeasible(Family::mst);

  Answer a;
  a.family = Family::mst;
  a.value = total;
  a.witness = json{{"tree_edges", sorted_pairs(std::move(chosen), false)}};
  return ok(std::move(a));
}

// ---------------------------------------------------------------------------
// topological_sort / scc / bridges

SolverResult topo_impl(const StructuredTask& t) {
  View v = make_view(t.graph);
  std::vector<int> indeg(v.n, 0);
  for (int u = 0; u < v.n; ++u)
    for (auto [x, _] : v.adj[u]) ++indeg[x];
  // Min-heap on node index = lexicographically smallest valid order.
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int i = 0; i < v.n; ++i)
    if (indeg[i] == 0) ready.push(i);
  std::vector<int> order;
  while (!ready.empty()) {
    int u = ready.top();
    ready.pop();
    order.push_back(u);
    for (auto [x, _] : v.adj[u])
      if (--indeg[x] == 0) ready.push(x);
  }
  if (static_cast<int>(order.size()) != v.n)
    return infeasible(Family::topological_sort);
  Answer a;
  a.family = Family::topological_sort;
  a.witness = json{{"order", id_path(v, order)}};
  return ok(std::move(a));
}

SolverResult scc_impl(const StructuredTask& t) {
  View v = make_view(t.graph);
  int n = v.n, timer = 0;
  std::vector<int> low(n, -1), num(n, -1), comp(n, -1), stk;
  std::vector<bool> on(n, false);
  int ncomp = 0;
  std::function<void(int)> dfs = [&](int u) {
    low[u] = num[u] = timer++;
    stk.push_back(u);
    on[u] = true;
    for (auto [x, _] : v.adj[u]) {
      if (num[x] == -1) {
        dfs(x);
        low[u] = std::min(low[u], low[x]);
      } else if (on[x]) {
        low[u] = std::min(low[u], num[x]);
      }
    }
    if (low[u] == num[u]) {
      while (true) {
        int x = stk.back();
        stk.pop_back();
        on[x] = false;
        comp[x] = ncomp;
        if (x == u) break;
      }
      ++ncomp;
    }
  };
  for (int i = 0; i < n; ++i)
    if (num[i] == -1) dfs(i);

  std::vector<std::vector<std::string>> groups(ncomp);
  for (int i = 0; i < n; ++i) groups[comp[i]].push_back(v.id(i));
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end());

  Answer a;
  a.family = Family::scc;
  a.value = ncomp;
  a.witness = json{{"components", groups}};
  return ok(std::move(a));
}

SolverResult bridges_impl(const StructuredTask& t) {
  View v = make_view(t.graph);
  int n = v.n, timer = 0;
  std::vector<int> num(n, -1), low(n, 0);
  std::vector<std::pair<std::string, std::string>> found;
  std::function<void(int, int)> dfs = [&](int u, int parent_edge) {
    num[u] = low[u] = timer++;
    int skipped_parallel = 0;
    for (auto [x, _] : v.adj[u]) {
      if (x == parent_edge && skipped_parallel == 0) {
        ++skipped_parallel;  // simple graphs: skip the tree arc back once
        continue;
      }
      if (num[x] == -1) {
        dfs(x, u);
        low[u] = std::min(low[u], low[x]);
        if (low[x] > num[u]) found.emplace_back(v.id(u), v.id(x));
      } else {
        low[u] = std::min(low[u], num[x]);
      }
    }
  };
  for (int i = 0; i < n; ++i)
    if (num[i] == -1) dfs(i, -1);

  Answer a;
  a.family = Family::bridges;
  a.value = static_cast<int64_t>(found.size());
  a.witness = json{{"bridges", sorted_pairs(std::move(found), false)}};
  return ok(std::move(a));
}

// ---------------------------------------------------------------------------
// connectivity / cycle / bipartite_check

SolverResult connectivity_impl(const StructuredTask& t) {
  if (!t.query.source || !t.query.target)
    throw CoreError("connectivity query needs source and target");
  View v = make_view(t.graph);
  int s = v.at(*t.query.source), d = v.at(*t.query.target);
  std::vector<int> prev(v.n, -1);
  prev[s] = s;
  std::queue<int> q;
  q.push(s);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (auto [x, _] : v.adj[u])
      if (prev[x] == -1) {
        prev[x] = u;
        q.push(x);
      }
  }
  Answer a;
  a.family = Family::connectivity;
  if (prev[d] != -1) {
    std::vector<int> path;
    for (int x = d; x != s; x = prev[x]) path.push_back(x);
    path.push_back(s);
    std::reverse(path.begin(), path.end());
    a.value = true;
    a.witness = json{{"path", id_path(v, path)}};
  } else {
    std::vector<std::string> side;
    for (int i = 0; i < v.n; ++i)
      if (prev[i] != -1) side.push_back(v.id(i));
    a.value = false;
    a.witness = json{{"component", side}};
  }
  return ok(std::move(a));
}

SolverResult cycle_impl(const StructuredTask& t) {
  View v = make_view(t.graph);
  Answer a;
  a.family = Family::cycle;
  std::vector<int> cyc;

  if (t.graph.directed) {
    // Colored DFS; a back arc closes the cycle.
    std::vector<int> state(v.n, 0), par(v.n, -1);
    std::function<bool(int)> dfs = [&](int u) {
      state[u] = 1;
      for (auto [x, _] : v.adj[u]) {
        if (state[x] == 0) {
          par[x] = u;
          if (dfs(x)) return true;
        } else if (state[x] == 1) {
          cyc = {x};
          for (int y = u; y != x; y = par[y]) cyc.push_back(y);
          std::reverse(cyc.begin() + 1, cyc.end());
          cyc.push_back(x);
          return true;
        }
      }
      state[u] = 2;
      return false;
    };
    for (int i = 0; i < v.n && cyc.empty(); ++i)
      if (state[i] == 0) dfs(i);
  } else {
    std::vector<int> par(v.n, -1), seen(v.n, 0);
    std::function<bool(int, int)> dfs = [&](int u, int pe) {
      seen[u] = 1;
      int skipped = 0;
      for (auto [x, _] : v.adj[u]) {
        if (x == pe && skipped == 0) {
          ++skipped;
          continue;
        }
        if (!seen[x]) {
          par[x] = u;
          if (dfs(x, u)) return true;
        } else {
          cyc = {x};
          for (int y = u; y != x; y = par[y]) cyc.push_back(y);
          std::reverse(cyc.begin() + 1, cyc.end());
          cyc.push_back(x);
          return true;
        }
      }
      return false;
    };
    for (int i = 0; i < v.n && cyc.empty(); ++i)
      if (!seen[i]) dfs(i, -1);
  }

  if (!cyc.empty()) {
    a.value = true;
    a.witness = json{{"cycle", id_path(v, cyc)}};
  } else {
    a.value = false;
  }
  return ok(std::move(a));
}

SolverResult bipartite_impl(const StructuredTask& t) {
  View v = make_view(t.graph);
  std::vector<int> color(v.n, -1), par(v.n, -1);
  Answer a;
  a.family = Family::bipartite_check;
  for (int s = 0; s < v.n; ++s) {
    if (color[s] != -1) continue;
    color[s] = 0;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (auto [x, _] : v.adj[u]) {
        if (color[x] == -1) {
          color[x] = 1 - color[u];
          par[x] = u;
          q.push(x);
        } else if (color[x] == color[u]) {
          // Odd cycle: join the two BFS-tree paths at their meeting point.
          std::vector<int> pu = {u}, px = {x};
          for (int y = u; y != -1; y = par[y])
            if (y != u) pu.push_back(y);
          for (int y = x; y != -1; y = par[y])
            if (y != x) px.push_back(y);
          int m = -1;
          for (int yu : pu)
            for (int yx : px)
              if (yu == yx && m == -1) m = yu;
          std::vector<int> odd;
          for (int y : pu) {
            odd.push_back(y);
            if (y == m) break;
          }
          std::vector<int> half;
          for (int y : px) {
            if (y == m) break;
            half.push_back(y);
          }
          std::reverse(half.begin(), half.end());
          for (int y : half) odd.push_back(y);
          odd.push_back(u);
          std::reverse(odd.begin(), odd.end());
          a.value = false;
          a.witness = json{{"odd_cycle", id_path(v, odd)}};
          return ok(std::move(a));
        }
      }
    }
  }
  json jc = json::object();
  for (int i = 0; i < v.n; ++i) jc[v.id(i)] = color[i];
  a.value = true;
  a.witness = json{{"coloring", jc}};
  return ok(std::move(a));
}

// ---------------------------------------------------------------------------
// common_neighbors / triangle_max_sum

SolverResult common_neighbors_impl(const StructuredTask& t) {
  if (!t.query.pair) throw CoreError("common_neighbors query needs a pair");
  View v = make_view(t.graph);
  int a = v.at(t.query.pair->first), b = v.at(t.query.pair->second);
  std::set<int> na, nb;
  for (auto [x, _] : v.adj[a]) na.insert(x);
  for (auto [x, _] : v.adj[b]) nb.insert(x);
  std::vector<std::string> common;
  for (int x : na)
    if (nb.count(x) && x != a && x != b) common.push_back(v.id(x));
  std::sort(common.begin(), common.end());

  Answer ans;
  ans.family = Family::common_neighbors;
  ans.value = static_cast<int64_t>(common.size());
  ans.witness = json{{"nodes", common}};
  return ok(std::move(ans));
}

SolverResult triangle_impl(const StructuredTask& t) {
  View v = make_view(t.graph);
  std::vector<std::vector<bool>> adj(v.n, std::vector<bool>(v.n, false));
  for (int u = 0; u < v.n; ++u)
    for (auto [x, _] : v.adj[u]) adj[u][x] = true;
  auto weight = [&](int i) {
    auto it = t.graph.node_weights.find(v.id(i));
    if (it == t.graph.node_weights.end())
      throw CoreError("triangle_max_sum needs node weights");
    return it->second;
  };
  int64_t best = kInf;
  std::array<int, 3> tri = {-1, -1, -1};
  bool found = false;
  for (int i = 0; i < v.n; ++i)
    for (int j = i + 1; j < v.n; ++j) {
      if (!adj[i][j]) continue;
      for (int k = j + 1; k < v.n; ++k) {
        if (!adj[i][k] || !adj[j][k]) continue;
        int64_t s = weight(i) + weight(j) + weight(k);
        if (!found || s > best) {
          best = s;
          tri = {i, j, k};
          found = true;
        }
      }
    }
  if (!found) return infeasible(Family::triangle_max_sum);
  Answer a;
  a.family = Family::triangle_max_sum;
  a.value = best;
  a.witness = json{{"nodes", std::vector<std::string>{v.id(tri[0]), v.id(tri[1]),
                                                      v.id(tri[2])}}};
  return ok(std::move(a));
}

// ---------------------------------------------------------------------------
// substructure

SolverResult pattern_impl(const StructuredTask& t) {
  if (!t.query.pattern) throw CoreError("substructure query needs a pattern");
  const Graph& pat = *t.query.pattern;
  if (static_cast<int>(pat.nodes.size()) > kPatternExactCap)
    return out_of_range(Family::substructure);
  View host = make_view(t.graph);
  View pv = make_view(pat);

  // Order pattern nodes by degree (desc) to prune early.
  std::vector<int> order(pv.n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    size_t da = pv.adj[a].size() + pv.radj[a].size();
    size_t db = pv.adj[b].size() + pv.radj[b].size();
    return da != db ? da > db : a < b;
  });

  std::vector<int> map(pv.n, -1);
  std::vector<bool> used(host.n, false);
  std::vector<std::vector<bool>> hadj(host.n, std::vector<bool>(host.n, false));
  for (int u = 0; u < host.n; ++u)
    for (auto [x, _] : host.adj[u]) hadj[u][x] = true;

  std::function<bool(size_t)> dfs = [&](size_t k) {
    if (k == order.size()) return true;
    int p = order[k];
    for (int h = 0; h < host.n; ++h) {
      if (used[h]) continue;
      if (host.adj[h].size() < pv.adj[p].size()) continue;
      if (host.radj[h].size() < pv.radj[p].size()) continue;
      bool fits = true;
      for (size_t k2 = 0; k2 < k && fits; ++k2) {
        int p2 = order[k2], h2 = map[p2];
        bool fwd = false, bwd = false;
        for (auto [x, _] : pv.adj[p])
          if (x == p2) fwd = true;
        for (auto [x, _] : pv.adj[p2])
          if (x == p) bwd = true;
        if (fwd && !hadj[h][h2]) fits = false;
        if (bwd && !hadj[h2][h]) fits = false;
      }
      if (!fits) continue;
      map[p] = h;
      used[h] = true;
      if (dfs(k + 1)) return true;
      map[p] = -1;
      used[h] = false;
    }
    return false;
  };

  Answer a;
  a.family = Family::substructure;
  if (pv.n == 0 || dfs(0)) {
    json jm = json::object();
    for (int p = 0; p < pv.n; ++p)
      if (map[p] >= 0) jm[pv.id(p)] = host.id(map[p]);
    a.value = true;
    a.witness = json{{"mapping", jm}};
  } else {
    a.value = false;
  }
  return ok(std::move(a));
}

// ---------------------------------------------------------------------------
// gnn_sum

SolverResult message_passing_impl(const StructuredTask& t) {
  if (!t.query.rounds) throw CoreError("gnn_sum query needs rounds");
  if (t.query.aggregation.value_or("sum") != "sum")
    throw CoreError("unsupported aggregation '" +
                    t.query.aggregation.value_or("") + "'");
  View v = make_view(t.graph);
  size_t dim = 0;
  std::vector<std::vector<int64_t>> h(v.n);
  for (int i = 0; i < v.n; ++i) {
    auto it = t.graph.node_embeddings.find(v.id(i));
    if (it == t.graph.node_embeddings.end())
      throw CoreError("gnn_sum needs node embeddings");
    h[i] = it->second;
    if (i == 0) dim = h[i].size();
    if (h[i].size() != dim)
      throw CoreError("gnn_sum embeddings must share one dimension");
  }
  for (int r = 0; r < *t.query.rounds; ++r) {
    std::vector<std::vector<int64_t>> next = h;
    for (int u = 0; u < v.n; ++u)
      for (auto [x, _] : v.radj[u])  // messages flow along arcs into u
        for (size_t d = 0; d < dim; ++d) next[u][d] += h[x][d];
    h = std::move(next);
  }
  json states = json::object();
  for (int i = 0; i < v.n; ++i) states[v.id(i)] = h[i];
  Answer a;
  a.family = Family::gnn_sum;
  a.witness = json{{"states", states}};
  return ok(std::move(a));
}

// ---------------------------------------------------------------------------
// coloring / vertex_cover

SolverResult coloring_impl(const StructuredTask& t) {
  if (!t.constraints.max_colors)
    throw CoreError("coloring needs constraints.max_colors");
  int cap = *t.constraints.max_colors;
  View v = make_view(t.graph);
  std::vector<std::vector<int>> adj(v.n);
  for (int u = 0; u < v.n; ++u)
    for (auto [x, _] : v.adj[u]) adj[u].push_back(x);

  auto greedy = [&](const std::vector<int>& order) {
    std::vector<int> color(v.n, -1);
    int used = 0;
    for (int u : order) {
      std::vector<bool> taken(v.n + 1, false);
      for (int x : adj[u])
        if (color[x] >= 0) taken[color[x]] = true;
      int c = 0;
      while (taken[c]) ++c;
      color[u] = c;
      used = std::max(used, c + 1);
    }
    return std::make_pair(color, used);
  };

  std::vector<int> color;
  int used = v.n + 1;
  if (v.n <= kCoveringExactCap) {
    // Exact: try k = 1..cap with backtracking; first success is chromatic
    // within the cap.
    for (int k = 1, done = 0; k <= cap && !done; ++k) {
      std::vector<int> c(v.n, -1);
      std::function<bool(int)> assign = [&](int u) {
        if (u == v.n) return true;
        int limit = std::min(k, u + 1);  // symmetry break: new color = max+1
        for (int col = 0; col < limit; ++col) {
          bool okc = true;
          for (int x : adj[u])
            if (c[x] == col) okc = false;
          if (!okc) continue;
          c[u] = col;
          if (assign(u + 1)) return true;
          c[u] = -1;
        }
        return false;
      };
      if (assign(0)) {
        color = c;
        used = k;
        done = 1;
      }
    }
    if (color.empty()) return infeasible(Family::coloring);
  } else {
    std::vector<int> order(v.n);
    std::iota(order.begin(), order.end(), 0);
    std::tie(color, used) = greedy(order);
    RandomStream rs(derive_seed(t.seed, "coloring_repair"));
    for (int attempt = 0; attempt < 200 && used > cap; ++attempt) {
      rs.shuffle(order);
      auto [c2, u2] = greedy(order);
      if (u2 < used) {
        color = c2;
        used = u2;
      }
    }
    if (used > cap) return infeasible(Family::coloring);
  }

  json jc = json::object();
  for (int i = 0; i < v.n; ++i) jc[v.id(i)] = color[i];
  Answer a;
  a.family = Family::coloring;
  a.value = used;
  a.witness = json{{"colors", jc}};
  return ok(std::move(a));
}

SolverResult vertex_cover_impl(const StructuredTask& t) {
  if (!t.constraints.max_size)
    throw CoreError("vertex_cover needs constraints.max_size");
  int cap = *t.constraints.max_size;
  View v = make_view(t.graph);
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : t.graph.edges) {
    int a = v.at(e.u), b = v.at(e.v);
    edges.emplace_back(std::min(a, b), std::max(a, b));
  }

  auto covers = [&](const std::vector<bool>& in) {
    for (auto [a, b] : edges)
      if (!in[a] && !in[b]) return false;
    return true;
  };

  std::vector<bool> best;
  if (v.n <= kCoveringExactCap) {
    // Exhaustive: smallest cover, lexicographically smallest among ties.
    int best_sz = v.n + 1;
    for (uint32_t mask = 0; mask < (1u << v.n); ++mask) {
      int sz = __builtin_popcount(mask);
      if (sz >= best_sz) continue;
      std::vector<bool> in(v.n, false);
      for (int i = 0; i < v.n; ++i)
        if (mask & (1u << i)) in[i] = true;
      if (covers(in)) {
        best = in;
        best_sz = sz;
      }
    }
    if (best_sz > cap) return infeasible(Family::vertex_cover);
  } else {
    // Greedy max-degree, then branch and bound on the budget if too big.
    std::vector<bool> in(v.n, false);
    auto remaining = edges;
    while (!remaining.empty()) {
      std::vector<int> deg(v.n, 0);
      for (auto [a, b] : remaining) {
        ++deg[a];
        ++deg[b];
      }
      int pick = std::max_element(deg.begin(), deg.end()) - deg.begin();
      in[pick] = true;
      std::erase_if(remaining, [&](auto& e) { return e.first == pick || e.second == pick; });
    }
    if (std::count(in.begin(), in.end(), true) <= cap) {
      best = in;
    } else {
      // Branch on an uncovered edge: one endpoint must join the cover.
      std::vector<bool> cur(v.n, false);
      std::function<bool(int)> bb = [&](int budget) {
        std::pair<int, int> open{-1, -1};
        for (auto [a, b] : edges)
          if (!cur[a] && !cur[b]) {
            open = {a, b};
            break;
          }
        if (open.first == -1) return true;
        if (budget == 0) return false;
        for (int pick : {open.first, open.second}) {
          cur[pick] = true;
          if (bb(budget - 1)) return true;
          cur[pick] = false;
        }
        return false;
      };
      if (!bb(cap)) return infeasible(Family::vertex_cover);
      best = cur;
    }
  }

  std::vector<std::string> cover;
  for (int i = 0; i < v.n; ++i)
    if (best[i]) cover.push_back(v.id(i));
  std::sort(cover.begin(), cover.end());
  Answer a;
  a.family = Family::vertex_cover;
  a.value = static_cast<int64_t>(cover.size());
  a.witness = json{{"cover", cover}};
  return ok(std::move(a));
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::solved: return "solved";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::out_of_exact_range: return "out_of_exact_range";
  }
  return "?";
}

SolverResult solve_path(const StructuredTask& t) { return path_impl(t); }
SolverResult solve_routing(const StructuredTask& t) { return routing_impl(t); }
SolverResult solve_flow_matching(const StructuredTask& t) {
  switch (t.family) {
    case Family::max_flow: return max_flow_impl(t);
    case Family::bipartite_matching: return matching_impl(t);
    default: return mst_impl(t);
  }
}
SolverResult solve_order_decomp(const StructuredTask& t) {
  switch (t.family) {
    case Family::topological_sort: return topo_impl(t);
    case Family::scc: return scc_impl(t);
    default: return bridges_impl(t);
  }
}
SolverResult solve_checks(const StructuredTask& t) {
  switch (t.family) {
    case Family::connectivity: return connectivity_impl(t);
    case Family::cycle: return cycle_impl(t);
    default: return bipartite_impl(t);
  }
}
SolverResult solve_local(const StructuredTask& t) {
  return t.family == Family::common_neighbors ? common_neighbors_impl(t)
                                              : triangle_impl(t);
}
SolverResult solve_pattern(const StructuredTask& t) { return pattern_impl(t); }
SolverResult solve_message_passing(const StructuredTask& t) {
  return message_passing_impl(t);
}
SolverResult solve_covering(const StructuredTask& t) {
  return t.family == Family::coloring ? coloring_impl(t) : vertex_cover_impl(t);
}

SolverResult solve(const StructuredTask& t) {
  switch (t.family) {
    case Family::shortest_path:
    case Family::shortest_path_cost: return solve_path(t);
    case Family::tsp:
    case Family::hamilton: return solve_routing(t);
    case Family::max_flow:
    case Family::bipartite_matching:
    case Family::mst: return solve_flow_matching(t);
    case Family::topological_sort:
    case Family::scc:
    case Family::bridges: return solve_order_decomp(t);
    case Family::connectivity:
    case Family::cycle:
    case Family::bipartite_check: return solve_checks(t);
    case Family::common_neighbors:
    case Family::triangle_max_sum: return solve_local(t);
    case Family::substructure: return solve_pattern(t);
    case Family::gnn_sum: return solve_message_passing(t);
    case Family::coloring:
    case Family::vertex_cover: return solve_covering(t);
  }
  throw CoreError("unknown task family enum value");
}

}  // namespace graphforge
