#pragma once

#include "core.hpp"

namespace graphforge {

enum class SolveStatus { solved, infeasible, out_of_exact_range };

std::string to_string(SolveStatus s);

struct SolverResult {
  SolveStatus status = SolveStatus::solved;
  Answer answer;

  bool solved() const { return status == SolveStatus::solved; }
};

// Reference solvers. All are pure and deterministic: ties are broken
// lexicographically on node ids, so the same task always yields the same
// answer bytes. Exact methods are used while the instance fits the exact
// caps below; past them the solver degrades to feasibility search where the
// family allows it. An infeasible instance reports status=infeasible with
// witness {"infeasible": true}.

inline constexpr int kTspExactCap = 15;       // Held-Karp subset DP limit
inline constexpr int kCoveringExactCap = 12;  // exhaustive coloring / cover limit
inline constexpr int kPatternExactCap = 6;    // pattern size limit

/// shortest_path, shortest_path_cost: Dijkstra; the witness path is the
/// lexicographically smallest among minimum-cost paths.
SolverResult solve_path(const StructuredTask& t);

/// tsp: Held-Karp DP up to kTspExactCap nodes, nearest-neighbour plus
/// improvement search past it (budget-feasible tour). hamilton: pruned
/// backtracking for an open path visiting every node once.
SolverResult solve_routing(const StructuredTask& t);

/// max_flow: Edmonds-Karp. bipartite_matching: augmenting paths.
/// mst: Kruskal on (weight, u, v) order.
SolverResult solve_flow_matching(const StructuredTask& t);

/// topological_sort: Kahn with a lexicographic frontier. scc: Tarjan with
/// canonically ordered components. bridges: lowlink.
SolverResult solve_order_decomp(const StructuredTask& t);

/// connectivity, cycle, bipartite_check: boolean answers with certificates
/// (path / reachable component, cycle node sequence, 2-coloring / odd cycle).
SolverResult solve_checks(const StructuredTask& t);

/// common_neighbors: sorted intersection. triangle_max_sum: exhaustive
/// triangle scan, maximum node-weight sum.
SolverResult solve_local(const StructuredTask& t);

/// substructure: backtracking subgraph monomorphism with degree pruning.
SolverResult solve_pattern(const StructuredTask& t);

/// gnn_sum: `rounds` iterations of h'[v] = h[v] + sum of neighbour states.
SolverResult solve_message_passing(const StructuredTask& t);

/// coloring: exhaustive search up to kCoveringExactCap nodes, greedy with
/// seeded repair passes past it. vertex_cover: branch and bound within the
/// size budget, greedy first.
SolverResult solve_covering(const StructuredTask& t);

/// Family dispatch over the solvers above.
SolverResult solve(const StructuredTask& t);

}  // namespace graphforge
