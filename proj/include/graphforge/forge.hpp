#pragma once

#include <array>
#include <map>
#include <utility>

#include "core.hpp"
#include "solvers.hpp"

namespace graphforge {

/// Thrown when a statement does not match the task templates. Carries the
/// first line that failed to parse.
class ParseError : public CoreError {
 public:
  ParseError(int line_no, const std::string& line, const std::string& why)
      : CoreError("line " + std::to_string(line_no) + ": " + why + ": '" +
                  line + "'"),
        line_no(line_no),
        line(line) {}
  int line_no;
  std::string line;
};

/// Node-count band and grading strictness for one family at one tier.
/// Bands are inclusive and grow monotonically with the tier.
struct DifficultyProfile {
  int min_nodes = 4;
  int max_nodes = 8;
  Exactness strictness = Exactness::exact;
};

DifficultyProfile profile_for(Family f, Difficulty d);

/// Grading strictness the verifier applies at this family/tier.
Exactness effective_exactness(Family f, Difficulty d);

/// Structural regime tag of generated instances (closed vocabulary, e.g.
/// "sparse_directed", "chain_planted", "feasible_large"). Deterministic per
/// family and tier.
std::string regime_for(Family f, Difficulty d);

/// Constraint tag: "none" or a '+'-joined list such as
/// "blocked_edges+max_cost". Deterministic per family and tier.
std::string constraint_tag_for(Family f, Difficulty d);

/// A generated episode task: the structured instance, its natural-language
/// statement, and the reference answer (never shown to agents).
struct TaskInstance {
  StructuredTask task;
  std::string statement;
  Answer reference;
  SolveStatus reference_status = SolveStatus::solved;
};

/// Deterministic instance generation. Instances are feasible by planting
/// (plus a bounded deterministic resample loop) and the reference answer is
/// produced by the matching solver.
TaskInstance generate(Family f, Difficulty d, uint64_t seed);

/// Render a task as its statement text. Template-driven, one edge per line;
/// never includes the reference answer.
std::string verbalize(const StructuredTask& t);

/// Exact inverse of verbalize on template statements. Anything else raises
/// ParseError pointing at the first unmatched line.
StructuredTask reference_parse(const std::string& statement);

/// Pass-based promotion schedule over the 19 families, visited round-robin.
/// A family is promoted one tier after `promotion_threshold` cumulative
/// passes at its current tier; failures do not reset the counter. The fixed
/// variant always emits D4.
class Curriculum {
 public:
  explicit Curriculum(bool fixed_d4 = false, int promotion_threshold = 2);

  /// Family/tier of the next episode; advances the round-robin cursor and
  /// records first-seen episodes per tier.
  std::pair<Family, Difficulty> next_episode();

  /// Feed back the episode outcome for promotion accounting.
  void record_result(Family f, bool passed);

  Difficulty tier(Family f) const;
  int passes_at_tier(Family f) const;
  int episodes_emitted() const { return episode_; }
  bool fixed_d4() const { return fixed_; }

  /// First episode (1-based) at which each tier was emitted; -1 = never.
  int first_seen(Difficulty d) const;

  json state_json() const;

 private:
  struct FamilyState {
    Difficulty tier = Difficulty::D1;
    int passes = 0;
  };
  bool fixed_;
  int threshold_;
  int episode_ = 0;
  int cursor_ = 0;
  std::array<FamilyState, kFamilyCount> fams_;
  std::array<int, 4> first_seen_{-1, -1, -1, -1};
};

}  // namespace graphforge
