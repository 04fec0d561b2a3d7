#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "forge.hpp"
#include "genome.hpp"
#include "rng.hpp"
#include "toolbox.hpp"
#include "verifier.hpp"

namespace graphforge {

// ---------------------------------------------------------------------------
// Actions and trajectories

enum class ActionKind {
  emit_task_doc,
  retrieve_request,
  propose_tool,
  run_tool,
  run_candidate,
  direct_answer,
  invalid,  // unparseable external reply; becomes an error observation
};

std::string to_string(ActionKind k);
ActionKind action_kind_from_string(const std::string& s);

/// One agent action. Only the fields for `kind` are meaningful; execution
/// payloads, when present, are full canonical task documents.
struct Action {
  ActionKind kind = ActionKind::invalid;
  json task_doc;                // emit_task_doc
  std::string query;            // retrieve_request summary
  std::string candidate_body;   // propose_tool / run_candidate
  std::string niche;            // propose_tool (rendered NicheKey)
  std::string tool_id;          // run_tool
  std::optional<json> payload;  // run_tool / run_candidate; absent = breach
  std::optional<Answer> answer; // direct_answer
  std::string note;             // invalid: why the action could not be read

  static Action emit(json doc);
  static Action retrieve(std::string query);
  static Action propose(std::string body, std::string niche);
  static Action run(std::string tool_id, std::optional<json> payload);
  static Action candidate(std::string body, std::optional<json> payload);
  static Action answer_with(Answer a);
  static Action bad(std::string note);

  json to_json() const;
  static Action from_json(const json& j);
};

enum class Stage { parse, retrieve, protocol, execute, answer };
std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);
/// The stage an action kind belongs to.
Stage stage_of(ActionKind k);

struct TrajectoryStep {
  Stage stage = Stage::parse;
  Action action;
  json observation;  // retrieval ranking | execution output | error | null

  json to_json() const;
  static TrajectoryStep from_json(const json& j);
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  std::optional<Answer> final_answer;

  /// Arrow-joined action kinds, e.g. "task_doc → retrieve → run_tool →
  /// direct_answer". A pure function of the step list.
  std::string protocol_signature() const;

  json to_json() const;
  static Trajectory from_json(const json& j);
};

/// True iff every execution action carried a payload, no answer was given
/// before an execution (when the policy requires tools), and stages never
/// move backwards. Violations: "execute_missing_task_input",
/// "premature_answer", "stage_order_violation".
std::pair<bool, std::vector<std::string>> protocol_check(
    const Trajectory& t, bool require_execution = true);

// ---------------------------------------------------------------------------
// Agents

enum class FaultMode {
  none,
  parse_drop_field,
  parse_flip_directed,
  wrong_tool,
  buggy_tool,
  protocol_skip_payload,
  premature_answer,
  mixed,  ///< each drawn episode expresses one of the six concrete modes
};

std::string to_string(FaultMode m);
FaultMode fault_mode_from_string(const std::string& s);

/// The genome rule that neutralizes a fault mode, if any: an agent holding
/// that rule does not express the fault. buggy_tool has no instruction-side
/// countermeasure (it is a tool-space defect).
std::optional<std::pair<Section, std::string>> suppressor_for(FaultMode m);

struct AgentConfig {
  enum class Kind { oracle, fault, external };
  Kind kind = Kind::oracle;
  FaultMode mode = FaultMode::none;  // fault kind only
  double rate = 0.0;                 // fault kind only
  std::string endpoint;              // external: shell command, line protocol
  double external_timeout_seconds = 300.0;
  int external_retries = 12;

  /// "oracle" | "fault:MODE:RATE" | "external:ENDPOINT"
  static AgentConfig parse(const std::string& spec);
  std::string render() const;
};

/// What an agent is allowed to see: statement text, the visible tool
/// manifest, its own prior steps, and the genome it acts under — never the
/// canonical task or the reference answer.
struct ToolSummary {
  std::string id;
  std::vector<std::string> families;
  std::string niche;
  int reuse_count = 0;

  json to_json() const;
};

struct AgentContext {
  const std::string& statement;
  const std::vector<ToolSummary>& visible_tools;
  const std::vector<TrajectoryStep>& steps;
  const InstructionGenome& genome;
  int attempt = 0;
  RandomStream& rng;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void begin_episode(AgentContext& ctx) { (void)ctx; }
  virtual Action next_action(AgentContext& ctx) = 0;
};

std::unique_ptr<Agent> make_agent(const AgentConfig& config);

// ---------------------------------------------------------------------------
// Episode driver

struct EpisodeOptions {
  int max_steps = 12;
  bool allow_propose = true;
  uint64_t probe_seed = 0;  // hidden-probe stream for in-episode proposals
  int probe_cases = 2;
  int created_episode = 0;  // provenance stamped on accepted proposals
  int attempt = 0;          // retry index exposed to the agent
};

struct EpisodeOutcome {
  Trajectory trajectory;
  VerifierEvidence evidence;
  std::string tool_used;       // registered tool that produced the answer
  std::string candidate_body;  // body ref when a candidate was executed
  std::string accepted_tool;   // tool registered from this episode's proposal
  bool proposed = false;
};

/// Drive one attempt: the agent acts step by step, the environment executes
/// tools and records observations, and the final answer is verified against
/// the canonical task. The step budget (default 12, lowered by the genome's
/// max_steps rule) truncates runaway agents into failed evidence.
EpisodeOutcome run_episode(Agent& agent, const TaskInstance& instance,
                           Toolbox& box, const std::vector<std::string>& view,
                           const InstructionGenome& genome,
                           const EpisodeOptions& opts, RandomStream& rng);

}  // namespace graphforge
