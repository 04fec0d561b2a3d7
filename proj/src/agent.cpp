#include "graphforge/agent.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>

namespace graphforge {

// ---------------------------------------------------------------------------
// Enum plumbing

std::string to_string(ActionKind k) {
  switch (k) {
    case ActionKind::emit_task_doc: return "task_doc";
    case ActionKind::retrieve_request: return "retrieve";
    case ActionKind::propose_tool: return "propose_tool";
    case ActionKind::run_tool: return "run_tool";
    case ActionKind::run_candidate: return "run_candidate";
    case ActionKind::direct_answer: return "direct_answer";
    case ActionKind::invalid: return "invalid";
  }
  throw CoreError("unhandled action kind");
}

ActionKind action_kind_from_string(const std::string& s) {
  if (s == "task_doc") return ActionKind::emit_task_doc;
  if (s == "retrieve") return ActionKind::retrieve_request;
  if (s == "propose_tool") return ActionKind::propose_tool;
  if (s == "run_tool") return ActionKind::run_tool;
  if (s == "run_candidate") return ActionKind::run_candidate;
  if (s == "direct_answer") return ActionKind::direct_answer;
  if (s == "invalid") return ActionKind::invalid;
  throw CoreError("unknown action kind '" + s + "'");
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::parse: return "parse";
    case Stage::retrieve: return "retrieve";
    case Stage::protocol: return "protocol";
    case Stage::execute: return "execute";
    case Stage::answer: return "answer";
  }
  throw CoreError("unhandled stage");
}

Stage stage_from_string(const std::string& s) {
  if (s == "parse") return Stage::parse;
  if (s == "retrieve") return Stage::retrieve;
  if (s == "protocol") return Stage::protocol;
  if (s == "execute") return Stage::execute;
  if (s == "answer") return Stage::answer;
  throw CoreError("unknown stage '" + s + "'");
}

Stage stage_of(ActionKind k) {
  switch (k) {
    case ActionKind::emit_task_doc: return Stage::parse;
    case ActionKind::retrieve_request: return Stage::retrieve;
    case ActionKind::propose_tool: return Stage::protocol;
    case ActionKind::run_tool:
    case ActionKind::run_candidate: return Stage::execute;
    case ActionKind::direct_answer: return Stage::answer;
    case ActionKind::invalid: return Stage::protocol;
  }
  throw CoreError("unhandled action kind");
}

std::string to_string(FaultMode m) {
  switch (m) {
    case FaultMode::none: return "none";
    case FaultMode::parse_drop_field: return "parse_drop_field";
    case FaultMode::parse_flip_directed: return "parse_flip_directed";
    case FaultMode::wrong_tool: return "wrong_tool";
    case FaultMode::buggy_tool: return "buggy_tool";
    case FaultMode::protocol_skip_payload: return "protocol_skip_payload";
    case FaultMode::premature_answer: return "premature_answer";
    case FaultMode::mixed: return "mixed";
  }
  throw CoreError("unhandled fault mode");
}

FaultMode fault_mode_from_string(const std::string& s) {
  for (FaultMode m : {FaultMode::none, FaultMode::parse_drop_field,
                      FaultMode::parse_flip_directed, FaultMode::wrong_tool,
                      FaultMode::buggy_tool, FaultMode::protocol_skip_payload,
                      FaultMode::premature_answer, FaultMode::mixed})
    if (to_string(m) == s) return m;
  throw CoreError("unknown fault mode '" + s + "'");
}

std::optional<std::pair<Section, std::string>> suppressor_for(FaultMode m) {
  switch (m) {
    case FaultMode::parse_drop_field:
      return std::pair{Section::parse, std::string("reparse_on_slot_mismatch")};
    case FaultMode::parse_flip_directed:
      return std::pair{Section::parse, std::string("confirm_directedness")};
    case FaultMode::wrong_tool:
      return std::pair{Section::retrieve,
                       std::string("require_exact_family_match")};
    case FaultMode::protocol_skip_payload:
      return std::pair{Section::execute,
                       std::string("require_payload_on_execute")};
    case FaultMode::premature_answer:
      return std::pair{Section::protocol,
                       std::string("answer_only_after_execution")};
    case FaultMode::none:
    case FaultMode::buggy_tool:
    case FaultMode::mixed:
      return std::nullopt;  // no single instruction-side countermeasure
  }
  throw CoreError("unhandled fault mode");
}

// ---------------------------------------------------------------------------
// Actions

Action Action::emit(json doc) {
  Action a;
  a.kind = ActionKind::emit_task_doc;
  a.task_doc = std::move(doc);
  return a;
}

Action Action::retrieve(std::string query) {
  Action a;
  a.kind = ActionKind::retrieve_request;
  a.query = std::move(query);
  return a;
}

Action Action::propose(std::string body, std::string niche) {
  Action a;
  a.kind = ActionKind::propose_tool;
  a.candidate_body = std::move(body);
  a.niche = std::move(niche);
  return a;
}

Action Action::run(std::string tool_id, std::optional<json> payload) {
  Action a;
  a.kind = ActionKind::run_tool;
  a.tool_id = std::move(tool_id);
  a.payload = std::move(payload);
  return a;
}

Action Action::candidate(std::string body, std::optional<json> payload) {
  Action a;
  a.kind = ActionKind::run_candidate;
  a.candidate_body = std::move(body);
  a.payload = std::move(payload);
  return a;
}

Action Action::answer_with(Answer ans) {
  Action a;
  a.kind = ActionKind::direct_answer;
  a.answer = std::move(ans);
  return a;
}

Action Action::bad(std::string note) {
  Action a;
  a.kind = ActionKind::invalid;
  a.note = std::move(note);
  return a;
}

json Action::to_json() const {
  json j{{"kind", graphforge::to_string(kind)}};
  switch (kind) {
    case ActionKind::emit_task_doc:
      j["task_doc"] = task_doc;
      break;
    case ActionKind::retrieve_request:
      j["query"] = query;
      break;
    case ActionKind::propose_tool:
      j["candidate"] = candidate_body;
      j["niche"] = niche;
      break;
    case ActionKind::run_tool:
      j["tool"] = tool_id;
      if (payload) j["payload"] = *payload;
      break;
    case ActionKind::run_candidate:
      j["candidate"] = candidate_body;
      if (payload) j["payload"] = *payload;
      break;
    case ActionKind::direct_answer:
      if (answer) j["answer"] = answer_to_json(*answer);
      break;
    case ActionKind::invalid:
      j["note"] = note;
      break;
  }
  return j;
}

Action Action::from_json(const json& j) {
  if (!j.is_object()) throw CoreError("action must be an object");
  Action a;
  a.kind = action_kind_from_string(j.at("kind").get<std::string>());
  switch (a.kind) {
    case ActionKind::emit_task_doc:
      a.task_doc = j.at("task_doc");
      break;
    case ActionKind::retrieve_request:
      a.query = j.value("query", "");
      break;
    case ActionKind::propose_tool:
      a.candidate_body = j.at("candidate").get<std::string>();
      a.niche = j.at("niche").get<std::string>();
      break;
    case ActionKind::run_tool:
      a.tool_id = j.at("tool").get<std::string>();
      if (j.contains("payload")) a.payload = j.at("payload");
      break;
    case ActionKind::run_candidate:
      a.candidate_body = j.at("candidate").get<std::string>();
      if (j.contains("payload")) a.payload = j.at("payload");
      break;
    case ActionKind::direct_answer:
      if (j.contains("answer") && !j.at("answer").is_null())
        a.answer = answer_from_json(j.at("answer"));
      break;
    case ActionKind::invalid:
      a.note = j.value("note", "");
      break;
  }
  return a;
}

// ---------------------------------------------------------------------------
// Trajectories

json TrajectoryStep::to_json() const {
  return json{{"stage", graphforge::to_string(stage)},
              {"action", action.to_json()},
              {"observation", observation}};
}

TrajectoryStep TrajectoryStep::from_json(const json& j) {
  TrajectoryStep s;
  s.stage = stage_from_string(j.at("stage").get<std::string>());
  s.action = Action::from_json(j.at("action"));
  s.observation = j.at("observation");
  return s;
}

std::string Trajectory::protocol_signature() const {
  std::string out;
  for (const TrajectoryStep& s : steps) {
    if (!out.empty()) out += " → ";
    out += graphforge::to_string(s.action.kind);
  }
  return out;
}

json Trajectory::to_json() const {
  json steps_j = json::array();
  for (const TrajectoryStep& s : steps) steps_j.push_back(s.to_json());
  return json{{"steps", steps_j},
              {"final_answer",
               final_answer ? answer_to_json(*final_answer) : json()},
              {"signature", protocol_signature()}};
}

Trajectory Trajectory::from_json(const json& j) {
  Trajectory t;
  for (const json& s : j.at("steps"))
    t.steps.push_back(TrajectoryStep::from_json(s));
  if (j.contains("final_answer") && !j.at("final_answer").is_null())
    t.final_answer = answer_from_json(j.at("final_answer"));
  return t;
}

std::pair<bool, std::vector<std::string>> protocol_check(
    const Trajectory& t, bool require_execution) {
  std::vector<std::string> violations;
  auto add = [&violations](const std::string& v) {
    if (std::find(violations.begin(), violations.end(), v) == violations.end())
      violations.push_back(v);
  };
  bool executed = false;
  int highest_stage = -1;
  for (const TrajectoryStep& s : t.steps) {
    if (s.action.kind == ActionKind::run_tool ||
        s.action.kind == ActionKind::run_candidate) {
      if (!s.action.payload) add("execute_missing_task_input");
      executed = true;
    }
    if (s.action.kind == ActionKind::direct_answer && require_execution &&
        !executed)
      add("premature_answer");
    int idx = static_cast<int>(s.stage);
    if (idx < highest_stage) add("stage_order_violation");
    highest_stage = std::max(highest_stage, idx);
  }
  return {violations.empty(), violations};
}

// ---------------------------------------------------------------------------
// Agent config

AgentConfig AgentConfig::parse(const std::string& spec) {
  AgentConfig c;
  if (spec == "oracle") return c;
  if (spec.rfind("fault:", 0) == 0) {
    std::string rest = spec.substr(6);
    size_t colon = rest.find(':');
    if (colon == std::string::npos)
      throw CoreError("fault agent spec must be fault:MODE:RATE, got '" +
                      spec + "'");
    c.kind = Kind::fault;
    c.mode = fault_mode_from_string(rest.substr(0, colon));
    std::string rate_s = rest.substr(colon + 1);
    try {
      size_t used = 0;
      c.rate = std::stod(rate_s, &used);
      if (used != rate_s.size()) throw std::invalid_argument(rate_s);
    } catch (const std::exception&) {
      throw CoreError("fault rate must be a number, got '" + rate_s + "'");
    }
    if (c.rate < 0.0 || c.rate > 1.0)
      throw CoreError("fault rate must be in [0,1], got " + rate_s);
    return c;
  }
  if (spec.rfind("external:", 0) == 0) {
    c.kind = Kind::external;
    c.endpoint = spec.substr(9);
    if (c.endpoint.empty())
      throw CoreError("external agent spec needs an endpoint command");
    return c;
  }
  throw CoreError("unknown agent spec '" + spec +
                  "' (expected oracle | fault:MODE:RATE | external:ENDPOINT)");
}

std::string AgentConfig::render() const {
  switch (kind) {
    case Kind::oracle: return "oracle";
    case Kind::fault: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", rate);
      return "fault:" + graphforge::to_string(mode) + ":" + buf;
    }
    case Kind::external: return "external:" + endpoint;
  }
  throw CoreError("unhandled agent kind");
}

json ToolSummary::to_json() const {
  return json{{"id", id},
              {"families", families},
              {"niche", niche},
              {"reuse_count", reuse_count}};
}

// ---------------------------------------------------------------------------
// Scripted agent (oracle behavior plus optional fault expression)

namespace {

const json* last_task_doc(const std::vector<TrajectoryStep>& steps) {
  for (auto it = steps.rbegin(); it != steps.rend(); ++it)
    if (it->action.kind == ActionKind::emit_task_doc)
      return &it->action.task_doc;
  return nullptr;
}

NicheKey doc_niche(const json& doc) {
  StructuredTask t;
  t.family = family_from_string(doc.at("family").get<std::string>());
  t.difficulty = difficulty_from_string(doc.at("difficulty").get<std::string>());
  return niche_key(t);
}

/// Remove the last non-core required slot of the family's interface from a
/// task document; the doc stays loadable but fails interface validation.
void drop_required_slot(json& doc) {
  TypedInterface iface =
      interface_for(doc.at("family").get<std::string>());
  std::string slot;
  for (const std::string& s : iface.required)
    if (s != "graph.nodes" && s != "graph.edges") slot = s;
  json& ti = doc["task_input"];
  if (slot.empty()) {
    ti["graph"].erase("edges");
    return;
  }
  if (slot == "graph.edge_weights") {
    for (json& e : ti["graph"]["edges"]) e.erase("weight");
  } else if (slot == "graph.edge_capacities") {
    for (json& e : ti["graph"]["edges"]) e.erase("capacity");
  } else {
    size_t dot = slot.find('.');
    std::string group = slot.substr(0, dot);
    std::string key = slot.substr(dot + 1);
    if (ti.contains(group)) ti[group].erase(key);
  }
}

class ScriptedAgent : public Agent {
 public:
  ScriptedAgent(FaultMode mode, double rate) : mode_(mode), rate_(rate) {}

  void begin_episode(AgentContext& ctx) override {
    drawn_ = mode_ != FaultMode::none && ctx.rng.bernoulli(rate_);
    active_ = mode_;
    if (mode_ == FaultMode::mixed) {
      static constexpr FaultMode pool[] = {
          FaultMode::parse_drop_field,      FaultMode::parse_flip_directed,
          FaultMode::wrong_tool,            FaultMode::buggy_tool,
          FaultMode::protocol_skip_payload, FaultMode::premature_answer};
      active_ = pool[ctx.rng.uniform(0, 5)];
    }
  }

  Action next_action(AgentContext& ctx) override {
    const bool fault = drawn_ && !suppressed(ctx.genome);
    if (ctx.steps.empty()) return parse_statement(ctx, fault);

    const json* doc = last_task_doc(ctx.steps);
    if (!doc) return Action::answer_with(Answer::empty(Family::shortest_path));
    Family fam = family_from_string(doc->at("family").get<std::string>());

    const TrajectoryStep& last = ctx.steps.back();
    switch (last.action.kind) {
      case ActionKind::emit_task_doc:
        if (fault && active_ == FaultMode::premature_answer)
          return Action::answer_with(Answer::empty(fam));
        return Action::retrieve(to_string(fam) + " " +
                                doc->at("difficulty").get<std::string>());

      case ActionKind::retrieve_request: {
        std::optional<json> payload = *doc;
        if (fault && active_ == FaultMode::protocol_skip_payload)
          payload.reset();
        if (fault && active_ == FaultMode::buggy_tool)
          return Action::candidate(buggy_body_for(fam), std::move(payload));
        const json& obs = last.observation;
        json ranked = obs.is_object() ? obs.value("ranked", json::array())
                                      : json::array();
        if (!ranked.empty()) {
          std::string pick = ranked.front().at("id").get<std::string>();
          if (fault && active_ == FaultMode::wrong_tool) {
            if (auto wrong = wrong_family_tool(ctx.visible_tools, fam))
              pick = *wrong;
          }
          return Action::run(std::move(pick), std::move(payload));
        }
        return Action::propose(oracle_body_for(fam),
                               doc_niche(*doc).render());
      }

      case ActionKind::propose_tool: {
        std::optional<json> payload = *doc;
        if (fault && active_ == FaultMode::protocol_skip_payload)
          payload.reset();
        return Action::candidate(oracle_body_for(fam), std::move(payload));
      }

      case ActionKind::run_tool:
      case ActionKind::run_candidate: {
        const json& obs = last.observation;
        if (obs.is_object() && obs.contains("answer"))
          return Action::answer_with(answer_from_json(obs.at("answer")));
        return Action::answer_with(Answer::empty(fam));
      }

      default:
        return Action::answer_with(Answer::empty(fam));
    }
  }

 private:
  bool suppressed(const InstructionGenome& genome) const {
    auto rule = suppressor_for(active_);
    return rule && genome.has_rule(rule->first, rule->second);
  }

  Action parse_statement(const AgentContext& ctx, bool fault) const {
    json doc;
    try {
      doc = canonical_json(reference_parse(ctx.statement));
    } catch (const CoreError&) {
      return Action::answer_with(Answer::empty(Family::shortest_path));
    }
    if (fault && active_ == FaultMode::parse_drop_field) drop_required_slot(doc);
    if (fault && active_ == FaultMode::parse_flip_directed) {
      bool cur = doc["task_input"]["graph"].value("directed", false);
      doc["task_input"]["graph"]["directed"] = !cur;
    }
    return Action::emit(std::move(doc));
  }

  static std::optional<std::string> wrong_family_tool(
      const std::vector<ToolSummary>& tools, Family fam) {
    const std::string tag = to_string(fam);
    for (const ToolSummary& t : tools)
      if (std::find(t.families.begin(), t.families.end(), tag) ==
          t.families.end())
        return t.id;
    return std::nullopt;
  }

  FaultMode mode_;
  FaultMode active_ = FaultMode::none;
  double rate_;
  bool drawn_ = false;
};

// ---------------------------------------------------------------------------
// External agent over a line-delimited subprocess protocol

class LineProcess {
 public:
  explicit LineProcess(const std::string& command) {
    static const bool sigpipe_ignored = [] {
      ::signal(SIGPIPE, SIG_IGN);
      return true;
    }();
    (void)sigpipe_ignored;
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw CoreError("pipe failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw CoreError("pipe failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw CoreError("fork failed");
    if (pid_ == 0) {
      ::dup2(to_child[0], 0);
      ::dup2(from_child[1], 1);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(),
              static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
  }

  ~LineProcess() {
    if (in_fd_ >= 0) ::close(in_fd_);
    if (out_fd_ >= 0) ::close(out_fd_);
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  LineProcess(const LineProcess&) = delete;
  LineProcess& operator=(const LineProcess&) = delete;

  bool send_line(const std::string& line) {
    std::string framed = line + "\n";
    size_t off = 0;
    while (off < framed.size()) {
      ssize_t n = ::write(in_fd_, framed.data() + off, framed.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      off += static_cast<size_t>(n);
    }
    return true;
  }

  std::optional<std::string> read_line(double timeout_seconds) {
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::duration<double>(timeout_seconds);
    while (true) {
      size_t nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return line;
      }
      auto remaining = deadline - std::chrono::steady_clock::now();
      int ms = static_cast<int>(
          std::chrono::duration_cast<std::chrono::milliseconds>(remaining)
              .count());
      if (ms <= 0) return std::nullopt;
      struct pollfd pfd{out_fd_, POLLIN, 0};
      int ready = ::poll(&pfd, 1, ms);
      if (ready <= 0) {
        if (ready < 0 && errno == EINTR) continue;
        return std::nullopt;  // timeout
      }
      char chunk[4096];
      ssize_t n = ::read(out_fd_, chunk, sizeof(chunk));
      if (n <= 0) return std::nullopt;  // closed stream
      buf_.append(chunk, static_cast<size_t>(n));
    }
  }

 private:
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buf_;
};

class ExternalAgent : public Agent {
 public:
  explicit ExternalAgent(AgentConfig cfg) : cfg_(std::move(cfg)) {}

  Action next_action(AgentContext& ctx) override {
    if (!proc_) {
      try {
        proc_ = std::make_unique<LineProcess>(cfg_.endpoint);
      } catch (const CoreError& e) {
        return Action::bad(e.what());
      }
    }
    json tools = json::array();
    for (const ToolSummary& t : ctx.visible_tools)
      tools.push_back(t.to_json());
    json steps = json::array();
    for (const TrajectoryStep& s : ctx.steps) steps.push_back(s.to_json());
    json request{{"statement", ctx.statement},
                 {"tools", tools},
                 {"steps", steps},
                 {"attempt", ctx.attempt},
                 {"allowed_actions",
                  {"task_doc", "retrieve", "propose_tool", "run_tool",
                   "run_candidate", "direct_answer"}}};
    std::string failure = "external agent gave no usable reply";
    for (int attempt = 0; attempt < cfg_.external_retries; ++attempt) {
      if (!proc_->send_line(request.dump()))
        return Action::bad("external agent pipe closed");
      auto line = proc_->read_line(cfg_.external_timeout_seconds);
      if (!line) return Action::bad("external agent timed out");
      try {
        return Action::from_json(json::parse(*line));
      } catch (const std::exception& e) {
        failure = std::string("malformed external reply: ") + e.what();
      }
    }
    return Action::bad(failure);
  }

 private:
  AgentConfig cfg_;
  std::unique_ptr<LineProcess> proc_;
};

}  // namespace

std::unique_ptr<Agent> make_agent(const AgentConfig& config) {
  switch (config.kind) {
    case AgentConfig::Kind::oracle:
      return std::make_unique<ScriptedAgent>(FaultMode::none, 0.0);
    case AgentConfig::Kind::fault:
      return std::make_unique<ScriptedAgent>(config.mode, config.rate);
    case AgentConfig::Kind::external:
      return std::make_unique<ExternalAgent>(config);
  }
  throw CoreError("unhandled agent kind");
}

// ---------------------------------------------------------------------------
// Episode driver

namespace {

json handle_retrieval(const Toolbox& box, const std::vector<std::string>& view,
                      const std::vector<TrajectoryStep>& steps) {
  const json* doc = last_task_doc(steps);
  if (!doc)
    return json{{"ranked", json::array()},
                {"error", "no task document emitted"}};
  StructuredTask recovered;
  try {
    recovered = task_from_json(*doc);
  } catch (const std::exception& e) {
    return json{{"ranked", json::array()},
                {"error", std::string("unusable task document: ") + e.what()}};
  }
  json ranked = json::array();
  for (const auto& [id, score] : box.retrieve(recovered, view).ranked)
    ranked.push_back(json{{"id", id}, {"score", score}});
  return json{{"ranked", ranked}};
}

json handle_propose(Toolbox& box, const TaskInstance& instance,
                    const EpisodeOptions& opts, const Action& a,
                    EpisodeOutcome& out) {
  out.proposed = true;
  if (!opts.allow_propose)
    return json{{"accepted", false}, {"reason", "tool proposals disabled"}};
  AcceptOutcome res;
  try {
    res = box.accept_candidate(a.candidate_body, instance.task.family,
                               NicheKey::parse(a.niche), opts.probe_seed,
                               opts.probe_cases, opts.created_episode);
  } catch (const CoreError& e) {
    return json{{"accepted", false}, {"reason", e.what()}};
  }
  json obs{{"accepted", res.accepted},
           {"probe_report", res.report.to_json()}};
  if (res.accepted) {
    obs["tool_id"] = res.tool_id;
    out.accepted_tool = res.tool_id;
  } else {
    obs["reason"] = res.reason;
  }
  return obs;
}

/// Executions demand schema-valid inputs: the raw payload must carry every
/// slot its declared family requires. Returns an error string, or empty.
std::string payload_gate(const json& payload, StructuredTask& parsed) {
  try {
    parsed = task_from_json(payload);
  } catch (const std::exception& e) {
    return std::string("unusable payload: ") + e.what();
  }
  Discrepancy gap = validate_structure(payload, interface_for(parsed.family));
  if (!gap.missing_slots.empty())
    return "payload rejected at slot '" + gap.missing_slots.front() + "'";
  return "";
}

json handle_run_tool(const Toolbox& box, const std::vector<std::string>& view,
                     const Action& a, EpisodeOutcome& out) {
  json obs{{"tool", a.tool_id}};
  const Tool* t = box.find(a.tool_id);
  if (!t) {
    obs["error"] = "unknown tool id '" + a.tool_id + "'";
    return obs;
  }
  obs["families"] = t->meta.families;
  obs["niche"] = t->meta.niche.render();
  if (std::find(view.begin(), view.end(), a.tool_id) == view.end()) {
    obs["error"] = "tool not in the acting view";
    return obs;
  }
  if (!a.payload) {
    obs["error"] = "execution refused: missing task_input";
    return obs;
  }
  StructuredTask payload_task;
  if (std::string err = payload_gate(*a.payload, payload_task); !err.empty()) {
    obs["error"] = err;
    return obs;
  }
  out.tool_used = a.tool_id;
  try {
    obs["answer"] = answer_to_json(t->body(payload_task));
  } catch (const std::exception& e) {
    obs["error"] = std::string("tool raised: ") + e.what();
  }
  return obs;
}

json handle_run_candidate(const Toolbox& box, const Action& a,
                          EpisodeOutcome& out) {
  json obs{{"candidate", a.candidate_body}};
  ToolBody body;
  try {
    body = tool_body(a.candidate_body);
    obs["families"] = body_families(a.candidate_body);
  } catch (const CoreError& e) {
    obs["error"] = e.what();
    return obs;
  }
  if (!a.payload) {
    obs["error"] = "execution refused: missing task_input";
    return obs;
  }
  StructuredTask payload_task;
  if (std::string err = payload_gate(*a.payload, payload_task); !err.empty()) {
    obs["error"] = err;
    return obs;
  }
  out.candidate_body = a.candidate_body;
  // Executing the body of a tool accepted earlier in this episode counts as
  // that tool's first use.
  if (!out.accepted_tool.empty() &&
      box.at(out.accepted_tool).body_id == a.candidate_body)
    out.tool_used = out.accepted_tool;
  try {
    obs["answer"] = answer_to_json(body(payload_task));
  } catch (const std::exception& e) {
    obs["error"] = std::string("candidate raised: ") + e.what();
  }
  return obs;
}

}  // namespace

EpisodeOutcome run_episode(Agent& agent, const TaskInstance& instance,
                           Toolbox& box, const std::vector<std::string>& view,
                           const InstructionGenome& genome,
                           const EpisodeOptions& opts, RandomStream& rng) {
  EpisodeOutcome out;
  std::vector<std::string> view_sorted = view;
  std::sort(view_sorted.begin(), view_sorted.end());
  std::vector<ToolSummary> visible;
  visible.reserve(view_sorted.size());
  for (const std::string& id : view_sorted) {
    const Tool& t = box.at(id);
    visible.push_back(
        ToolSummary{id, t.meta.families, t.meta.niche.render(), t.reuse_count});
  }

  int max_steps = opts.max_steps;
  if (const GenomeRule* r = genome.find_rule(Section::protocol, "max_steps"))
    if (r->params.is_object() && r->params.contains("limit"))
      max_steps = std::min(max_steps,
                           std::max(8, r->params.at("limit").get<int>()));

  AgentContext ctx{instance.statement, visible,      out.trajectory.steps,
                   genome,             opts.attempt, rng};
  agent.begin_episode(ctx);

  bool answered = false;
  while (!answered &&
         static_cast<int>(out.trajectory.steps.size()) < max_steps) {
    Action a = agent.next_action(ctx);
    TrajectoryStep step;
    step.stage = stage_of(a.kind);
    json obs;
    switch (a.kind) {
      case ActionKind::emit_task_doc:
        break;
      case ActionKind::retrieve_request:
        obs = handle_retrieval(box, view_sorted, out.trajectory.steps);
        break;
      case ActionKind::propose_tool:
        obs = handle_propose(box, instance, opts, a, out);
        break;
      case ActionKind::run_tool:
        obs = handle_run_tool(box, view_sorted, a, out);
        break;
      case ActionKind::run_candidate:
        obs = handle_run_candidate(box, a, out);
        break;
      case ActionKind::direct_answer: {
        out.trajectory.final_answer =
            a.answer ? *a.answer : Answer::empty(instance.task.family);
        out.evidence = verify(*out.trajectory.final_answer, instance.task);
        obs = json{{"passed", out.evidence.passed}};
        answered = true;
        break;
      }
      case ActionKind::invalid:
        obs = json{{"error", a.note.empty() ? "unusable action" : a.note}};
        step.stage = out.trajectory.steps.empty()
                         ? Stage::parse
                         : out.trajectory.steps.back().stage;
        break;
    }
    step.action = std::move(a);
    step.observation = std::move(obs);
    out.trajectory.steps.push_back(std::move(step));
  }

  if (!answered) {
    out.evidence = VerifierEvidence{};
    out.evidence.error_messages.push_back("step budget exceeded");
  }
  return out;
}

}  // namespace graphforge
