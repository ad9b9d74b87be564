#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "voxagent/bridge/client.hpp"
#include "voxagent/bridge/registry.hpp"
#include "voxagent/episode.hpp"
#include "voxagent/study.hpp"
#include "voxagent/trace.hpp"

namespace voxagent::runtime {

struct ToolRequest {
  std::string tool;
  nlohmann::json args = nlohmann::json::object();
};

/// task_id -> option id (MCQ) or free text (OPEN).
struct FinalAnswer {
  std::map<std::string, std::string> answers;
};

/// Output the agent could not turn into a request or an answer.
struct MalformedTurn {
  std::string reason;
};

using AgentTurn = std::variant<ToolRequest, FinalAnswer, MalformedTurn>;

inline constexpr std::string_view kForcedAnswerText = "budget exhausted; provide final answer";

enum class ObservationKind { Start, ToolResult, Repair };

struct Observation {
  ObservationKind kind = ObservationKind::Start;
  /// Start: rendered task prompt. Repair: what was wrong with the last turn.
  std::string text;
  /// ToolResult only.
  std::string tool;
  std::optional<bridge::ToolResult> result;
  int calls_used = 0;
  int budget = 0;
  /// No further tool calls are accepted; the next turn must be a FinalAnswer.
  bool forced_answer = false;
};

struct EpisodeContext {
  Episode episode;
  ModuleKind module = ModuleKind::Brain;
  /// OPEN protocol: options are stripped.
  std::vector<TaskSpec> tasks;
  std::vector<bridge::ToolDescriptor> catalog;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string id() const = 0;
  virtual void begin(const EpisodeContext& ctx) = 0;
  /// May throw Error(EndpointError) for infrastructure failures.
  virtual AgentTurn next(const Observation& obs) = 0;
};

enum class Termination { Answered, BudgetForced, ProtocolError, Aborted };
std::string_view termination_tag(Termination t);  // "ANSWERED", ...
Termination parse_termination(std::string_view tag);

using AnswerMap = std::map<std::string, std::optional<std::string>>;

struct EpisodeResult {
  std::string episode_id;
  std::string study_id;
  ModuleKind module = ModuleKind::Brain;
  Track track = Track::A;
  AnswerProtocol protocol = AnswerProtocol::Mcq;
  std::string agent_id;
  /// Every task id is present; nullopt = unanswered.
  AnswerMap final_answers;
  int tool_call_count = 0;
  int repairs = 0;
  Termination termination = Termination::Answered;
  std::string error;  // why the episode aborted or failed the protocol
  std::string trace_path;
  std::string trace_digest;  // chain value of the footer
};

nlohmann::json result_to_json(const EpisodeResult& r);
EpisodeResult result_from_json(const nlohmann::json& j);

struct EpisodeInput {
  Episode episode;
  ModuleKind module = ModuleKind::Brain;
  std::vector<TaskSpec> tasks;
};

struct RunOptions {
  /// When set, the trace is written to <trace_dir>/<episode_id>.trace.jsonl.
  std::optional<std::filesystem::path> trace_dir;
  trace::TraceWriter::Clock clock = trace::rfc3339_now;
  /// Checked between turns; set -> episode ends ABORTED with a footer.
  const std::atomic<bool>* cancel = nullptr;
};

struct EpisodeOutcome {
  EpisodeResult result;
  trace::EpisodeTrace trace;
};

/// Drives one episode to completion. Never throws for agent or bridge
/// failures: those end the episode (PROTOCOL_ERROR / ABORTED) and the
/// session is closed and the trace finalized on every path.
EpisodeOutcome run_episode(const EpisodeInput& input, Agent& agent, bridge::BridgeClient& bridge,
                           const RunOptions& options = {});

EpisodeContext make_context(const EpisodeInput& input);

}  // namespace voxagent::runtime
