#include <ranges>
#include <set>

#include "voxagent/error.hpp"
#include "voxagent/runtime/agent.hpp"
#include "voxagent/runtime/prompt.hpp"

namespace voxagent::runtime {

using nlohmann::json;

std::string_view termination_tag(Termination t) {
  switch (t) {
    case Termination::Answered: return "ANSWERED";
    case Termination::BudgetForced: return "BUDGET_FORCED";
    case Termination::ProtocolError: return "PROTOCOL_ERROR";
    case Termination::Aborted: return "ABORTED";
  }
  return "";
}

Termination parse_termination(std::string_view tag) {
  for (Termination t : {Termination::Answered, Termination::BudgetForced, Termination::ProtocolError, Termination::Aborted}) {
    if (termination_tag(t) == tag) return t;
  }
  throw Error(Errc::SchemaViolation, "unknown termination '" + std::string(tag) + "'");
}

namespace {

json answers_json(const AnswerMap& answers) {
  json j = json::object();
  for (const auto& [task, a] : answers) j[task] = a ? json(*a) : json(nullptr);
  return j;
}

}  // namespace

json result_to_json(const EpisodeResult& r) {
  return {{"episode_id", r.episode_id},
          {"study_id", r.study_id},
          {"module", module_tag(r.module)},
          {"track", track_tag(r.track)},
          {"answer_protocol", protocol_tag(r.protocol)},
          {"agent_id", r.agent_id},
          {"final_answers", answers_json(r.final_answers)},
          {"tool_call_count", r.tool_call_count},
          {"repairs", r.repairs},
          {"termination", termination_tag(r.termination)},
          {"error", r.error},
          {"trace_path", r.trace_path},
          {"trace_digest", r.trace_digest}};
}

EpisodeResult result_from_json(const json& j) {
  try {
    EpisodeResult r;
    r.episode_id = j.at("episode_id").get<std::string>();
    r.study_id = j.at("study_id").get<std::string>();
    r.module = parse_module(j.at("module").get<std::string>());
    r.track = parse_track(j.at("track").get<std::string>());
    r.protocol = parse_protocol(j.at("answer_protocol").get<std::string>());
    r.agent_id = j.at("agent_id").get<std::string>();
    for (const auto& [task, a] : j.at("final_answers").items()) {
      r.final_answers[task] = a.is_null() ? std::nullopt : std::optional<std::string>(a.get<std::string>());
    }
    r.tool_call_count = j.at("tool_call_count").get<int>();
    r.repairs = j.at("repairs").get<int>();
    r.termination = parse_termination(j.at("termination").get<std::string>());
    r.error = j.value("error", "");
    r.trace_path = j.value("trace_path", "");
    r.trace_digest = j.value("trace_digest", "");
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("episode result: ") + e.what());
  }
}

EpisodeContext make_context(const EpisodeInput& input) {
  EpisodeContext ctx{input.episode, input.module, input.tasks,
                     bridge::catalog(bridge::TrackPolicy::for_track(input.episode.track, input.episode.tool_budget))};
  if (input.episode.protocol == AnswerProtocol::Open) {
    for (auto& t : ctx.tasks) t.options.clear();
  }
  return ctx;
}

namespace {

/// Empty string when the answer covers every task exactly once.
std::string check_coverage(const FinalAnswer& fa, const std::vector<TaskSpec>& tasks) {
  std::set<std::string> expected;
  for (const auto& t : tasks) expected.insert(t.task_id);
  for (const auto& id : fa.answers | std::views::keys) {
    if (!expected.contains(id)) return "final answer names unknown task '" + id + "'";
  }
  for (const auto& id : expected) {
    if (!fa.answers.contains(id)) return "final answer is missing task '" + id + "'";
  }
  return {};
}

}  // namespace

EpisodeOutcome run_episode(const EpisodeInput& input, Agent& agent, bridge::BridgeClient& bridge,
                           const RunOptions& options) {
  const Episode& ep = input.episode;
  EpisodeResult res;
  res.episode_id = ep.episode_id;
  res.study_id = ep.study_id;
  res.module = input.module;
  res.track = ep.track;
  res.protocol = ep.protocol;
  res.agent_id = ep.agent_id.empty() ? agent.id() : ep.agent_id;
  for (const auto& t : input.tasks) res.final_answers[t.task_id] = std::nullopt;

  trace::TraceHeader header;
  header.episode_id = ep.episode_id;
  header.study_id = ep.study_id;
  header.track = ep.track;
  header.agent_id = res.agent_id;
  header.budget = ep.tool_budget;
  header.rng_seed = ep.rng_seed;
  header.answer_protocol = ep.protocol;
  std::optional<std::filesystem::path> trace_path;
  if (options.trace_dir) {
    trace_path = *options.trace_dir / (ep.episode_id + std::string(trace::kTraceExtension));
    res.trace_path = trace_path->string();
  }
  trace::TraceWriter writer(header, trace_path, options.clock);

  std::optional<std::string> session;
  auto finish = [&](Termination t, std::string error) {
    res.termination = t;
    res.error = std::move(error);
    if (t == Termination::ProtocolError || t == Termination::Aborted) {
      for (auto& a : res.final_answers | std::views::values) a.reset();
    }
    if (session) {
      try {
        bridge.close_session(*session);
      } catch (const Error&) {
        // already gone (bridge restarted or unreachable); nothing to release
      }
    }
    trace::TraceFooter footer;
    footer.final_answers = res.final_answers;
    footer.termination = std::string(termination_tag(t));
    footer.repairs = res.repairs;
    writer.finalize(std::move(footer));
    res.tool_call_count = static_cast<int>(writer.trace().records.size());
    res.trace_digest = writer.trace().footer->chain;
    return EpisodeOutcome{res, writer.trace()};
  };

  if (ep.tool_budget < 0) return finish(Termination::ProtocolError, "negative tool budget");
  try {
    session = bridge.open_session(ep.study_id, ep.track, ep.tool_budget);
  } catch (const Error& e) {
    return finish(Termination::Aborted, std::string(to_string(e.code())) + ": " + e.message());
  }

  const EpisodeContext ctx = make_context(input);
  int calls = 0;
  bool forced = ep.tool_budget == 0;
  bool last_malformed = false;
  Observation obs;
  obs.kind = ObservationKind::Start;
  obs.budget = ep.tool_budget;
  obs.forced_answer = forced;
  obs.text = render_prompt(ctx);
  if (forced) obs.text += "\n" + std::string(kForcedAnswerText) + "\n";

  try {
    agent.begin(ctx);
    for (;;) {
      if (options.cancel && options.cancel->load()) return finish(Termination::Aborted, "cancelled");
      const AgentTurn turn = agent.next(obs);

      std::string malformed;
      if (const auto* m = std::get_if<MalformedTurn>(&turn)) malformed = m->reason.empty() ? "malformed turn" : m->reason;
      if (const auto* fa = std::get_if<FinalAnswer>(&turn)) malformed = check_coverage(*fa, input.tasks);
      if (!malformed.empty()) {
        if (last_malformed) return finish(Termination::ProtocolError, "AgentFault: " + malformed);
        last_malformed = true;
        ++res.repairs;
        obs = Observation{ObservationKind::Repair, malformed, {}, std::nullopt, calls, ep.tool_budget, forced};
        continue;
      }
      last_malformed = false;

      if (const auto* fa = std::get_if<FinalAnswer>(&turn)) {
        for (const auto& [task, a] : fa->answers) res.final_answers[task] = a;
        return finish(forced ? Termination::BudgetForced : Termination::Answered, "");
      }

      const auto& req = std::get<ToolRequest>(turn);
      if (forced) return finish(Termination::ProtocolError, "tool call '" + req.tool + "' after forced-answer observation");
      const bridge::ToolCall call{*session, req.tool, req.args, calls + 1};
      const bridge::ToolResult result = bridge.invoke(call);
      writer.append_result(call, result);  // persisted before the agent sees the result
      ++calls;
      forced = calls >= ep.tool_budget;
      obs = Observation{ObservationKind::ToolResult, forced ? std::string(kForcedAnswerText) : std::string(),
                        req.tool, result, calls, ep.tool_budget, forced};
    }
  } catch (const Error& e) {
    if (e.code() == Errc::Io) throw;
    if (e.code() == Errc::BridgeUnreachable || e.code() == Errc::EndpointError) {
      return finish(Termination::Aborted, std::string(to_string(e.code())) + ": " + e.message());
    }
    return finish(Termination::ProtocolError, "AgentFault: " + e.message());
  } catch (const std::exception& e) {
    return finish(Termination::ProtocolError, std::string("AgentFault: ") + e.what());
  }
}

}  // namespace voxagent::runtime
