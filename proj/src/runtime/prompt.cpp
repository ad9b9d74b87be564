#include "voxagent/runtime/prompt.hpp"

#include "voxagent/error.hpp"

namespace voxagent::runtime {

using nlohmann::json;

namespace {

std::string param_signature(const bridge::ParamSpec& p) {
  std::string s = p.name;
  if (!p.required) s += "?";
  s += ": ";
  if (p.type == bridge::ParamType::Enum) {
    for (std::size_t i = 0; i < p.choices.size(); ++i) s += (i ? "|" : "") + p.choices[i];
  } else {
    s += bridge::param_type_tag(p.type);
  }
  if (!p.required && !p.default_value.is_null()) s += " = " + p.default_value.dump();
  return s;
}

const char* kReplyFormat =
    "Reply with exactly one fenced block. To call a tool:\n"
    "```json\n"
    "{\"tool\": \"<name>\", \"args\": {<arguments>}}\n"
    "```\n"
    "To finish, answer every question at once:\n"
    "```json\n"
    "{\"final_answer\": {\"<task_id>\": \"<answer>\"}}\n"
    "```\n";

}  // namespace

std::string render_catalog(const std::vector<bridge::ToolDescriptor>& tools) {
  std::string out;
  for (std::size_t i = 0; i < tools.size(); ++i) {
    const auto& t = tools[i];
    out += std::to_string(i + 1) + ". " + t.name + "(";
    for (std::size_t k = 0; k < t.params.size(); ++k) out += (k ? ", " : "") + param_signature(t.params[k]);
    out += ") - " + t.description + "\n";
  }
  return out;
}

std::string render_prompt(const EpisodeContext& ctx) {
  const Episode& ep = ctx.episode;
  std::string out = "[" + std::string(kPromptVersion) + "]\n";
  out += "You are operating a volumetric image viewer through a fixed set of tools to answer questions about one "
         "imaging study. You only see what the tools return.\n\n";
  out += "Study: " + ep.study_id + " (" + std::string(module_tag(ctx.module)) + ")\n";
  out += "Track: " + std::string(track_tag(ep.track)) + "\n";
  out += "Tool budget: " + std::to_string(ep.tool_budget) + " calls\n\n";
  out += "Questions:\n";
  for (std::size_t i = 0; i < ctx.tasks.size(); ++i) {
    const TaskSpec& t = ctx.tasks[i];
    out += std::to_string(i + 1) + ". [" + t.task_id + "] " + t.question + "\n";
    if (ep.protocol == AnswerProtocol::Mcq && !t.options.empty()) {
      out += "   Options:";
      for (const auto& o : t.options) out += " " + o.id + ") " + o.text + ";";
      out.back() = '\n';
      out += "   Answer with the option letter.\n";
    } else {
      out += "   Answer in a few words of free text.\n";
    }
  }
  out += "\nTools:\n" + render_catalog(ctx.catalog) + "\n" + kReplyFormat;
  return out;
}

std::string render_observation(const Observation& obs) {
  std::string out;
  switch (obs.kind) {
    case ObservationKind::Start:
      return obs.text;
    case ObservationKind::Repair:
      return render_repair(obs.text);
    case ObservationKind::ToolResult:
      break;
  }
  const bridge::ToolResult& r = *obs.result;
  out = "Result of " + obs.tool + " (call " + std::to_string(obs.calls_used) + " of " + std::to_string(obs.budget) +
        "): " + std::string(bridge::status_tag(r.status));
  if (!r.ok()) out += " (" + r.reason + ") " + r.message;
  out += "\n```json\n" + r.payload.dump() + "\n```\n";
  if (r.image_png) out += "The rendered slice is attached.\n";
  if (obs.forced_answer) out += std::string(kForcedAnswerText) + ". No further tool calls are accepted.\n";
  return out;
}

std::string render_repair(std::string_view problem) {
  return "Your last reply could not be used: " + std::string(problem) + "\n" + kReplyFormat;
}

AgentTurn parse_reply(std::string_view reply) {
  const std::size_t open = reply.find("```");
  if (open == std::string_view::npos) throw Error(Errc::ParseFailure, "no fenced block in reply");
  std::size_t body = reply.find('\n', open);
  if (body == std::string_view::npos) throw Error(Errc::ParseFailure, "unterminated fenced block");
  ++body;
  const std::size_t close = reply.find("```", body);
  if (close == std::string_view::npos) throw Error(Errc::ParseFailure, "unterminated fenced block");

  json j;
  try {
    j = json::parse(reply.substr(body, close - body));
  } catch (const json::exception& e) {
    throw Error(Errc::ParseFailure, std::string("fenced block is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::ParseFailure, "fenced block must hold a JSON object");

  if (j.contains("final_answer")) {
    const json& fa = j["final_answer"];
    if (!fa.is_object()) throw Error(Errc::ParseFailure, "final_answer must be an object");
    FinalAnswer out;
    for (const auto& [task, a] : fa.items()) {
      if (!a.is_string()) throw Error(Errc::ParseFailure, "answer for '" + task + "' must be a string");
      out.answers[task] = a.get<std::string>();
    }
    return out;
  }
  if (j.contains("tool")) {
    if (!j["tool"].is_string()) throw Error(Errc::ParseFailure, "tool must be a string");
    ToolRequest req{j["tool"].get<std::string>(), j.value("args", json::object())};
    if (!req.args.is_object()) throw Error(Errc::ParseFailure, "args must be an object");
    return req;
  }
  throw Error(Errc::ParseFailure, "block has neither \"tool\" nor \"final_answer\"");
}

}  // namespace voxagent::runtime
