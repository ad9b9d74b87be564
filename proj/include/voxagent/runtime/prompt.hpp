#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "voxagent/runtime/agent.hpp"

namespace voxagent::runtime {

/// Versioned with the template text below; bump on any wording change.
inline constexpr std::string_view kPromptVersion = "prompt/1";

/// Numbered tool list with argument signatures, e.g.
///   3. set_slice(orientation: axial|coronal|sagittal, index: integer)
std::string render_catalog(const std::vector<bridge::ToolDescriptor>& tools);

/// Turn-0 text: study, budget, questions with answer schema, catalog and
/// the reply format.
std::string render_prompt(const EpisodeContext& ctx);

/// Text part of a later observation (the image travels separately).
std::string render_observation(const Observation& obs);

/// Re-prompt sent after an unparseable reply.
std::string render_repair(std::string_view problem);

/// Reads the first fenced block of a reply: ```json {"tool": ..., "args": {...}} ```
/// or ```json {"final_answer": {...}} ```. Throws Error(ParseFailure).
AgentTurn parse_reply(std::string_view reply);

}  // namespace voxagent::runtime
