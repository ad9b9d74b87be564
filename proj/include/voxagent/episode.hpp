#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace voxagent {

enum class Track { A, B };
std::string_view track_tag(Track t);  // "A" / "B"
Track parse_track(std::string_view tag);

enum class AnswerProtocol { Mcq, Open };
std::string_view protocol_tag(AnswerProtocol p);  // "MCQ" / "OPEN"
AnswerProtocol parse_protocol(std::string_view tag);

inline constexpr int kDefaultToolBudget = 40;

/// One study-level task instance.
struct Episode {
  std::string episode_id;
  std::string study_id;
  Track track = Track::A;
  AnswerProtocol protocol = AnswerProtocol::Mcq;
  int tool_budget = kDefaultToolBudget;
  std::string agent_id;
  std::uint64_t rng_seed = 0;
  bool operator==(const Episode&) const = default;
};

nlohmann::json episode_to_json(const Episode& e);
Episode episode_from_json(const nlohmann::json& j);

}  // namespace voxagent
