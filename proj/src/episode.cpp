#include "voxagent/episode.hpp"

#include "voxagent/error.hpp"

namespace voxagent {

std::string_view track_tag(Track t) { return t == Track::A ? "A" : "B"; }

Track parse_track(std::string_view tag) {
  if (tag == "A" || tag == "a") return Track::A;
  if (tag == "B" || tag == "b") return Track::B;
  throw Error(Errc::BadArgs, "unknown track '" + std::string(tag) + "'");
}

std::string_view protocol_tag(AnswerProtocol p) { return p == AnswerProtocol::Mcq ? "MCQ" : "OPEN"; }

AnswerProtocol parse_protocol(std::string_view tag) {
  if (tag == "MCQ" || tag == "mcq") return AnswerProtocol::Mcq;
  if (tag == "OPEN" || tag == "open") return AnswerProtocol::Open;
  throw Error(Errc::BadArgs, "unknown answer protocol '" + std::string(tag) + "'");
}

nlohmann::json episode_to_json(const Episode& e) {
  return {{"episode_id", e.episode_id}, {"study_id", e.study_id},   {"track", track_tag(e.track)},
          {"protocol", protocol_tag(e.protocol)}, {"tool_budget", e.tool_budget}, {"agent_id", e.agent_id},
          {"rng_seed", e.rng_seed}};
}

Episode episode_from_json(const nlohmann::json& j) {
  Episode e;
  e.episode_id = j.at("episode_id").get<std::string>();
  e.study_id = j.at("study_id").get<std::string>();
  e.track = parse_track(j.at("track").get<std::string>());
  e.protocol = parse_protocol(j.at("protocol").get<std::string>());
  e.tool_budget = j.at("tool_budget").get<int>();
  e.agent_id = j.value("agent_id", "");
  e.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  if (e.tool_budget < 0) throw Error(Errc::SchemaViolation, "tool_budget must be >= 0");
  return e;
}

}  // namespace voxagent
