#include "voxagent/bridge/protocol.hpp"

namespace voxagent::bridge {

using nlohmann::json;

std::string_view status_tag(Status s) {
  switch (s) {
    case Status::Ok: return "OK";
    case Status::UnknownTool: return "E_UNKNOWN_TOOL";
    case Status::BadArgs: return "E_BAD_ARGS";
    case Status::TrackForbidden: return "E_TRACK_FORBIDDEN";
    case Status::BadSession: return "E_BAD_SESSION";
    case Status::Budget: return "E_BUDGET";
    case Status::Viewer: return "E_VIEWER";
  }
  return "";
}

Status parse_status(std::string_view tag) {
  for (Status s : {Status::Ok, Status::UnknownTool, Status::BadArgs, Status::TrackForbidden, Status::BadSession,
                   Status::Budget, Status::Viewer}) {
    if (status_tag(s) == tag) return s;
  }
  throw Error(Errc::Malformed, "unknown status '" + std::string(tag) + "'");
}

Status status_for(Errc code) {
  switch (code) {
    case Errc::UnknownTool: return Status::UnknownTool;
    case Errc::BadArgs:
    case Errc::UnknownSeries:
    case Errc::UnknownStudy: return Status::BadArgs;
    case Errc::TrackForbidden: return Status::TrackForbidden;
    case Errc::BadSession: return Status::BadSession;
    case Errc::BudgetExceeded: return Status::Budget;
    default: return Status::Viewer;
  }
}

std::vector<std::string> ToolResult::artifact_ids() const {
  std::vector<std::string> ids;
  for (const auto& a : artifacts) ids.push_back(a.id);
  return ids;
}

json ToolResult::digest_view() const {
  return {{"status", status_tag(status)},
          {"reason", reason},
          {"message", message},
          {"payload", payload},
          {"image", image_png ? json(sha256_hex(*image_png)) : json(nullptr)},
          {"artifacts", artifact_ids()}};
}

std::string ToolResult::result_digest() const { return digest_of(digest_view()); }

json result_to_wire(const ToolResult& r) {
  json artifacts = json::array();
  for (const auto& a : r.artifacts) {
    artifacts.push_back({{"id", a.id}, {"kind", a.kind}, {"data_b64", base64_encode(a.bytes)}});
  }
  json j{{"protocol", kProtocolVersion},
         {"status", status_tag(r.status)},
         {"payload", r.payload},
         {"artifacts", artifacts},
         {"state_digest", r.state_digest}};
  if (!r.ok()) j["error"] = {{"reason", r.reason}, {"message", r.message}};
  if (r.image_png) j["image_png_b64"] = base64_encode(*r.image_png);
  return j;
}

ToolResult result_from_wire(const json& j) {
  ToolResult r;
  try {
    r.status = parse_status(j.at("status").get<std::string>());
    r.payload = j.value("payload", json::object());
    r.state_digest = j.value("state_digest", "");
    if (auto e = j.find("error"); e != j.end()) {
      r.reason = e->value("reason", "");
      r.message = e->value("message", "");
    }
    if (auto img = j.find("image_png_b64"); img != j.end()) r.image_png = base64_decode(img->get<std::string>());
    for (const auto& a : j.value("artifacts", json::array())) {
      Artifact art;
      art.id = a.at("id").get<std::string>();
      art.kind = a.at("kind").get<std::string>();
      art.bytes = base64_decode(a.at("data_b64").get<std::string>());
      if (sha256_hex(art.bytes) != art.id) throw Error(Errc::Malformed, "artifact bytes do not match id");
      r.artifacts.push_back(std::move(art));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::Malformed, std::string("invoke response: ") + e.what());
  }
  return r;
}

json call_to_wire(const ToolCall& c) { return {{"call_id", c.call_id}, {"tool", c.tool}, {"args", c.args}}; }

}  // namespace voxagent::bridge
