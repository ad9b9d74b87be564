#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "voxagent/error.hpp"
#include "voxagent/viewer.hpp"

namespace voxagent::bridge {

inline constexpr std::string_view kProtocolVersion = "voxagent-bridge/1";

/// Wire-level outcome of one call.
enum class Status { Ok, UnknownTool, BadArgs, TrackForbidden, BadSession, Budget, Viewer };
std::string_view status_tag(Status s);  // "OK", "E_UNKNOWN_TOOL", ...
Status parse_status(std::string_view tag);
/// Library error -> wire code.
Status status_for(Errc code);

struct ToolCall {
  std::string session_id;
  std::string tool;
  nlohmann::json args = nlohmann::json::object();
  std::int64_t call_id = 0;
};

struct ToolResult {
  Status status = Status::Ok;
  std::string reason;   // finer cause for errors (e.g. "SeedOutsideThreshold")
  std::string message;  // human-readable
  nlohmann::json payload = nlohmann::json::object();
  std::optional<Bytes> image_png;
  std::vector<Artifact> artifacts;
  std::string state_digest;

  bool ok() const { return status == Status::Ok; }
  std::vector<std::string> artifact_ids() const;
  /// Hashed view of the result: status, reason, payload, image digest and
  /// artifact ids (never raw bytes, never timestamps).
  nlohmann::json digest_view() const;
  std::string result_digest() const;
};

/// Invoke response body (images and artifacts base64-embedded).
nlohmann::json result_to_wire(const ToolResult& r);
ToolResult result_from_wire(const nlohmann::json& j);

nlohmann::json call_to_wire(const ToolCall& c);

}  // namespace voxagent::bridge
