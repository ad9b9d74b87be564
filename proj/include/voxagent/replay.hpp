#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "voxagent/bridge/client.hpp"
#include "voxagent/trace.hpp"

namespace voxagent::trace {

struct ReplayVerdict {
  bool pass = false;
  /// 0 = header, 1..n = records, n+1 = footer.
  std::optional<std::int64_t> failed_step;
  std::string detail;

  std::string summary() const;  // "PASS" or "FAIL(step 7): ..."
};

/// Checks the hash chain, then re-dispatches every recorded call (call_id =
/// step) against a fresh session on `bridge` and compares status, result
/// digest, state digest and artifact ids. Throws StudyUnavailable when the
/// bridge does not have the study.
ReplayVerdict verify_replay(const EpisodeTrace& trace, bridge::BridgeClient& bridge);

}  // namespace voxagent::trace
