#include "voxagent/replay.hpp"

#include "voxagent/error.hpp"

namespace voxagent::trace {

std::string ReplayVerdict::summary() const {
  if (pass) return "PASS";
  std::string s = "FAIL(step " + std::to_string(failed_step.value_or(-1)) + ")";
  if (!detail.empty()) s += ": " + detail;
  return s;
}

namespace {

ReplayVerdict fail(std::int64_t step, std::string detail) { return {false, step, std::move(detail)}; }

}  // namespace

ReplayVerdict verify_replay(const EpisodeTrace& trace, bridge::BridgeClient& bridge) {
  if (auto bad = first_chain_break(trace)) return fail(*bad, "hash chain mismatch");

  std::string session;
  try {
    session = bridge.open_session(trace.header.study_id, trace.header.track, trace.header.budget);
  } catch (const Error& e) {
    if (e.code() == Errc::UnknownStudy) throw Error(Errc::StudyUnavailable, e.message());
    throw;
  }

  ReplayVerdict verdict{true, std::nullopt, {}};
  for (const TraceRecord& r : trace.records) {
    const bridge::ToolResult res = bridge.invoke({session, r.tool, r.args, r.step});
    std::string what;
    if (bridge::status_tag(res.status) != r.status) {
      what = "status " + std::string(bridge::status_tag(res.status)) + " != recorded " + r.status;
    } else if (res.result_digest() != r.result_digest) {
      what = "result digest differs";
    } else if (res.state_digest != r.state_digest) {
      what = "state digest differs";
    } else if (res.artifact_ids() != r.artifact_ids) {
      what = "artifact ids differ";
    }
    if (!what.empty()) {
      verdict = fail(r.step, r.tool + ": " + what);
      break;
    }
  }
  bridge.close_session(session);
  return verdict;
}

}  // namespace voxagent::trace
