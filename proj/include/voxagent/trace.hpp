#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "voxagent/bridge/protocol.hpp"
#include "voxagent/episode.hpp"

namespace voxagent::trace {

inline constexpr std::string_view kTraceFormat = "voxagent-trace/1";
inline constexpr std::string_view kTraceExtension = ".trace.jsonl";

struct TraceHeader {
  std::string episode_id;
  std::string study_id;
  Track track = Track::A;
  std::string agent_id;
  int budget = 0;
  std::uint64_t rng_seed = 0;
  AnswerProtocol answer_protocol = AnswerProtocol::Mcq;
  std::string protocol_version{bridge::kProtocolVersion};
  std::string started_at;  // not hashed
  std::string chain;

  nlohmann::json hashed_fields() const;
  bool operator==(const TraceHeader&) const = default;
};

struct TraceRecord {
  std::int64_t step = 0;
  std::string timestamp;  // not hashed
  std::string tool;
  nlohmann::json args = nlohmann::json::object();
  std::string status;
  std::string result_digest;
  std::string state_digest;
  std::vector<std::string> artifact_ids;
  std::string chain;

  nlohmann::json hashed_fields() const;
  bool operator==(const TraceRecord&) const = default;
};

struct TraceFooter {
  std::map<std::string, std::optional<std::string>> final_answers;
  std::string termination;
  std::int64_t total_calls = 0;
  std::int64_t repairs = 0;
  std::string finished_at;  // not hashed
  std::string chain;

  nlohmann::json hashed_fields() const;
  bool operator==(const TraceFooter&) const = default;
};

struct EpisodeTrace {
  TraceHeader header;
  std::vector<TraceRecord> records;
  std::optional<TraceFooter> footer;

  /// Footerless traces are valid prefixes of an interrupted episode.
  bool complete() const { return footer.has_value(); }
  bool operator==(const EpisodeTrace&) const = default;
};

std::string header_chain(const TraceHeader& h);
std::string link_chain(const std::string& prev, const nlohmann::json& hashed);

/// Recomputes the chain. Returns the first step whose stored chain (or
/// step number) disagrees: 0 = header, 1..n = records, n+1 = footer.
std::optional<std::int64_t> first_chain_break(const EpisodeTrace& t);

nlohmann::json header_to_json(const TraceHeader& h);
nlohmann::json record_to_json(const TraceRecord& r);
nlohmann::json footer_to_json(const TraceFooter& f);
std::string to_jsonl(const EpisodeTrace& t);

/// Parses and verifies. Errors: Malformed (bad JSON, truncated last line,
/// structure), ChainBroken (hash chain or step contiguity).
EpisodeTrace parse_trace(std::string_view text);
EpisodeTrace read_trace(const std::filesystem::path& path);

std::string rfc3339_now();

/// Append-only trace writer. Each record is flushed to disk before
/// append() returns, so a crash leaves a readable prefix.
class TraceWriter {
 public:
  using Clock = std::function<std::string()>;

  /// With a path, writes <path> and stores artifacts under
  /// <path's directory>/artifacts/<digest>.
  TraceWriter(TraceHeader header, std::optional<std::filesystem::path> path, Clock clock = rfc3339_now);

  /// Step must be records+1 (BadArgs otherwise); Sealed after finalize().
  const TraceRecord& append(TraceRecord record);
  /// Builds the record for a dispatched call and stores its artifacts.
  const TraceRecord& append_result(const bridge::ToolCall& call, const bridge::ToolResult& result);
  void finalize(TraceFooter footer);

  const EpisodeTrace& trace() const noexcept { return trace_; }
  bool sealed() const noexcept { return trace_.footer.has_value(); }
  const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

 private:
  void write_line(const nlohmann::json& line);

  EpisodeTrace trace_;
  std::optional<std::filesystem::path> path_;
  std::ofstream out_;
  Clock clock_;
};

/// <dir>/artifacts/<id>
void store_artifact(const std::filesystem::path& dir, const Artifact& artifact);

}  // namespace voxagent::trace
