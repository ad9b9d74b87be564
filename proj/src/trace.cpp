#include "voxagent/trace.hpp"

#include <atomic>
#include <chrono>
#include <thread>
#include <cstdio>
#include <ctime>
#include <sstream>

#include "voxagent/error.hpp"

namespace voxagent::trace {

namespace fs = std::filesystem;
using nlohmann::json;

json TraceHeader::hashed_fields() const {
  return {{"format", kTraceFormat},   {"protocol", protocol_version}, {"episode_id", episode_id},
          {"study_id", study_id},     {"track", track_tag(track)},    {"agent_id", agent_id},
          {"budget", budget},         {"rng_seed", rng_seed},         {"answer_protocol", protocol_tag(answer_protocol)}};
}

json TraceRecord::hashed_fields() const {
  return {{"step", step},     {"tool", tool},
          {"args", args},     {"status", status},
          {"result_digest", result_digest}, {"state_digest", state_digest},
          {"artifact_ids", artifact_ids}};
}

json TraceFooter::hashed_fields() const {
  json answers = json::object();
  for (const auto& [task, a] : final_answers) answers[task] = a ? json(*a) : json(nullptr);
  return {{"final_answers", answers}, {"termination", termination}, {"total_calls", total_calls}, {"repairs", repairs}};
}

std::string header_chain(const TraceHeader& h) { return digest_of(h.hashed_fields()); }

std::string link_chain(const std::string& prev, const json& hashed) { return sha256_hex(prev + canonical(hashed)); }

std::optional<std::int64_t> first_chain_break(const EpisodeTrace& t) {
  if (t.header.chain != header_chain(t.header)) return 0;
  std::string prev = t.header.chain;
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const TraceRecord& r = t.records[i];
    const auto expected_step = static_cast<std::int64_t>(i + 1);
    if (r.step != expected_step || r.chain != link_chain(prev, r.hashed_fields())) return expected_step;
    prev = r.chain;
  }
  if (t.footer) {
    const auto n = static_cast<std::int64_t>(t.records.size());
    if (t.footer->chain != link_chain(prev, t.footer->hashed_fields()) || t.footer->total_calls != n) return n + 1;
  }
  return std::nullopt;
}

json header_to_json(const TraceHeader& h) {
  json j = h.hashed_fields();
  j["type"] = "header";
  j["started_at"] = h.started_at;
  j["chain"] = h.chain;
  return j;
}

json record_to_json(const TraceRecord& r) {
  json j = r.hashed_fields();
  j["type"] = "record";
  j["timestamp"] = r.timestamp;
  j["chain"] = r.chain;
  return j;
}

json footer_to_json(const TraceFooter& f) {
  json j = f.hashed_fields();
  j["type"] = "footer";
  j["finished_at"] = f.finished_at;
  j["chain"] = f.chain;
  return j;
}

std::string to_jsonl(const EpisodeTrace& t) {
  std::string out = canonical(header_to_json(t.header)) + "\n";
  for (const auto& r : t.records) out += canonical(record_to_json(r)) + "\n";
  if (t.footer) out += canonical(footer_to_json(*t.footer)) + "\n";
  return out;
}

namespace {

TraceHeader header_from_json(const json& j) {
  TraceHeader h;
  if (j.at("format").get<std::string>() != kTraceFormat) throw Error(Errc::Malformed, "unsupported trace format");
  h.protocol_version = j.at("protocol").get<std::string>();
  h.episode_id = j.at("episode_id").get<std::string>();
  h.study_id = j.at("study_id").get<std::string>();
  h.track = parse_track(j.at("track").get<std::string>());
  h.agent_id = j.at("agent_id").get<std::string>();
  h.budget = j.at("budget").get<int>();
  h.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  h.answer_protocol = parse_protocol(j.at("answer_protocol").get<std::string>());
  h.started_at = j.at("started_at").get<std::string>();
  h.chain = j.at("chain").get<std::string>();
  return h;
}

TraceRecord record_from_json(const json& j) {
  TraceRecord r;
  r.step = j.at("step").get<std::int64_t>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.tool = j.at("tool").get<std::string>();
  r.args = j.at("args");
  r.status = j.at("status").get<std::string>();
  r.result_digest = j.at("result_digest").get<std::string>();
  r.state_digest = j.at("state_digest").get<std::string>();
  r.artifact_ids = j.at("artifact_ids").get<std::vector<std::string>>();
  r.chain = j.at("chain").get<std::string>();
  return r;
}

TraceFooter footer_from_json(const json& j) {
  TraceFooter f;
  for (const auto& [task, a] : j.at("final_answers").items()) {
    f.final_answers[task] = a.is_null() ? std::nullopt : std::optional<std::string>(a.get<std::string>());
  }
  f.termination = j.at("termination").get<std::string>();
  f.total_calls = j.at("total_calls").get<std::int64_t>();
  f.repairs = j.at("repairs").get<std::int64_t>();
  f.finished_at = j.at("finished_at").get<std::string>();
  f.chain = j.at("chain").get<std::string>();
  return f;
}

}  // namespace

EpisodeTrace parse_trace(std::string_view text) {
  if (text.empty()) throw Error(Errc::Malformed, "empty trace");
  if (text.back() != '\n') throw Error(Errc::Malformed, "trace ends mid-line (truncated)");
  EpisodeTrace t;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t at = 0;
  while (at < text.size()) {
    const std::size_t nl = text.find('\n', at);
    const std::string_view line = text.substr(at, nl - at);
    at = nl + 1;
    ++line_no;
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (t.footer) throw Error(Errc::Malformed, "content after footer");
      if (type == "header") {
        if (have_header) throw Error(Errc::Malformed, "second header");
        t.header = header_from_json(j);
        have_header = true;
      } else if (!have_header) {
        throw Error(Errc::Malformed, "first line is not a header");
      } else if (type == "record") {
        t.records.push_back(record_from_json(j));
      } else if (type == "footer") {
        t.footer = footer_from_json(j);
      } else {
        throw Error(Errc::Malformed, "unknown line type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw Error(Errc::Malformed, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(Errc::Malformed, "line " + std::to_string(line_no) + ": " + e.message());
    }
  }
  if (!have_header) throw Error(Errc::Malformed, "no header");
  if (auto bad = first_chain_break(t)) {
    throw Error(Errc::ChainBroken, "hash chain breaks at step " + std::to_string(*bad), json{{"step", *bad}});
  }
  return t;
}

EpisodeTrace read_trace(const fs::path& path) {
  const Bytes bytes = read_file_bytes(path.string());
  return parse_trace(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string rfc3339_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(millis));
  return buf;
}

void store_artifact(const fs::path& dir, const Artifact& artifact) {
  const fs::path store = dir / "artifacts";
  fs::create_directories(store);
  const fs::path file = store / artifact.id;
  if (fs::exists(file)) return;
  // other episodes may store the same artifact concurrently; publish by rename
  static std::atomic<std::uint64_t> counter{0};
  const fs::path tmp = store / (artifact.id + ".tmp" + std::to_string(counter.fetch_add(1)) + "-" +
                                std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
  write_file_bytes(tmp.string(), artifact.bytes);
  fs::rename(tmp, file);
}

TraceWriter::TraceWriter(TraceHeader header, std::optional<fs::path> path, Clock clock)
    : path_(std::move(path)), clock_(std::move(clock)) {
  header.started_at = clock_();
  header.chain = header_chain(header);
  trace_.header = std::move(header);
  if (path_) {
    if (path_->has_parent_path()) fs::create_directories(path_->parent_path());
    out_.open(*path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(Errc::Io, "cannot write trace " + path_->string());
  }
  write_line(header_to_json(trace_.header));
}

void TraceWriter::write_line(const json& line) {
  if (!out_.is_open()) return;
  out_ << canonical(line) << '\n';
  out_.flush();
  if (!out_) throw Error(Errc::Io, "trace write failed");
}

const TraceRecord& TraceWriter::append(TraceRecord record) {
  if (sealed()) throw Error(Errc::Sealed, "trace already has a footer");
  const auto expected = static_cast<std::int64_t>(trace_.records.size() + 1);
  if (record.step != expected) {
    throw Error(Errc::BadArgs, "record step " + std::to_string(record.step) + " but expected " + std::to_string(expected));
  }
  if (record.timestamp.empty()) record.timestamp = clock_();
  const std::string& prev = trace_.records.empty() ? trace_.header.chain : trace_.records.back().chain;
  record.chain = link_chain(prev, record.hashed_fields());
  write_line(record_to_json(record));
  trace_.records.push_back(std::move(record));
  return trace_.records.back();
}

const TraceRecord& TraceWriter::append_result(const bridge::ToolCall& call, const bridge::ToolResult& result) {
  if (sealed()) throw Error(Errc::Sealed, "trace already has a footer");
  if (path_) {
    const fs::path dir = path_->has_parent_path() ? path_->parent_path() : fs::path(".");
    for (const auto& a : result.artifacts) store_artifact(dir, a);
  }
  TraceRecord r;
  r.step = static_cast<std::int64_t>(trace_.records.size() + 1);
  r.tool = call.tool;
  r.args = call.args;
  r.status = std::string(bridge::status_tag(result.status));
  r.result_digest = result.result_digest();
  r.state_digest = result.state_digest;
  r.artifact_ids = result.artifact_ids();
  return append(std::move(r));
}

void TraceWriter::finalize(TraceFooter footer) {
  if (sealed()) throw Error(Errc::Sealed, "trace already has a footer");
  footer.total_calls = static_cast<std::int64_t>(trace_.records.size());
  footer.finished_at = clock_();
  const std::string& prev = trace_.records.empty() ? trace_.header.chain : trace_.records.back().chain;
  footer.chain = link_chain(prev, footer.hashed_fields());
  write_line(footer_to_json(footer));
  trace_.footer = std::move(footer);
  if (out_.is_open()) out_.close();
}

}  // namespace voxagent::trace
