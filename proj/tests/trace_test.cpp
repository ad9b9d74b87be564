#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "expect_errc.hpp"
#include "support.hpp"
#include "voxagent/digest.hpp"
#include "voxagent/replay.hpp"
#include "world.hpp"

using namespace voxagent;
using namespace voxagent::trace;
using nlohmann::json;
using testsupport::TempDir;
using testsupport::World;

namespace {

TraceHeader sample_header() {
  TraceHeader h;
  h.episode_id = "ep-1";
  h.study_id = "BRAIN-1-0000";
  h.agent_id = "test";
  h.budget = 5;
  h.rng_seed = 3;
  return h;
}

TraceRecord sample_record(std::int64_t step) {
  TraceRecord r;
  r.step = step;
  r.tool = "set_slice";
  r.args = {{"orientation", "axial"}, {"index", step}};
  r.status = "OK";
  r.result_digest = sha256_hex("r" + std::to_string(step));
  r.state_digest = sha256_hex("s" + std::to_string(step));
  return r;
}

int clock_ticks = 0;
std::string fake_clock() { return "t" + std::to_string(++clock_ticks); }

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

// Recomputes every chain value from scratch with sha256 over canonical JSON.
void rechain(EpisodeTrace& t) {
  t.header.chain = sha256_hex(canonical(t.header.hashed_fields()));
  std::string prev = t.header.chain;
  for (auto& r : t.records) prev = r.chain = sha256_hex(prev + canonical(r.hashed_fields()));
  if (t.footer) t.footer->chain = sha256_hex(prev + canonical(t.footer->hashed_fields()));
}

EpisodeTrace oracle_trace(World& w, const std::string& study) {
  auto agent = runtime::oracle_agent(runtime::OracleMode::Viewer, 0, w.knowledge());
  return runtime::run_episode(w.input(study), *agent, w.client).trace;
}

}  // namespace

TEST(Trace, WriterProducesVerifiableChain) {
  TraceWriter w(sample_header(), std::nullopt, fake_clock);
  for (int s = 1; s <= 3; ++s) w.append(sample_record(s));
  TraceFooter f;
  f.final_answers = {{"q", "A"}, {"r", std::nullopt}};
  f.termination = "ANSWERED";
  w.finalize(f);
  const EpisodeTrace& t = w.trace();
  EXPECT_EQ(t.footer->total_calls, 3);
  EXPECT_FALSE(first_chain_break(t).has_value());

  EpisodeTrace manual = t;
  rechain(manual);
  EXPECT_EQ(manual, t);

  const EpisodeTrace back = parse_trace(to_jsonl(t));
  EXPECT_EQ(back, t);
  EXPECT_EQ(to_jsonl(back), to_jsonl(t));
}

TEST(Trace, WriterRules) {
  TraceWriter w(sample_header(), std::nullopt, fake_clock);
  EXPECT_ERRC(w.append(sample_record(2)), Errc::BadArgs);
  w.append(sample_record(1));
  EXPECT_ERRC(w.append(sample_record(1)), Errc::BadArgs);
  w.finalize({});
  EXPECT_TRUE(w.sealed());
  EXPECT_ERRC(w.append(sample_record(2)), Errc::Sealed);
  EXPECT_ERRC(w.finalize({}), Errc::Sealed);
}

TEST(Trace, FileIsFlushedPerRecord) {
  TempDir dir;
  const auto path = dir.path() / "ep.trace.jsonl";
  TraceWriter w(sample_header(), path, fake_clock);
  w.append(sample_record(1));
  w.append(sample_record(2));
  const EpisodeTrace partial = read_trace(path);
  EXPECT_FALSE(partial.complete());
  EXPECT_EQ(partial.records.size(), 2u);
  EXPECT_FALSE(first_chain_break(partial).has_value());
  w.finalize({});
  EXPECT_TRUE(read_trace(path).complete());
}

TEST(Trace, ArtifactsAreStoredByDigest) {
  TempDir dir;
  const auto path = dir.path() / "ep.trace.jsonl";
  TraceWriter w(sample_header(), path, fake_clock);
  bridge::ToolResult r;
  r.artifacts.push_back(Artifact::make("image/png", Bytes{9, 8, 7}));
  const TraceRecord& rec = w.append_result({"s", "render", json::object(), 1}, r);
  ASSERT_EQ(rec.artifact_ids.size(), 1u);
  const auto stored = dir.path() / "artifacts" / rec.artifact_ids[0];
  ASSERT_TRUE(std::filesystem::exists(stored));
  EXPECT_EQ(read_file_bytes(stored.string()), (Bytes{9, 8, 7}));
  EXPECT_EQ(rec.result_digest, r.result_digest());
}

TEST(Trace, ParseRejectsDamage) {
  TraceWriter w(sample_header(), std::nullopt, fake_clock);
  for (int s = 1; s <= 4; ++s) w.append(sample_record(s));
  w.finalize({});
  const std::string text = to_jsonl(w.trace());
  auto lines = lines_of(text);

  EXPECT_ERRC(parse_trace(""), Errc::Malformed);
  EXPECT_ERRC(parse_trace(text.substr(0, text.size() - 10)), Errc::Malformed);
  EXPECT_ERRC(parse_trace(text + "{}\n"), Errc::Malformed);
  EXPECT_ERRC(parse_trace(join({lines[1], lines[0]})), Errc::Malformed);
  EXPECT_ERRC(parse_trace(join({lines[0], "not json"})), Errc::Malformed);

  auto swapped = lines;
  std::swap(swapped[2], swapped[3]);
  try {
    parse_trace(join(swapped));
    ADD_FAILURE() << "reordered trace parsed";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ChainBroken);
    EXPECT_EQ(e.detail()["step"], 2);
  }

  auto dropped = lines;
  dropped.erase(dropped.begin() + 3);
  EXPECT_ERRC(parse_trace(join(dropped)), Errc::ChainBroken);
}

TEST(Trace, TimestampsAreNotHashed) {
  TraceWriter w(sample_header(), std::nullopt, fake_clock);
  w.append(sample_record(1));
  w.finalize({});
  EpisodeTrace t = w.trace();
  t.header.started_at = "1999";
  t.records[0].timestamp = "2000";
  t.footer->finished_at = "2001";
  EXPECT_FALSE(first_chain_break(t).has_value());
  EXPECT_NO_THROW(parse_trace(to_jsonl(t)));
}

TEST(Trace, EveryHashedFieldIsCovered) {
  TraceWriter w(sample_header(), std::nullopt, fake_clock);
  w.append(sample_record(1));
  w.append(sample_record(2));
  TraceFooter f;
  f.final_answers = {{"q", "A"}};
  w.finalize(f);
  const EpisodeTrace base = w.trace();

  std::vector<std::pair<std::string, std::function<void(EpisodeTrace&)>>> edits{
      {"study", [](EpisodeTrace& t) { t.header.study_id += "x"; }},
      {"budget", [](EpisodeTrace& t) { t.header.budget++; }},
      {"track", [](EpisodeTrace& t) { t.header.track = Track::B; }},
      {"tool", [](EpisodeTrace& t) { t.records[1].tool = "render"; }},
      {"args", [](EpisodeTrace& t) { t.records[0].args["index"] = 99; }},
      {"status", [](EpisodeTrace& t) { t.records[1].status = "E_BAD_ARGS"; }},
      {"result", [](EpisodeTrace& t) { t.records[0].result_digest[0] ^= 1; }},
      {"state", [](EpisodeTrace& t) { t.records[1].state_digest[5] ^= 1; }},
      {"artifacts", [](EpisodeTrace& t) { t.records[0].artifact_ids.push_back("x"); }},
      {"answers", [](EpisodeTrace& t) { t.footer->final_answers["q"] = "B"; }},
      {"termination", [](EpisodeTrace& t) { t.footer->termination = "ABORTED"; }},
  };
  for (const auto& [name, edit] : edits) {
    EpisodeTrace t = base;
    edit(t);
    EXPECT_TRUE(first_chain_break(t).has_value()) << name;
  }
}

TEST(Replay, OracleTracesVerify) {
  World w(ModuleKind::Brain, 3);
  for (const auto& [id, _] : w.packages) {
    const EpisodeTrace t = oracle_trace(w, id);
    ASSERT_TRUE(t.complete());
    const ReplayVerdict v = verify_replay(t, w.client);
    EXPECT_TRUE(v.pass) << v.summary();
    EXPECT_EQ(v.summary(), "PASS");
  }
  EXPECT_EQ(w.backend.open_session_count(), 0u);
}

TEST(Replay, ZeroCallTraceVerifies) {
  World w(ModuleKind::Brain, 1);
  auto agent = runtime::random_agent(1);
  const EpisodeTrace t = runtime::run_episode(w.input(w.first_id()), *agent, w.client).trace;
  EXPECT_TRUE(t.records.empty());
  EXPECT_TRUE(verify_replay(t, w.client).pass);
}

TEST(Replay, MutationsFailAtTheMutatedStep) {
  World w(ModuleKind::Brain, 1);
  const EpisodeTrace base = oracle_trace(w, w.first_id());
  ASSERT_GE(base.records.size(), 5u);
  for (std::size_t k = 0; k < base.records.size(); ++k) {
    const auto step = static_cast<std::int64_t>(k + 1);
    {
      EpisodeTrace t = base;
      t.records[k].state_digest[3] ^= 1;
      const ReplayVerdict v = verify_replay(t, w.client);
      EXPECT_FALSE(v.pass);
      EXPECT_EQ(v.failed_step, step);
    }
    {
      // Re-chained so only re-execution can notice.
      EpisodeTrace t = base;
      t.records[k].result_digest[0] = t.records[k].result_digest[0] == 'a' ? 'b' : 'a';
      rechain(t);
      const ReplayVerdict v = verify_replay(t, w.client);
      EXPECT_FALSE(v.pass);
      EXPECT_EQ(v.failed_step, step) << v.summary();
    }
  }
  EpisodeTrace t = base;
  t.records[2].args = {{"orientation", "sagittal"}, {"index", 1}};
  t.records[2].tool = "set_slice";
  rechain(t);
  EXPECT_EQ(verify_replay(t, w.client).failed_step, 3);
}

TEST(Replay, UnknownStudyIsUnavailable) {
  World w(ModuleKind::Brain, 1);
  EpisodeTrace t = oracle_trace(w, w.first_id());
  World other(ModuleKind::Brain, 1, 99);
  EXPECT_ERRC(verify_replay(t, other.client), Errc::StudyUnavailable);
}
