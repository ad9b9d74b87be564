// Acceptance checks: one PASS/FAIL line per criterion, exit 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "support.hpp"
#include "voxagent/cli.hpp"
#include "voxagent/digest.hpp"
#include "voxagent/replay.hpp"
#include "voxagent/rng.hpp"
#include "voxagent/runtime/prompt.hpp"
#include "voxagent/scoring.hpp"
#include "voxagent/viewer.hpp"
#include "world.hpp"

using namespace voxagent;
using nlohmann::json;
using testsupport::World;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string stable_clock() { return "2000-01-01T00:00:00.000Z"; }

scoring::CaseScore score_one(const runtime::EpisodeResult& r, const StudyPackage& pkg) {
  scoring::NormalizingJudge judge;
  return scoring::score_case(r, pkg.tasks, *pkg.truth, judge);
}

Verdict viewer_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  World w(ModuleKind::Brain, 20, 2024, {64, 64, 64});
  std::vector<scoring::CaseScore> cases;
  for (const auto& [id, pkg] : w.packages) {
    auto agent = runtime::oracle_agent(runtime::OracleMode::Viewer, 0, w.knowledge());
    cases.push_back(score_one(runtime::run_episode(w.input(id), *agent, w.client).result, pkg));
  }
  const auto rep = scoring::aggregate(cases);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {rep.accuracy == 1.0 && rep.avg_tool_calls <= 12 && secs < 60,
          fmt("accuracy %.2f, avg calls %.1f, %.1f s", rep.accuracy, rep.avg_tool_calls, secs)};
}

Verdict chance_baseline() {
  World w(ModuleKind::Brain, 200, 77, {16, 16, 16});
  std::vector<scoring::CaseScore> cases;
  bool four = true;
  auto agent = runtime::random_agent(12345);
  for (const auto& [id, pkg] : w.packages) {
    four = four && pkg.tasks.at(0).options.size() == 4;
    cases.push_back(score_one(runtime::run_episode(w.input(id), *agent, w.client).result, pkg));
  }
  const auto rep = scoring::aggregate(cases);
  return {four && rep.accuracy >= 0.16 && rep.accuracy <= 0.34,
          fmt("accuracy %.3f over %lld episodes", rep.accuracy, static_cast<long long>(rep.n_cases))};
}

Verdict tool_grounding() {
  World w(ModuleKind::Chest, 60, 31, {64, 64, 64});
  const std::vector<double> noise{0, 5, 15, 30};
  std::vector<double> loc;
  for (double n : noise) {
    std::vector<scoring::CaseScore> cases;
    for (const auto& [id, pkg] : w.packages) {
      auto agent = runtime::oracle_agent(runtime::OracleMode::Tools, n, w.knowledge());
      cases.push_back(score_one(runtime::run_episode(w.input(id, Track::B), *agent, w.client).result, pkg));
    }
    loc.push_back(scoring::aggregate(cases).per_task.at("location"));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < loc.size(); ++i) {
    const double p = (loc[i] + loc[i - 1]) / 2;
    const double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) * 2 / 60.0);
    monotone = monotone && loc[i] <= loc[i - 1] + 3 * sigma;
  }
  const double drop = loc[0] - loc[2];
  return {drop >= 0.15 && monotone,
          fmt("location accuracy %.2f / %.2f / %.2f / %.2f at 0/5/15/30 mm, drop %.2f", loc[0], loc[1], loc[2], loc[3], drop)};
}

Verdict generator_consistency() {
  int ok = 0;
  std::string first_bad;
  for (int i = 0; i < 100; ++i) {
    const StudyPackage pkg = synth::gen_study(4242, ModuleKind::Chest, i);
    const auto reading = testsupport::read_chest_pet(pkg.find_series("PET")->volume);
    const auto& a = pkg.truth->answers;
    const bool match = reading.location >= 0 && testsupport::letter(reading.location) == a.at("location").option_id &&
                       testsupport::letter(reading.t_stage) == a.at("t_stage").option_id &&
                       testsupport::letter(reading.grade) == a.at("grade").option_id;
    ok += match;
    if (!match && first_bad.empty()) first_bad = pkg.study_id;
  }
  return {ok == 100, fmt("%d/100 cases recovered%s%s", ok, first_bad.empty() ? "" : ", first mismatch ", first_bad.c_str())};
}

// Replaces the chain values from scratch so only re-execution can notice an edit.
void rechain(trace::EpisodeTrace& t) {
  t.header.chain = sha256_hex(canonical(t.header.hashed_fields()));
  std::string prev = t.header.chain;
  for (auto& r : t.records) prev = r.chain = sha256_hex(prev + canonical(r.hashed_fields()));
  if (t.footer) t.footer->chain = sha256_hex(prev + canonical(t.footer->hashed_fields()));
}

std::string flip_hex(std::string s, std::size_t at) {
  s[at % s.size()] = s[at % s.size()] == '0' ? '1' : '0';
  return s;
}

Verdict replay_soundness() {
  World brain(ModuleKind::Brain, 6, 5);
  World chest(ModuleKind::Chest, 6, 6);
  struct Item {
    trace::EpisodeTrace trace;
    World* world;
  };
  std::vector<Item> traces;
  for (World* w : {&brain, &chest}) {
    for (const auto& [id, _] : w->packages) {
      for (int kind = 0; kind < 3; ++kind) {
        std::unique_ptr<runtime::Agent> agent =
            kind == 0 ? runtime::oracle_agent(runtime::OracleMode::Viewer, 0, w->knowledge())
            : kind == 1 ? runtime::oracle_agent(runtime::OracleMode::Tools, 10, w->knowledge())
                        : runtime::random_agent(kind);
        runtime::RunOptions opts;
        opts.clock = stable_clock;
        traces.push_back({runtime::run_episode(w->input(id, Track::B), *agent, w->client, opts).trace, w});
      }
    }
  }
  int passed = 0;
  for (auto& it : traces) passed += trace::verify_replay(it.trace, it.world->client).pass;

  Rng rng(2718);
  int mutations = 0, caught = 0;
  std::string first_miss;
  while (mutations < 600) {
    Item& it = traces[rng.below(traces.size())];
    trace::EpisodeTrace t = it.trace;
    const auto n = static_cast<std::int64_t>(t.records.size());
    if (n == 0) continue;
    const std::int64_t step = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n))) + 1;
    trace::TraceRecord& r = t.records[static_cast<std::size_t>(step - 1)];
    std::int64_t expect = step;
    switch (rng.below(9)) {
      case 0: r.tool = r.tool == "render" ? "list_series" : "render"; break;
      case 1: r.args["index"] = 1000 + static_cast<std::int64_t>(rng.below(1000)); break;
      case 2: r.status = r.status == "OK" ? "E_BAD_ARGS" : "OK"; break;
      case 3: r.result_digest = flip_hex(r.result_digest, rng.below(64)); break;
      case 4: r.state_digest = flip_hex(r.state_digest, rng.below(64)); break;
      case 5: r.artifact_ids.push_back(sha256_hex("x")); break;
      case 6: r.step += 1; break;
      case 7: t.header.budget += 1, expect = 0; break;
      default:
        if (!t.footer) continue;
        t.footer->termination = "ABORTED", expect = n + 1;
        break;
    }
    // Half the edits keep a valid chain; those must be caught by re-execution.
    const bool rechained = expect == step && r.step == step && rng.below(2) == 0;
    if (rechained) rechain(t);
    ++mutations;
    std::optional<std::int64_t> failed;
    try {
      const trace::EpisodeTrace parsed = trace::parse_trace(trace::to_jsonl(t));
      failed = trace::verify_replay(parsed, it.world->client).failed_step;
    } catch (const Error& e) {
      if (e.code() == Errc::ChainBroken) failed = e.detail().value("step", std::int64_t{-1});
    }
    if (failed == expect) {
      ++caught;
    } else if (first_miss.empty()) {
      first_miss = fmt(" (first miss: expected step %lld, got %lld%s)", static_cast<long long>(expect),
                       static_cast<long long>(failed.value_or(-1)), rechained ? ", rechained" : "");
    }
  }
  const bool pass = passed == static_cast<int>(traces.size()) && caught == mutations;
  return {pass, fmt("%d/%zu traces pass, %d/%d mutations fail at the mutated step%s", passed, traces.size(), caught,
                    mutations, first_miss.c_str())};
}

// Issues random tool requests, layer-3 included, then answers.
class FuzzAgent final : public runtime::Agent {
 public:
  FuzzAgent(std::uint64_t seed, int calls) : rng_(seed), remaining_(calls) {}
  std::string id() const override { return "fuzz"; }
  void begin(const runtime::EpisodeContext& ctx) override { tasks_ = ctx.tasks; }
  runtime::AgentTurn next(const runtime::Observation&) override {
    if (remaining_-- <= 0) {
      runtime::FinalAnswer f;
      for (const auto& t : tasks_) f.answers[t.task_id] = "A";
      return f;
    }
    const auto& reg = bridge::tool_registry();
    const bool expert = rng_.below(2) == 0;
    std::vector<const bridge::ToolDescriptor*> pool;
    for (const auto& d : reg) {
      if ((d.layer == 3) == expert) pool.push_back(&d);
    }
    const bridge::ToolDescriptor& d = *pool[rng_.below(pool.size())];
    json args = json::object();
    for (const auto& p : d.params) {
      if (rng_.below(8) == 0) continue;
      switch (p.type) {
        case bridge::ParamType::Number: args[p.name] = rng_.uniform(-100, 3000); break;
        case bridge::ParamType::Integer: args[p.name] = rng_.between(-5, 70); break;
        case bridge::ParamType::String: args[p.name] = rng_.below(2) ? "PET" : "mask-0001"; break;
        case bridge::ParamType::Enum: args[p.name] = p.choices[rng_.below(p.choices.size())]; break;
        case bridge::ParamType::Point3: args[p.name] = {rng_.uniform(0, 256), rng_.uniform(0, 256), rng_.uniform(0, 256)}; break;
      }
    }
    if (rng_.below(10) == 0) args["extra"] = 1;
    return runtime::ToolRequest{d.name, args};
  }

 private:
  Rng rng_;
  int remaining_;
  std::vector<TaskSpec> tasks_;
};

Verdict gating_soundness() {
  World w(ModuleKind::Chest, 2, 9, {32, 32, 32});
  const auto before_seg = w.backend.executions("local_threshold_segment");
  const auto before_stats = w.backend.executions("mask_stats");
  int calls = 0, layer3 = 0, traced_ok = 0;
  std::uint64_t seed = 1;
  for (const auto& [id, _] : w.packages) {
    // The initial digest of a fresh session on this study.
    const std::string s = w.client.open_session(id, Track::A, 1);
    std::string prev = w.client.state(s)["state_digest"];
    w.client.close_session(s);

    FuzzAgent agent(seed++, 500);
    const auto out = runtime::run_episode(w.input(id, Track::A, 500), agent, w.client);
    for (const auto& r : out.trace.records) {
      ++calls;
      const auto* d = bridge::find_tool(r.tool);
      if (d && d->layer == 3) {
        ++layer3;
        traced_ok += r.status == "E_TRACK_FORBIDDEN" && r.state_digest == prev;
      }
      prev = r.state_digest;
    }
  }
  const auto executed = w.backend.executions("local_threshold_segment") - before_seg +
                        w.backend.executions("mask_stats") - before_stats;
  return {calls == 1000 && executed == 0 && traced_ok == layer3 && layer3 > 0,
          fmt("%d calls, %d layer-3 requests, %llu executed, %d rejections traced with unchanged digest", calls, layer3,
              static_cast<unsigned long long>(executed), traced_ok)};
}

Verdict segmentation_oracle() {
  Rng rng(1618);
  int equal = 0, both_fail = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const GridDims d{rng.between(1, 16), rng.between(1, 16), rng.between(1, 16)};
    Volume v = testsupport::make_volume(d, {rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.5, 2)},
                                        {rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)});
    for (auto& x : v.voxels()) x = static_cast<std::int16_t>(rng.between(0, 9));
    const Index3 at{rng.between(0, d.nx - 1), rng.between(0, d.ny - 1), rng.between(0, d.nz - 1)};
    const Vec3 seed = testsupport::center_of(v, at.i, at.j, at.k);
    // Mostly windows around the seed value; every tenth one is arbitrary.
    const double base = rng.below(10) == 0 ? static_cast<double>(rng.between(0, 9)) : v.at(at);
    const double lo = base - static_cast<double>(rng.between(0, 3));
    const SegmentationParams p{seed, lo, base + static_cast<double>(rng.between(0, 3)), rng.uniform(1, 20)};
    const auto want = testsupport::flood_oracle(v, p);
    try {
      const SegmentationMask m = local_threshold_segment(v, "S", p);
      equal += want && std::set<std::int64_t>(m.voxels.begin(), m.voxels.end()) == *want;
    } catch (const Error&) {
      both_fail += !want;
    }
  }
  return {equal + both_fail == 200, fmt("%d/200 equal masks, %d seeds rejected by both", equal + both_fail, both_fail)};
}

Verdict scoring_identities() {
  auto chest = [](int n_ok, int calls) {
    scoring::CaseScore c;
    c.module = ModuleKind::Chest;
    c.agent_id = "x";
    c.tool_calls = calls;
    for (int i = 0; i < 5; ++i) c.per_task[std::string(task_ids::kChest[i])] = i < n_ok;
    c.case_correct = n_ok == 5;
    return c;
  };
  const auto fixture = scoring::aggregate({chest(5, 5), chest(3, 7)});
  const bool exact = fixture.accuracy == 0.5 && fixture.question_level_accuracy == 0.8;
  Rng rng(99);
  bool ordered = true;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<scoring::CaseScore> cases;
    for (std::uint64_t i = 0, n = 1 + rng.below(30); i < n; ++i) cases.push_back(chest(static_cast<int>(rng.below(6)), 1));
    const auto r = scoring::aggregate(cases);
    ordered = ordered && r.accuracy <= r.question_level_accuracy;
  }
  const std::string cell = scoring::format_cell(0.61, 5.9);
  return {exact && ordered && cell == "0.61 (5.9)",
          fmt("fixture (%.2f, %.2f), case-exact <= question-level on 500 aggregates: %s, cell \"%s\"", fixture.accuracy,
              fixture.question_level_accuracy, ordered ? "yes" : "no", cell.c_str())};
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const Bytes b = read_file_bytes(e.path().string());
    out[fs::relative(e.path(), root).string()] = std::string(b.begin(), b.end());
  }
  return out;
}

Verdict determinism() {
  testsupport::TempDir dir;
  bool identical = true;
  std::size_t files = 0;
  for (const char* module : {"brain", "chest"}) {
    std::vector<std::map<std::string, std::string>> trees;
    for (const char* run : {"a", "b"}) {
      const std::string out = (dir / (std::string(module) + run)).string();
      const char* argv[] = {"voxagent", "gen", "--seed", "42", "--module", module, "--cases", "4", "--out", out.c_str()};
      std::ostringstream sink;
      if (cli::run_cli(10, argv, sink, sink) != 0) return {false, "gen failed: " + sink.str()};
      trees.push_back(tree_bytes(out));
    }
    identical = identical && trees[0] == trees[1];
    files += trees[0].size();
  }
  const Window w{40, 80};
  const int p0 = window_pixel(0, w), p40 = window_pixel(40, w), p80 = window_pixel(80, w);
  return {identical && p0 == 0 && p40 == 128 && p80 == 255,
          fmt("%zu files byte-identical across runs: %s; window (40,80): 0->%d 40->%d 80->%d", files,
              identical ? "yes" : "no", p0, p40, p80)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"viewer-oracle perfection", viewer_oracle},
      {"chance baseline", chance_baseline},
      {"tool-grounding degradation", tool_grounding},
      {"generator self-consistency", generator_consistency},
      {"replay soundness", replay_soundness},
      {"gating soundness", gating_soundness},
      {"segmentation oracle equivalence", segmentation_oracle},
      {"scoring identities", scoring_identities},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS  " : "FAIL  ") << name << ": " << v.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed ? 1 : 0;
}
