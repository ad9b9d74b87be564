#include "voxagent/runtime/runner.hpp"

#include <algorithm>
#include <charconv>
#include <thread>

#include "voxagent/error.hpp"
#include "voxagent/runtime/external.hpp"
#include "voxagent/study_io.hpp"

namespace voxagent::runtime {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double parse_number(std::string_view text, std::string_view what) {
  double v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw Error(Errc::BadArgs, "bad " + std::string(what) + " value '" + std::string(text) + "'");
  }
  return v;
}

/// "name:key=value" -> value for key, or nullopt when there is no ':' part.
std::optional<std::string_view> param(std::string_view spec, std::string_view key) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const std::string_view rest = spec.substr(colon + 1);
  const std::string prefix = std::string(key) + "=";
  if (rest.substr(0, prefix.size()) != prefix) throw Error(Errc::BadArgs, "expected '" + prefix + "' in agent '" + std::string(spec) + "'");
  return rest.substr(prefix.size());
}

}  // namespace

AgentSpec AgentSpec::parse(std::string_view text) {
  AgentSpec s;
  const std::string_view head = text.substr(0, text.find(':'));
  if (head == "oracle-viewer" && text == head) {
    s.kind = Kind::OracleViewer;
  } else if (head == "oracle-tools") {
    s.kind = Kind::OracleTools;
    if (auto v = param(text, "noise")) s.noise_mm = parse_number(*v, "noise");
    if (!(s.noise_mm >= 0)) throw Error(Errc::BadArgs, "noise must be >= 0");
  } else if (head == "random") {
    s.kind = Kind::Random;
    if (auto v = param(text, "seed")) {
      const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), s.seed);
      if (ec != std::errc() || p != v->data() + v->size()) throw Error(Errc::BadArgs, "bad seed '" + std::string(*v) + "'");
    }
  } else if (head == "external" && text.size() > head.size() + 1) {
    s.kind = Kind::External;
    s.config = std::string(text.substr(head.size() + 1));
  } else {
    throw Error(Errc::BadArgs, "unknown agent '" + std::string(text) +
                                   "' (oracle-viewer, oracle-tools[:noise=N], random[:seed=N], external:CONFIG)");
  }
  return s;
}

std::string AgentSpec::name() const {
  switch (kind) {
    case Kind::OracleViewer: return "oracle-viewer";
    case Kind::OracleTools: return oracle_agent(OracleMode::Tools, noise_mm, {})->id();
    case Kind::Random: return "random:seed=" + std::to_string(seed);
    case Kind::External: return "external:" + config.stem().string();
  }
  return "";
}

std::shared_ptr<const StudyCatalog::Entry> StudyCatalog::get(const std::string& study_id) {
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(study_id); it != cache_.end()) return it->second;
  }
  const StudyPackage pkg = load_study_package(suite_.study_dir(study_id));
  auto entry = std::make_shared<Entry>(Entry{pkg.module, pkg.tasks, pkg.truth});
  std::lock_guard lock(mu_);
  return cache_.emplace(study_id, std::move(entry)).first->second;
}

KnowledgeLookup suite_knowledge(std::shared_ptr<StudyCatalog> catalog) {
  return [catalog](const std::string& study_id) {
    const auto entry = catalog->get(study_id);
    if (!entry->truth) throw Error(Errc::MissingFile, "study " + study_id + " has no truth.json");
    return OracleKnowledge{*entry->truth, entry->tasks};
  };
}

std::vector<EpisodeResult> run_suite(std::shared_ptr<StudyCatalog> catalog, const SuiteRunConfig& config,
                                     bridge::BridgeClient& bridge) {
  if (config.parallel < 1) throw Error(Errc::BadArgs, "parallelism must be >= 1");
  const fs::path trace_dir = config.out_dir / "traces";
  const fs::path result_dir = config.out_dir / "results";
  fs::create_directories(trace_dir);
  fs::create_directories(result_dir);

  std::shared_ptr<ChatEndpoint> endpoint;
  if (config.agent.kind == AgentSpec::Kind::External) {
    const EndpointConfig ec = EndpointConfig::load(config.agent.config);
    std::shared_ptr<TokenBucket> limiter;
    if (ec.requests_per_minute > 0) limiter = std::make_shared<TokenBucket>(ec.requests_per_minute / 60.0, 1.0);
    endpoint = std::make_shared<HttpChatEndpoint>(ec, limiter);
  }
  const KnowledgeLookup knowledge = suite_knowledge(catalog);
  auto make_agent = [&]() -> std::unique_ptr<Agent> {
    switch (config.agent.kind) {
      case AgentSpec::Kind::OracleViewer: return oracle_agent(OracleMode::Viewer, 0, knowledge);
      case AgentSpec::Kind::OracleTools: return oracle_agent(OracleMode::Tools, config.agent.noise_mm, knowledge);
      case AgentSpec::Kind::Random: return random_agent(config.agent.seed);
      case AgentSpec::Kind::External: return external_agent(endpoint, config.agent.name());
    }
    return nullptr;
  };

  const auto& episodes = catalog->suite().episodes;
  std::vector<std::optional<EpisodeResult>> slots(episodes.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= episodes.size()) return;
      if (config.cancel && config.cancel->load()) return;  // not started: no trace, no result
      try {
        EpisodeInput in;
        in.episode = episodes[i];
        in.episode.track = config.track;
        if (config.budget) in.episode.tool_budget = *config.budget;
        if (config.protocol) in.episode.protocol = *config.protocol;
        auto agent = make_agent();
        in.episode.agent_id = agent->id();
        const auto entry = catalog->get(in.episode.study_id);
        in.module = entry->module;
        in.tasks = entry->tasks;
        RunOptions opts{trace_dir, config.clock, config.cancel};
        EpisodeOutcome out = run_episode(in, *agent, bridge, opts);
        write_file_text((result_dir / (in.episode.episode_id + ".result.json")).string(),
                        canonical(result_to_json(out.result)) + "\n");
        slots[i] = std::move(out.result);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!failure) failure = std::current_exception();
        next.store(episodes.size());
      }
    }
  };

  const int n = std::min<int>(config.parallel, static_cast<int>(std::max<std::size_t>(episodes.size(), 1)));
  std::vector<std::jthread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  std::vector<EpisodeResult> results;
  for (auto& r : slots) {
    if (r) results.push_back(std::move(*r));
  }

  json summary = json::object();
  for (const auto& r : results) summary[std::string(termination_tag(r.termination))] = summary.value(std::string(termination_tag(r.termination)), 0) + 1;
  const json run{{"suite_digest", catalog->suite().digest},
                 {"track", track_tag(config.track)},
                 {"agent", config.agent.name()},
                 {"episodes", results.size()},
                 {"skipped", episodes.size() - results.size()},
                 {"terminations", summary}};
  write_file_text((config.out_dir / "run.json").string(), canonical(run) + "\n");
  return results;
}

std::vector<EpisodeResult> load_results(const fs::path& dir) {
  const fs::path base = fs::is_directory(dir / "results") ? dir / "results" : dir;
  std::vector<EpisodeResult> out;
  if (fs::is_directory(base)) {
    for (const auto& e : fs::directory_iterator(base)) {
      const std::string name = e.path().filename().string();
      if (!e.is_regular_file() || !name.ends_with(".result.json")) continue;
      const Bytes bytes = read_file_bytes(e.path().string());
      try {
        out.push_back(result_from_json(json::parse(bytes.begin(), bytes.end())));
      } catch (const json::exception& ex) {
        throw Error(Errc::SchemaViolation, e.path().string() + ": " + ex.what());
      }
    }
  }
  if (out.empty()) throw Error(Errc::EmptyInput, "no episode results under " + dir.string());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.episode_id < b.episode_id; });
  return out;
}

}  // namespace voxagent::runtime
