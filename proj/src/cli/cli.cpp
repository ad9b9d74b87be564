#include "voxagent/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "voxagent/bridge/client.hpp"
#include "voxagent/replay.hpp"
#include "voxagent/runtime/external.hpp"
#include "voxagent/runtime/runner.hpp"
#include "voxagent/scoring.hpp"
#include "voxagent/study_io.hpp"
#include "voxagent/suite.hpp"

namespace voxagent::cli {

namespace fs = std::filesystem;

ExitCode exit_code_for(Errc code) {
  switch (code) {
    case Errc::ChainBroken:
      return kExitVerifyFailed;
    case Errc::BridgeUnreachable:
    case Errc::EndpointError:
    case Errc::JudgeUnavailable:
    case Errc::Io:
      return kExitInfra;
    default:
      return kExitInput;
  }
}

namespace {

struct GenArgs {
  std::uint64_t seed = 0;
  std::string module;
  std::int64_t cases = 8;
  std::string grid = "64";
  int budget = kDefaultToolBudget;
  std::string out;
};

struct ServeArgs {
  std::string addr = "127.0.0.1:8765";
  std::string studies;
};

struct RunArgs {
  std::string suite;
  std::string track = "A";
  std::string agent = "oracle-viewer";
  std::optional<int> budget;
  std::string protocol;
  int parallel = 1;
  std::string out;
  std::string bridge;
  bool embedded = false;
};

struct ReplayArgs {
  std::vector<std::string> paths;
  std::string studies;
  std::string bridge;
};

struct ScoreArgs {
  std::vector<std::string> results;
  std::string suite;
  std::string out;
  std::string judge = "normalize";
};

struct ReportArgs {
  std::vector<std::string> paths;
  std::string csv;
};

GridDims parse_grid(const std::string& text) {
  std::vector<std::int64_t> v;
  std::size_t at = 0;
  while (at <= text.size()) {
    const std::size_t x = text.find('x', at);
    const std::string part = text.substr(at, x == std::string::npos ? std::string::npos : x - at);
    try {
      std::size_t used = 0;
      v.push_back(std::stoll(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::logic_error&) {
      throw Error(Errc::BadArgs, "grid must be N or NxNxN, got '" + text + "'");
    }
    if (x == std::string::npos) break;
    at = x + 1;
  }
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw Error(Errc::BadArgs, "grid must be N or NxNxN, got '" + text + "'");
}

std::pair<std::string, int> parse_addr(const std::string& addr) {
  std::string s = addr;
  if (s.starts_with("http://")) s = s.substr(7);
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::BadArgs, "address must be host:port, got '" + addr + "'");
  try {
    return {s.substr(0, colon), std::stoi(s.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw Error(Errc::BadArgs, "bad port in '" + addr + "'");
  }
}

/// Accepts a suite directory (has studies/) or a bare study root.
std::shared_ptr<bridge::StudyStore> open_store(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::MissingFile, "no such directory: " + dir);
  return std::make_shared<bridge::StudyStore>(fs::path(dir));
}

int cmd_gen(const GenArgs& a, std::ostream& out) {
  synth::GenSpec spec;
  spec.seed = a.seed;
  spec.module = parse_module(a.module);
  spec.n_cases = a.cases;
  spec.grid = parse_grid(a.grid);
  spec.default_budget = a.budget;
  synth::validate(spec);
  if (a.budget < 0) throw Error(Errc::BadArgs, "budget must be >= 0");

  const fs::path dir(a.out);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!fs::exists(dir / kSuiteManifestName)) {
      throw Error(Errc::BadArgs, dir.string() + " is not empty and does not hold a suite; refusing to overwrite");
    }
    fs::remove_all(dir / "studies");
    fs::remove(dir / kSuiteManifestName);
  }
  auto suite = gen_suite(spec);
  const std::string digest = write_suite(suite, spec, dir);
  out << "suite " << digest << " (" << suite.size() << " " << module_tag(spec.module) << " studies) -> " << dir.string()
      << "\n";
  return kExitOk;
}

int cmd_serve(const ServeArgs& a, std::ostream& out, const std::atomic<bool>* cancel) {
  const auto [host, port] = parse_addr(a.addr);
  bridge::ViewerBackend backend(open_store(a.studies));
  bridge::BridgeServer server(backend);
  const int bound = server.bind(host, port);
  out << "serving " << bridge::kProtocolVersion << " on http://" << host << ":" << bound << "\n" << std::flush;
  if (!cancel) {
    server.run();
    return kExitOk;
  }
  server.start();
  while (!cancel->load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kExitOk;
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err, const std::atomic<bool>* cancel) {
  if (!a.bridge.empty() && a.embedded) throw Error(Errc::BadArgs, "--bridge and --embedded-viewer are exclusive");
  runtime::SuiteRunConfig cfg;
  cfg.track = parse_track(a.track);
  cfg.agent = runtime::AgentSpec::parse(a.agent);
  cfg.budget = a.budget;
  if (a.budget && *a.budget < 0) throw Error(Errc::BadArgs, "budget must be >= 0");
  if (!a.protocol.empty()) cfg.protocol = parse_protocol(a.protocol);
  cfg.parallel = a.parallel;
  cfg.out_dir = a.out;
  cfg.cancel = cancel;
  auto catalog = std::make_shared<runtime::StudyCatalog>(load_suite_index(a.suite));

  std::unique_ptr<bridge::ViewerBackend> backend;
  std::unique_ptr<bridge::BridgeClient> client;
  if (a.bridge.empty()) {
    backend = std::make_unique<bridge::ViewerBackend>(open_store(a.suite));
    client = std::make_unique<bridge::LocalBridgeClient>(*backend);
  } else {
    client = bridge::HttpBridgeClient::from_url(a.bridge);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto results = runtime::run_suite(catalog, cfg, *client);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::map<std::string, int> terms;
  int calls = 0;
  bool infra = false, interrupted = false;
  for (const auto& r : results) {
    ++terms[std::string(runtime::termination_tag(r.termination))];
    calls += r.tool_call_count;
    if (r.termination == runtime::Termination::Aborted) {
      if (r.error == "cancelled") interrupted = true;
      else infra = true;
      err << r.episode_id << ": aborted: " << r.error << "\n";
    }
  }
  out << results.size() << " episodes, agent " << cfg.agent.name() << ", track " << track_tag(cfg.track) << ", "
      << calls << " tool calls in " << secs << " s\n";
  for (const auto& [t, n] : terms) out << "  " << t << ": " << n << "\n";
  out << "traces and results under " << cfg.out_dir.string() << "\n";
  if (interrupted || (cancel && cancel->load())) return kExitInterrupted;
  return infra ? kExitInfra : kExitOk;
}

std::vector<fs::path> collect(const std::vector<std::string>& paths, std::string_view suffix) {
  std::vector<fs::path> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().filename().string().ends_with(suffix)) files.push_back(e.path());
      }
    } else if (fs::exists(p)) {
      files.emplace_back(p);
    } else {
      throw Error(Errc::MissingFile, p);
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

int cmd_replay(const ReplayArgs& a, std::ostream& out) {
  if (a.studies.empty() == a.bridge.empty()) throw Error(Errc::BadArgs, "give exactly one of --studies or --bridge");
  const auto files = collect(a.paths, trace::kTraceExtension);
  if (files.empty()) throw Error(Errc::EmptyInput, "no trace files found");

  std::unique_ptr<bridge::ViewerBackend> backend;
  std::unique_ptr<bridge::BridgeClient> client;
  if (!a.studies.empty()) {
    backend = std::make_unique<bridge::ViewerBackend>(open_store(a.studies));
    client = std::make_unique<bridge::LocalBridgeClient>(*backend);
  } else {
    client = bridge::HttpBridgeClient::from_url(a.bridge);
  }

  int failed = 0;
  for (const auto& f : files) {
    trace::ReplayVerdict v;
    try {
      const trace::EpisodeTrace t = trace::read_trace(f);
      v = trace::verify_replay(t, *client);
      if (v.pass && !t.complete()) {
        v = {false, static_cast<std::int64_t>(t.records.size() + 1), "trace has no footer (incomplete)"};
      }
    } catch (const Error& e) {
      if (e.code() == Errc::ChainBroken) {
        v = {false, e.detail().value("step", std::int64_t{-1}), e.message()};
      } else if (e.code() == Errc::Malformed) {
        v = {false, std::nullopt, "malformed: " + e.message()};
      } else {
        throw;
      }
    }
    if (!v.pass) ++failed;
    out << (v.pass ? "PASS" : (v.failed_step ? v.summary() : "FAIL: " + v.detail)) << "  " << f.string() << "\n";
  }
  out << files.size() - static_cast<std::size_t>(failed) << "/" << files.size() << " traces verified\n";
  return failed ? kExitVerifyFailed : kExitOk;
}

int cmd_score(const ScoreArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<runtime::EpisodeResult> results;
  for (const auto& dir : a.results) {
    auto part = runtime::load_results(dir);
    results.insert(results.end(), part.begin(), part.end());
  }
  runtime::StudyCatalog catalog(load_suite_index(a.suite));

  std::unique_ptr<scoring::Judge> judge;
  if (a.judge == "normalize") {
    judge = std::make_unique<scoring::NormalizingJudge>();
  } else if (a.judge.starts_with("external:")) {
    const fs::path cfg = a.judge.substr(9);
    judge = std::make_unique<scoring::ChatJudge>(
        std::make_shared<runtime::HttpChatEndpoint>(runtime::EndpointConfig::load(cfg)), "external:" + cfg.stem().string());
  } else {
    throw Error(Errc::BadArgs, "judge must be 'normalize' or 'external:<config.json>'");
  }

  std::map<std::tuple<ModuleKind, Track, std::string>, std::vector<scoring::CaseScore>> cells;
  for (const auto& r : results) {
    const auto entry = catalog.get(r.study_id);
    if (!entry->truth) throw Error(Errc::MissingFile, "study " + r.study_id + " has no truth.json");
    scoring::CaseScore cs = scoring::score_case(r, entry->tasks, *entry->truth, *judge);
    for (const auto& w : cs.warnings) err << r.episode_id << ": " << w << "\n";
    cells[{cs.module, cs.track, cs.agent_id}].push_back(std::move(cs));
  }

  const fs::path out_dir = a.out.empty() ? fs::path(a.results.front()) : fs::path(a.out);
  fs::create_directories(out_dir);
  std::vector<scoring::ScoreReport> reports;
  for (const auto& cases : cells | std::views::values) {
    reports.push_back(scoring::aggregate(cases, judge->id()));
    const auto& r = reports.back();
    write_file_text((out_dir / scoring::report_file_name(r)).string(), scoring::reports_csv({r}));
  }
  out << scoring::render_report(reports);
  return kExitOk;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const auto files = collect(a.paths, ".report.csv");
  std::vector<scoring::ScoreReport> reports;
  for (const auto& f : files) {
    auto part = scoring::read_report_csv(f);
    reports.insert(reports.end(), part.begin(), part.end());
  }
  if (reports.empty()) throw Error(Errc::EmptyInput, "no report rows found");
  out << scoring::render_report(reports);
  if (!a.csv.empty()) write_file_text(a.csv, scoring::reports_csv(reports));
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const std::atomic<bool>* cancel) {
  CLI::App app{"Auditable agent runtime and benchmark harness for volumetric imaging studies", "voxagent"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file; keys go under a [<command>] section, e.g. [run] agent = \"random\"");
  app.footer(
      "Exit codes: 0 ok, 1 verification failed, 2 usage, 3 input error, 4 infrastructure, 130 interrupted.\n"
      "Precedence: command-line flags > --config file > environment variables.");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic study suite");
  g->add_option("--seed", gen.seed, "generator seed")->required();
  g->add_option("--module", gen.module, "brain | chest")->required();
  g->add_option("--cases", gen.cases, "number of studies")->capture_default_str();
  g->add_option("--grid", gen.grid, "grid size N or NxNxN (each >= 16)")->capture_default_str();
  g->add_option("--budget", gen.budget, "default per-episode tool budget")->capture_default_str();
  g->add_option("--out", gen.out, "output suite directory")->required();

  ServeArgs serve;
  auto* s = app.add_subcommand("serve", "Serve the bridge protocol over HTTP with the simulated viewer");
  s->add_option("--addr", serve.addr, "host:port (port 0 picks a free port)")->capture_default_str()->envname("VOXAGENT_ADDR");
  s->add_option("--studies", serve.studies, "suite directory or study root")->required()->envname("VOXAGENT_STUDIES");

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run every episode of a suite with one agent");
  r->add_option("--suite", run.suite, "suite directory")->required()->envname("VOXAGENT_SUITE");
  r->add_option("--track", run.track, "A (viewer-only) | B (viewer + expert tools)")->capture_default_str()->envname("VOXAGENT_TRACK");
  r->add_option("--agent", run.agent,
                "oracle-viewer | oracle-tools[:noise=MM] | random[:seed=N] | external:CONFIG.json")
      ->capture_default_str()
      ->envname("VOXAGENT_AGENT");
  r->add_option("--budget", run.budget, "tool budget override")->envname("VOXAGENT_BUDGET");
  r->add_option("--protocol", run.protocol, "MCQ | OPEN (default: suite value)")->envname("VOXAGENT_PROTOCOL");
  r->add_option("--parallel", run.parallel, "concurrent episodes")->capture_default_str()->check(CLI::PositiveNumber)->envname("VOXAGENT_PARALLEL");
  r->add_option("--out", run.out, "output directory (traces/, results/, run.json)")->required()->envname("VOXAGENT_OUT");
  r->add_option("--bridge", run.bridge, "URL of a running bridge (default: embedded viewer)")->envname("VOXAGENT_BRIDGE_URL");
  r->add_flag("--embedded-viewer", run.embedded, "run the simulated viewer in-process (the default)");

  ReplayArgs replay;
  auto* p = app.add_subcommand("replay", "Verify traces by re-dispatching them against a fresh viewer");
  p->add_option("traces", replay.paths, "trace files or directories")->required();
  p->add_option("--studies", replay.studies, "suite directory or study root (embedded viewer)")->envname("VOXAGENT_STUDIES");
  p->add_option("--bridge", replay.bridge, "URL of a running bridge")->envname("VOXAGENT_BRIDGE_URL");

  ScoreArgs score;
  auto* sc = app.add_subcommand("score", "Score run results against suite truth and write report CSVs");
  sc->add_option("--results", score.results, "run output directories")->required();
  sc->add_option("--suite", score.suite, "suite directory")->required();
  sc->add_option("--out", score.out, "directory for <module>_<track>_<agent>.report.csv (default: first results dir)");
  sc->add_option("--judge", score.judge, "normalize | external:CONFIG.json (OPEN protocol)")->capture_default_str();

  ReportArgs report;
  auto* rp = app.add_subcommand("report", "Render report CSVs as tables");
  rp->add_option("reports", report.paths, "report CSV files or directories")->required();
  rp->add_option("--csv", report.csv, "also write all rows to one CSV file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen, out);
    if (s->parsed()) return cmd_serve(serve, out, cancel);
    if (r->parsed()) return cmd_run(run, out, err, cancel);
    if (p->parsed()) return cmd_replay(replay, out);
    if (sc->parsed()) return cmd_score(score, out, err);
    if (rp->parsed()) return cmd_report(report, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.message() << "\n";
    return e.code() == Errc::BadArgs ? kExitUsage : exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInfra;
  }
  return kExitUsage;
}

}  // namespace voxagent::cli
