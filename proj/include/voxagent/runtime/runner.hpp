#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "voxagent/runtime/agent.hpp"
#include "voxagent/runtime/scripted.hpp"
#include "voxagent/suite.hpp"

namespace voxagent::runtime {

/// CLI agent selector:
///   oracle-viewer | oracle-tools[:noise=<mm>] | random[:seed=<n>] | external:<config.json>
struct AgentSpec {
  enum class Kind { OracleViewer, OracleTools, Random, External };
  Kind kind = Kind::OracleViewer;
  double noise_mm = 0;
  std::uint64_t seed = 0;
  std::filesystem::path config;

  /// Throws BadArgs.
  static AgentSpec parse(std::string_view text);
  std::string name() const;
};

/// Per-study manifest facts, loaded once and shared by episode workers.
class StudyCatalog {
 public:
  explicit StudyCatalog(SuiteIndex suite) : suite_(std::move(suite)) {}

  struct Entry {
    ModuleKind module = ModuleKind::Brain;
    std::vector<TaskSpec> tasks;
    std::optional<GroundTruth> truth;
  };
  /// Errors from load_study_package (MissingFile, ChecksumMismatch, ...).
  std::shared_ptr<const Entry> get(const std::string& study_id);
  const SuiteIndex& suite() const { return suite_; }

 private:
  SuiteIndex suite_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Entry>> cache_;
};

/// Oracle knowledge read from the suite's sealed truth files.
KnowledgeLookup suite_knowledge(std::shared_ptr<StudyCatalog> catalog);

struct SuiteRunConfig {
  Track track = Track::A;
  std::optional<int> budget;                // overrides the suite's per-episode budget
  std::optional<AnswerProtocol> protocol;   // overrides the suite's protocol
  AgentSpec agent;
  int parallel = 1;
  /// <out>/traces/<episode>.trace.jsonl, <out>/traces/artifacts/<digest>,
  /// <out>/results/<episode>.result.json, <out>/run.json
  std::filesystem::path out_dir;
  const std::atomic<bool>* cancel = nullptr;
  trace::TraceWriter::Clock clock = trace::rfc3339_now;
};

/// Runs every suite episode. Results come back in suite order; once
/// `cancel` is set, episodes not yet started are skipped.
std::vector<EpisodeResult> run_suite(std::shared_ptr<StudyCatalog> catalog, const SuiteRunConfig& config,
                                     bridge::BridgeClient& bridge);

/// Reads <dir>/results/*.result.json (or <dir>/*.result.json), sorted by
/// episode id. Throws EmptyInput when none exist.
std::vector<EpisodeResult> load_results(const std::filesystem::path& dir);

}  // namespace voxagent::runtime
