#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "voxagent/bridge/protocol.hpp"
#include "voxagent/bridge/registry.hpp"
#include "voxagent/study.hpp"

namespace voxagent::bridge {

/// Resolves study ids to immutable packages shared by all sessions.
/// Ground truth is dropped on the way in; the viewer never holds answers.
class StudyStore {
 public:
  StudyStore() = default;
  /// Looks up <root>/<id> and then <root>/studies/<id>, loading lazily.
  explicit StudyStore(std::filesystem::path root) : root_(std::move(root)) {}

  void add(StudyPackage pkg);
  /// Throws UnknownStudy when the id resolves nowhere.
  std::shared_ptr<const StudyPackage> get(const std::string& study_id);

 private:
  std::filesystem::path root_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const StudyPackage>> cache_;
};

/// Simulated viewer backend: owns sessions and executes registered tools.
/// Sessions are independent; calls on one session are serialized.
class ViewerBackend {
 public:
  explicit ViewerBackend(std::shared_ptr<StudyStore> store);
  ~ViewerBackend();

  std::string open_session(const std::string& study_id, const TrackPolicy& policy);
  /// Throws BadSession for unknown or already-closed sessions.
  void close_session(const std::string& session_id);
  /// Gate -> validate -> execute. Never throws for protocol-level failures;
  /// they come back as non-OK results with the pre-call state digest.
  ToolResult invoke(const ToolCall& call);
  /// {"state": ..., "state_digest": ...}. Throws BadSession.
  nlohmann::json state(const std::string& session_id);

  /// Number of times a tool's implementation was entered (all sessions).
  std::uint64_t executions(std::string_view tool) const;
  std::size_t open_session_count() const;

 private:
  struct Slot;
  std::shared_ptr<Slot> find(const std::string& session_id) const;

  std::shared_ptr<StudyStore> store_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t next_session_ = 1;
  std::unique_ptr<std::atomic<std::uint64_t>[]> exec_counts_;
};

}  // namespace voxagent::bridge
