#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxagent/runtime/agent.hpp"
#include "voxagent/study.hpp"

namespace voxagent::runtime {
class ChatEndpoint;
}

namespace voxagent::scoring {

struct TaskScores {
  std::map<std::string, bool> correct;
  std::vector<std::string> warnings;
};

/// Exact option-id match per task; unanswered or not-an-option -> false
/// (the latter with a warning). Throws UnknownTask for answers to tasks the
/// study does not have.
TaskScores score_mcq(const runtime::AnswerMap& answers, const std::vector<TaskSpec>& tasks, const GroundTruth& truth);

/// Open-ended answer equivalence: (answer, canonical, question) -> bool.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual std::string id() const = 0;
  virtual bool equivalent(std::string_view answer, std::string_view canonical, std::string_view question) = 0;
};

/// Lowercase, trim, collapse whitespace, strip punctuation.
std::string normalize_answer(std::string_view text);

class NormalizingJudge final : public Judge {
 public:
  std::string id() const override { return "normalize"; }
  bool equivalent(std::string_view answer, std::string_view canonical, std::string_view question) override;
};

/// Asks a chat model for a yes/no verdict. Throws JudgeUnavailable when the
/// endpoint fails or replies with neither.
class ChatJudge final : public Judge {
 public:
  ChatJudge(std::shared_ptr<runtime::ChatEndpoint> endpoint, std::string id);
  std::string id() const override { return id_; }
  bool equivalent(std::string_view answer, std::string_view canonical, std::string_view question) override;

 private:
  std::shared_ptr<runtime::ChatEndpoint> endpoint_;
  std::string id_;
};

/// Empty answers are never equivalent.
bool judge_open(std::string_view answer, std::string_view canonical, std::string_view question, Judge& judge);

struct CaseScore {
  std::string episode_id;
  std::string study_id;
  ModuleKind module = ModuleKind::Brain;
  Track track = Track::A;
  std::string agent_id;
  std::map<std::string, bool> per_task;
  /// BRAIN: the single task; CHEST: all five.
  bool case_correct = false;
  int tool_calls = 0;
  std::vector<std::string> warnings;
};

/// Scores one episode against the study's truth (MCQ or OPEN per the
/// result's protocol; OPEN uses `judge`).
CaseScore score_case(const runtime::EpisodeResult& result, const std::vector<TaskSpec>& tasks, const GroundTruth& truth,
                     Judge& judge);

struct ScoreReport {
  ModuleKind module = ModuleKind::Brain;
  Track track = Track::A;
  std::string agent;
  std::int64_t n_cases = 0;
  double accuracy = 0;                 // case-level (brain) / case-exact (chest)
  double question_level_accuracy = 0;  // equals accuracy for brain
  std::map<std::string, double> per_task;
  double avg_tool_calls = 0;
  std::string judge = "normalize";
};

/// Errors: EmptyInput; MixedModules (more than one module); BadArgs (more
/// than one track or agent).
ScoreReport aggregate(const std::vector<CaseScore>& cases, std::string judge_id = "normalize");

/// "0.61 (5.9)": accuracy to 2 decimals, calls to 1.
std::string format_cell(double accuracy, double avg_tool_calls);

inline constexpr std::string_view kReportCsvHeader =
    "module,track,agent,n_cases,accuracy,question_level_accuracy,location,t_stage,n_stage,histology,grade,avg_tool_calls,"
    "judge";

std::string report_csv_row(const ScoreReport& r);
/// Header plus one row per report.
std::string reports_csv(const std::vector<ScoreReport>& reports);
/// Errors: MissingFile, SchemaViolation.
std::vector<ScoreReport> read_report_csv(const std::filesystem::path& path);
/// "<module>_<track>_<agent>.report.csv", agent reduced to [A-Za-z0-9._-].
std::string report_file_name(const ScoreReport& r);

/// Viewer-only grid over track A reports: one row per agent, one
/// "acc (calls)" column per module.
std::string render_viewer_grid(const std::vector<ScoreReport>& reports);
/// Tool-use ablation: per agent, a "with primitive tools" row (track A) and
/// a "+ with segmentation toolpacks" row (track B), with chest per-task columns.
std::string render_tool_ablation(const std::vector<ScoreReport>& reports);
/// Both tables.
std::string render_report(const std::vector<ScoreReport>& reports);

}  // namespace voxagent::scoring
