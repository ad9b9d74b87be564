#include "voxagent/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>

#include "voxagent/digest.hpp"
#include "voxagent/error.hpp"
#include "voxagent/runtime/external.hpp"

namespace voxagent::scoring {

TaskScores score_mcq(const runtime::AnswerMap& answers, const std::vector<TaskSpec>& tasks, const GroundTruth& truth) {
  for (const auto& [task, a] : answers) {
    if (std::none_of(tasks.begin(), tasks.end(), [&](const TaskSpec& t) { return t.task_id == task; })) {
      throw Error(Errc::UnknownTask, "answer for unknown task '" + task + "'");
    }
  }
  TaskScores out;
  for (const auto& t : tasks) {
    bool ok = false;
    const auto a = answers.find(t.task_id);
    const auto want = truth.answers.find(t.task_id);
    if (a != answers.end() && a->second) {
      if (!t.find_option(*a->second)) {
        out.warnings.push_back("task " + t.task_id + ": '" + *a->second + "' is not an option");
      } else {
        ok = want != truth.answers.end() && want->second.option_id == *a->second;
      }
    }
    out.correct[t.task_id] = ok;
  }
  return out;
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
    } else if (std::ispunct(c)) {
      continue;
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  return out;
}

bool NormalizingJudge::equivalent(std::string_view answer, std::string_view canonical, std::string_view) {
  return normalize_answer(answer) == normalize_answer(canonical);
}

ChatJudge::ChatJudge(std::shared_ptr<runtime::ChatEndpoint> endpoint, std::string id)
    : endpoint_(std::move(endpoint)), id_(std::move(id)) {}

bool ChatJudge::equivalent(std::string_view answer, std::string_view canonical, std::string_view question) {
  const std::string prompt = "Question: " + std::string(question) + "\nReference answer: " + std::string(canonical) +
                             "\nCandidate answer: " + std::string(answer) +
                             "\nDoes the candidate answer mean the same as the reference? Reply with exactly yes or no.";
  std::string reply;
  try {
    reply = endpoint_->complete({{"user", prompt, {}}});
  } catch (const Error& e) {
    throw Error(Errc::JudgeUnavailable, e.message());
  }
  const std::string n = normalize_answer(reply);
  if (n.starts_with("yes")) return true;
  if (n.starts_with("no")) return false;
  throw Error(Errc::JudgeUnavailable, "judge reply is neither yes nor no: " + reply.substr(0, 80));
}

bool judge_open(std::string_view answer, std::string_view canonical, std::string_view question, Judge& judge) {
  if (normalize_answer(answer).empty()) return false;
  return judge.equivalent(answer, canonical, question);
}

CaseScore score_case(const runtime::EpisodeResult& result, const std::vector<TaskSpec>& tasks, const GroundTruth& truth,
                     Judge& judge) {
  CaseScore cs;
  cs.episode_id = result.episode_id;
  cs.study_id = result.study_id;
  cs.module = result.module;
  cs.track = result.track;
  cs.agent_id = result.agent_id;
  cs.tool_calls = result.tool_call_count;
  if (result.protocol == AnswerProtocol::Mcq) {
    TaskScores s = score_mcq(result.final_answers, tasks, truth);
    cs.per_task = std::move(s.correct);
    cs.warnings = std::move(s.warnings);
  } else {
    for (const auto& task : result.final_answers | std::views::keys) {
      if (std::none_of(tasks.begin(), tasks.end(), [&](const TaskSpec& t) { return t.task_id == task; })) {
        throw Error(Errc::UnknownTask, "answer for unknown task '" + task + "'");
      }
    }
    for (const auto& t : tasks) {
      const auto a = result.final_answers.find(t.task_id);
      const auto want = truth.answers.find(t.task_id);
      cs.per_task[t.task_id] = a != result.final_answers.end() && a->second && want != truth.answers.end() &&
                               judge_open(*a->second, want->second.text, t.question, judge);
    }
  }
  cs.case_correct = !cs.per_task.empty() &&
                    std::all_of(cs.per_task.begin(), cs.per_task.end(), [](const auto& kv) { return kv.second; });
  return cs;
}

ScoreReport aggregate(const std::vector<CaseScore>& cases, std::string judge_id) {
  if (cases.empty()) throw Error(Errc::EmptyInput, "no cases to aggregate");
  ScoreReport r;
  r.module = cases.front().module;
  r.track = cases.front().track;
  r.agent = cases.front().agent_id;
  r.judge = std::move(judge_id);
  std::int64_t case_ok = 0, q_ok = 0, q_total = 0, calls = 0;
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> per_task;  // correct, total
  for (const auto& c : cases) {
    if (c.module != r.module) throw Error(Errc::MixedModules, "cases from both BRAIN and CHEST");
    if (c.track != r.track || c.agent_id != r.agent) throw Error(Errc::BadArgs, "cases from more than one (track, agent) cell");
    case_ok += c.case_correct ? 1 : 0;
    calls += c.tool_calls;
    for (const auto& [task, ok] : c.per_task) {
      q_ok += ok ? 1 : 0;
      ++q_total;
      per_task[task].first += ok ? 1 : 0;
      ++per_task[task].second;
    }
  }
  const auto n = static_cast<double>(cases.size());
  r.n_cases = static_cast<std::int64_t>(cases.size());
  r.accuracy = static_cast<double>(case_ok) / n;
  r.question_level_accuracy = q_total ? static_cast<double>(q_ok) / static_cast<double>(q_total) : 0.0;
  r.avg_tool_calls = static_cast<double>(calls) / n;
  if (r.module == ModuleKind::Chest) {
    for (const auto& [task, ct] : per_task) r.per_task[task] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  return r;
}

std::string format_cell(double accuracy, double avg_tool_calls) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f (%.1f)", accuracy, avg_tool_calls);
  return buf;
}

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string csv_safe(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '"'; }, '_');
  return s;
}

std::string num(double v) { return nlohmann::json(v).dump(); }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == sep) out.emplace_back();
    else out.back().push_back(c);
  }
  return out;
}

std::string align(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      const std::string& cell = rows[r][i];
      const std::string pad(width[i] - cell.size(), ' ');
      line += i == 0 ? cell + pad : "  " + pad + cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t i = 0; i < width.size(); ++i) total += width[i] + (i ? 2 : 0);
      out += std::string(total, '-') + "\n";
    }
  }
  return out;
}


}  // namespace

std::string report_csv_row(const ScoreReport& r) {
  std::string row = std::string(module_tag(r.module)) + "," + std::string(track_tag(r.track)) + "," + csv_safe(r.agent) + "," +
                    std::to_string(r.n_cases) + "," + num(r.accuracy) + "," + num(r.question_level_accuracy);
  for (auto task : task_ids::kChest) {
    const auto it = r.per_task.find(std::string(task));
    row += "," + (it == r.per_task.end() ? std::string() : num(it->second));
  }
  row += "," + num(r.avg_tool_calls) + "," + csv_safe(r.judge);
  return row;
}

std::string reports_csv(const std::vector<ScoreReport>& reports) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (const auto& r : reports) out += report_csv_row(r) + "\n";
  return out;
}

std::vector<ScoreReport> read_report_csv(const std::filesystem::path& path) {
  const Bytes bytes = read_file_bytes(path.string());
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  if (!std::getline(in, line) || line != kReportCsvHeader) {
    throw Error(Errc::SchemaViolation, path.string() + ": missing or unexpected CSV header");
  }
  std::vector<ScoreReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 13) throw Error(Errc::SchemaViolation, path.string() + ": expected 13 fields");
    try {
      ScoreReport r;
      r.module = parse_module(f[0]);
      r.track = parse_track(f[1]);
      r.agent = f[2];
      r.n_cases = std::stoll(f[3]);
      r.accuracy = std::stod(f[4]);
      r.question_level_accuracy = std::stod(f[5]);
      for (std::size_t k = 0; k < task_ids::kChest.size(); ++k) {
        if (!f[6 + k].empty()) r.per_task[std::string(task_ids::kChest[k])] = std::stod(f[6 + k]);
      }
      r.avg_tool_calls = std::stod(f[11]);
      r.judge = f[12];
      out.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw Error(Errc::SchemaViolation, path.string() + ": bad number: " + e.what());
    }
  }
  return out;
}

std::string report_file_name(const ScoreReport& r) {
  std::string agent = r.agent;
  for (char& c : agent) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') c = '_';
  }
  std::string module(module_tag(r.module));
  std::transform(module.begin(), module.end(), module.begin(), [](unsigned char c) { return std::tolower(c); });
  return module + "_" + std::string(track_tag(r.track)) + "_" + agent + ".report.csv";
}

std::string render_viewer_grid(const std::vector<ScoreReport>& reports) {
  std::set<std::string> columns;
  std::set<std::string> agents;
  std::map<std::pair<std::string, std::string>, std::string> cells;
  for (const auto& r : reports) {
    if (r.track != Track::A) continue;
    const std::string column(module_tag(r.module));
    columns.insert(column);
    agents.insert(r.agent);
    cells[{r.agent, column}] = format_cell(r.accuracy, r.avg_tool_calls);
  }
  std::vector<std::vector<std::string>> rows{{"agent"}};
  for (const auto& c : columns) rows[0].push_back(c);
  for (const auto& a : agents) {
    std::vector<std::string> row{a};
    for (const auto& c : columns) {
      const auto it = cells.find({a, c});
      row.push_back(it == cells.end() ? "-" : it->second);
    }
    rows.push_back(std::move(row));
  }
  return align(rows);
}

std::string render_tool_ablation(const std::vector<ScoreReport>& reports) {
  std::vector<const ScoreReport*> sorted;
  for (const auto& r : reports) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const ScoreReport* a, const ScoreReport* b) {
    return std::tuple(a->agent, a->module, a->track) < std::tuple(b->agent, b->module, b->track);
  });
  std::vector<std::vector<std::string>> rows{
      {"system", "module", "accuracy (calls)", "question-level", "location", "t_stage", "n_stage", "histology", "grade"}};
  for (const ScoreReport* r : sorted) {
    std::vector<std::string> row{r->agent + (r->track == Track::A ? " with primitive tools" : " + with segmentation toolpacks"),
                                 std::string(module_tag(r->module)), format_cell(r->accuracy, r->avg_tool_calls),
                                 fmt2(r->question_level_accuracy)};
    for (auto task : task_ids::kChest) {
      const auto it = r->per_task.find(std::string(task));
      row.push_back(it == r->per_task.end() ? "-" : fmt2(it->second));
    }
    rows.push_back(std::move(row));
  }
  return align(rows);
}

std::string render_report(const std::vector<ScoreReport>& reports) {
  std::string out;
  if (std::any_of(reports.begin(), reports.end(), [](const ScoreReport& r) { return r.track == Track::A; })) {
    out += "Viewer-only accuracy (avg. tool calls), track A\n\n" + render_viewer_grid(reports) + "\n";
  }
  return out + "Tool-use ablation\n\n" + render_tool_ablation(reports);
}

}  // namespace voxagent::scoring
