#include "voxagent/runtime/scripted.hpp"

#include <cmath>
#include <cstdio>
#include <deque>

#include "voxagent/error.hpp"
#include "voxagent/rng.hpp"
#include "voxagent/synth.hpp"

namespace voxagent::runtime {

using nlohmann::json;

namespace {

class RandomAgent final : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : seed_(seed) {}

  std::string id() const override { return "random:seed=" + std::to_string(seed_); }

  void begin(const EpisodeContext& ctx) override { ctx_ = ctx; }

  AgentTurn next(const Observation&) override {
    Rng rng(mix_seed(seed_, ctx_.episode.rng_seed));
    FinalAnswer fa;
    for (const auto& t : ctx_.tasks) {
      if (ctx_.episode.protocol == AnswerProtocol::Open || t.options.empty()) {
        fa.answers[t.task_id] = "unknown";
      } else {
        fa.answers[t.task_id] = t.options[rng.below(t.options.size())].id;
      }
    }
    return fa;
  }

 private:
  std::uint64_t seed_;
  EpisodeContext ctx_;
};

struct Grid {
  Vec3 origin;
  Vec3 spacing;
  std::int64_t nz = 1;
};

class OracleAgent final : public Agent {
 public:
  OracleAgent(OracleMode mode, double noise, KnowledgeLookup lookup)
      : mode_(mode), noise_(noise), lookup_(std::move(lookup)) {}

  std::string id() const override {
    if (mode_ == OracleMode::Viewer) return "oracle-viewer";
    char buf[64];
    std::snprintf(buf, sizeof buf, "oracle-tools:noise=%g", noise_);
    return buf;
  }

  void begin(const EpisodeContext& ctx) override {
    ctx_ = ctx;
    know_ = lookup_(ctx.episode.study_id);
    plan_.clear();
    started_ = false;
    seg_.reset();
  }

  AgentTurn next(const Observation& obs) override {
    if (obs.kind == ObservationKind::ToolResult && obs.result) {
      if (obs.tool == "list_series" && obs.result->ok()) build_plan(obs.result->payload);
      if (obs.tool == "local_threshold_segment") seg_ = obs.result->ok() ? obs.result->payload["stats"] : json();
    }
    if (obs.forced_answer) return answer();
    if (!started_) {
      started_ = true;
      return ToolRequest{"list_series", json::object()};
    }
    if (plan_.empty()) return answer();
    ToolRequest r = std::move(plan_.front());
    plan_.pop_front();
    return r;
  }

 private:
  bool tools_path() const { return mode_ == OracleMode::Tools && ctx_.module == ModuleKind::Chest; }

  static std::string pick_series(const json& series, std::string_view modality) {
    for (const auto& s : series) {
      if (s["modality"] == modality) return s["series_id"].get<std::string>();
    }
    return series.empty() ? std::string() : series[0]["series_id"].get<std::string>();
  }

  void build_plan(const json& listing) {
    const json& series = listing["series"];
    const json& g = listing["grid"];
    Grid grid{{g["origin_mm"][0], g["origin_mm"][1], g["origin_mm"][2]},
              {g["spacing_mm"][0], g["spacing_mm"][1], g["spacing_mm"][2]},
              g["dims"][2].get<std::int64_t>()};
    const bool chest = ctx_.module == ModuleKind::Chest;
    const std::string primary = pick_series(series, chest ? "PET" : "MR-FLAIR");
    const std::string secondary = pick_series(series, chest ? "CT" : "MR-T1c");

    if (tools_path()) {
      const LesionTruth& lesion = know_.truth.lesions.at(0);
      Rng rng(mix_seed(ctx_.episode.rng_seed, 0x5EEDu));
      const Vec3 dir{rng.gaussian(), rng.gaussian(), rng.gaussian()};
      const Vec3 seed{lesion.centroid_mm.x + noise_ * dir.x, lesion.centroid_mm.y + noise_ * dir.y,
                      lesion.centroid_mm.z + noise_ * dir.z};
      plan_.push_back({"select_series", {{"series_id", primary}}});
      plan_.push_back({"local_threshold_segment",
                       {{"seed_mm", {seed.x, seed.y, seed.z}},
                        {"lo", static_cast<double>(synth::kPetLesionThreshold)},
                        {"hi", 32767.0},
                        {"max_radius_mm", 80.0}}});
      return;
    }

    std::int64_t z = grid.nz / 2;
    if (!know_.truth.lesions.empty()) {
      z = std::llround((know_.truth.lesions[0].centroid_mm.z - grid.origin.z) / grid.spacing.z);
    }
    plan_.push_back({"select_series", {{"series_id", primary}}});
    plan_.push_back({"set_window", chest ? json{{"center", 1500.0}, {"width", 3000.0}} : json{{"center", 900.0}, {"width", 1400.0}}});
    plan_.push_back({"set_slice", {{"orientation", "axial"}, {"index", z}}});
    plan_.push_back({"render", json::object()});
    plan_.push_back({"select_series", {{"series_id", secondary}}});
    plan_.push_back({"render", json::object()});
    plan_.push_back({"bookmark_view", {{"label", "finding"}}});
  }

  std::string option_answer(const std::string& task_id, int index) const {
    if (ctx_.episode.protocol == AnswerProtocol::Mcq) return synth::option_id(index);
    for (const auto& t : know_.tasks) {
      if (t.task_id == task_id && index >= 0 && static_cast<std::size_t>(index) < t.options.size()) {
        return t.options[static_cast<std::size_t>(index)].text;
      }
    }
    return "unknown";
  }

  std::string truth_answer(const std::string& task_id) const {
    const auto it = know_.truth.answers.find(task_id);
    if (it == know_.truth.answers.end()) return "unknown";
    return ctx_.episode.protocol == AnswerProtocol::Mcq ? it->second.option_id : it->second.text;
  }

  FinalAnswer answer() const {
    FinalAnswer fa;
    for (const auto& t : ctx_.tasks) fa.answers[t.task_id] = truth_answer(t.task_id);
    if (!tools_path()) return fa;

    int location = 0, t_stage = 0, histology = 0, grade = 0;
    if (seg_ && !seg_->is_null()) {
      const json& s = *seg_;
      const Vec3 c{s["centroid_mm"][0], s["centroid_mm"][1], s["centroid_mm"][2]};
      location = synth::lobe_for_point(c).value_or(0);
      t_stage = synth::t_stage_for_diameter(s["max_diameter_mm"].get<double>());
      std::tie(histology, grade) = synth::decode_uptake(s["mean_intensity"].get<double>());
    }
    const auto set = [&](std::string_view task, int index) {
      const std::string id(task);
      if (fa.answers.contains(id)) fa.answers[id] = option_answer(id, index);
    };
    set(task_ids::kLocation, location);
    set(task_ids::kTStage, t_stage);
    set(task_ids::kHistology, histology);
    set(task_ids::kGrade, grade);
    return fa;
  }

  OracleMode mode_;
  double noise_;
  KnowledgeLookup lookup_;
  EpisodeContext ctx_;
  OracleKnowledge know_;
  std::deque<ToolRequest> plan_;
  bool started_ = false;
  std::optional<json> seg_;
};

}  // namespace

std::unique_ptr<Agent> random_agent(std::uint64_t seed) { return std::make_unique<RandomAgent>(seed); }

std::unique_ptr<Agent> oracle_agent(OracleMode mode, double seed_noise_mm, KnowledgeLookup lookup) {
  if (!(seed_noise_mm >= 0)) throw Error(Errc::BadArgs, "seed noise must be >= 0");
  return std::make_unique<OracleAgent>(mode, seed_noise_mm, std::move(lookup));
}

}  // namespace voxagent::runtime
