#include "voxagent/bridge/backend.hpp"

#include <cstdio>

#include "voxagent/error.hpp"
#include "voxagent/segment.hpp"
#include "voxagent/study_io.hpp"

namespace voxagent::bridge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json stats_json(const MaskStats& s) {
  return {{"voxel_count", s.voxel_count},
          {"volume_mm3", s.volume_mm3},
          {"centroid_mm", vec_json(s.centroid_mm)},
          {"mean_intensity", s.mean_intensity},
          {"max_diameter_mm", s.max_diameter_mm}};
}

/// World position of pixel (0, 0) and the per-row / per-column steps.
json pixel_geometry(const Volume& v, Orientation o, std::int64_t index) {
  const Vec3& s = v.spacing();
  Index3 corner;
  Vec3 row_step, col_step;
  switch (o) {
    case Orientation::Axial: corner = {0, 0, index}, row_step = {0, s.y, 0}, col_step = {s.x, 0, 0}; break;
    case Orientation::Coronal: corner = {0, index, 0}, row_step = {0, 0, s.z}, col_step = {s.x, 0, 0}; break;
    case Orientation::Sagittal: corner = {index, 0, 0}, row_step = {0, 0, s.z}, col_step = {0, s.y, 0}; break;
  }
  return {{"pixel00_mm", vec_json(voxel_center(v, corner))}, {"row_step_mm", vec_json(row_step)},
          {"col_step_mm", vec_json(col_step)}};
}

}  // namespace

void StudyStore::add(StudyPackage pkg) {
  pkg.truth.reset();
  std::lock_guard lock(mu_);
  const std::string id = pkg.study_id;
  cache_[id] = std::make_shared<const StudyPackage>(std::move(pkg));
}

std::shared_ptr<const StudyPackage> StudyStore::get(const std::string& study_id) {
  std::lock_guard lock(mu_);
  if (auto it = cache_.find(study_id); it != cache_.end()) return it->second;
  if (root_.empty() || study_id.empty() || study_id.find('/') != std::string::npos || study_id.find("..") != std::string::npos) {
    throw Error(Errc::UnknownStudy, "unknown study '" + study_id + "'");
  }
  for (const fs::path& dir : {root_ / study_id, root_ / "studies" / study_id}) {
    if (fs::exists(dir / kManifestName)) {
      StudyPackage pkg = load_study_package(dir);
      pkg.truth.reset();
      auto ptr = std::make_shared<const StudyPackage>(std::move(pkg));
      cache_[study_id] = ptr;
      return ptr;
    }
  }
  throw Error(Errc::UnknownStudy, "unknown study '" + study_id + "'");
}

struct ViewerBackend::Slot {
  Slot(std::shared_ptr<const StudyPackage> study, std::string id, TrackPolicy p)
      : session(std::move(study), std::move(id)), policy(std::move(p)) {}

  std::mutex mu;
  ViewerSession session;
  TrackPolicy policy;
  std::int64_t last_call_id = 0;
  bool closed = false;
};

ViewerBackend::ViewerBackend(std::shared_ptr<StudyStore> store)
    : store_(std::move(store)), exec_counts_(new std::atomic<std::uint64_t>[tool_registry().size()]) {
  for (std::size_t i = 0; i < tool_registry().size(); ++i) exec_counts_[i] = 0;
}

ViewerBackend::~ViewerBackend() = default;

std::string ViewerBackend::open_session(const std::string& study_id, const TrackPolicy& policy) {
  if (policy.tool_budget < 0) throw Error(Errc::BadArgs, "budget must be >= 0");
  auto study = store_->get(study_id);
  std::lock_guard lock(mu_);
  char id[32];
  std::snprintf(id, sizeof id, "s-%06llu", static_cast<unsigned long long>(next_session_++));
  sessions_[id] = std::make_shared<Slot>(std::move(study), id, policy);
  return id;
}

std::shared_ptr<ViewerBackend::Slot> ViewerBackend::find(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second;
}

void ViewerBackend::close_session(const std::string& session_id) {
  std::shared_ptr<Slot> slot;
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(Errc::BadSession, "no open session '" + session_id + "'");
    slot = it->second;
    sessions_.erase(it);
  }
  std::lock_guard slot_lock(slot->mu);  // wait for an in-flight call
  slot->closed = true;
}

json ViewerBackend::state(const std::string& session_id) {
  auto slot = find(session_id);
  if (!slot) throw Error(Errc::BadSession, "no open session '" + session_id + "'");
  std::lock_guard lock(slot->mu);
  if (slot->closed) throw Error(Errc::BadSession, "session closed");
  json s = state_json(slot->session.state());
  s["session_id"] = slot->session.state().session_id;
  return {{"state", s}, {"state_digest", state_digest(slot->session.state())}};
}

std::uint64_t ViewerBackend::executions(std::string_view tool) const {
  const auto& reg = tool_registry();
  for (std::size_t i = 0; i < reg.size(); ++i) {
    if (reg[i].name == tool) return exec_counts_[i].load();
  }
  return 0;
}

std::size_t ViewerBackend::open_session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

ToolResult ViewerBackend::invoke(const ToolCall& call) {
  auto fail = [](Status status, std::string reason, std::string message, std::string digest) {
    ToolResult r;
    r.status = status;
    r.reason = std::move(reason);
    r.message = std::move(message);
    r.state_digest = std::move(digest);
    return r;
  };

  auto slot = find(call.session_id);
  if (!slot) return fail(Status::BadSession, "BadSession", "no open session '" + call.session_id + "'", "");
  std::lock_guard lock(slot->mu);
  if (slot->closed) return fail(Status::BadSession, "BadSession", "session closed", "");

  ViewerSession& session = slot->session;
  const std::string pre = state_digest(session.state());
  if (call.call_id <= slot->last_call_id) {
    return fail(Status::BadArgs, "CallIdNotIncreasing",
                "call_id must exceed " + std::to_string(slot->last_call_id), pre);
  }
  slot->last_call_id = call.call_id;
  if (call.call_id > slot->policy.tool_budget) {
    return fail(Status::Budget, "BudgetExceeded",
                "tool budget of " + std::to_string(slot->policy.tool_budget) + " calls exhausted", pre);
  }
  const ToolDescriptor* tool = find_tool(call.tool);
  if (!tool) return fail(Status::UnknownTool, "UnknownTool", "no tool named '" + call.tool + "'", pre);
  if (!slot->policy.allows(tool->layer)) {
    return fail(Status::TrackForbidden, "TrackForbidden",
                "layer-" + std::to_string(tool->layer) + " tool '" + tool->name + "' is not available on track " +
                    std::string(track_tag(slot->policy.track)),
                pre);
  }
  json args;
  try {
    args = validate_call(*tool, call.args);
  } catch (const Error& e) {
    ToolResult r = fail(Status::BadArgs, "BadArgs", e.message(), pre);
    r.payload = {{"diagnostics", e.detail()}};
    return r;
  }

  exec_counts_[static_cast<std::size_t>(tool - tool_registry().data())].fetch_add(1);
  const ViewerSession backup = session;
  ToolResult r;
  try {
    const std::string& name = tool->name;
    if (name == "list_series") {
      json series = json::array();
      for (const auto& m : session.list_series()) {
        series.push_back({{"series_id", m.series_id}, {"modality", modality_tag(m.modality)}, {"description", m.description}});
      }
      const Volume& g = session.study().grid();
      r.payload = {{"series", series},
                   {"grid",
                    {{"dims", {g.dims().nx, g.dims().ny, g.dims().nz}},
                     {"spacing_mm", vec_json(g.spacing())},
                     {"origin_mm", vec_json(g.origin())}}}};
    } else if (name == "select_series") {
      session.select_series(args["series_id"].get<std::string>());
      r.payload = state_summary(session.state());
    } else if (name == "set_slice") {
      session.set_slice(parse_orientation(args["orientation"].get<std::string>()), args["index"].get<std::int64_t>());
      r.payload = state_summary(session.state());
    } else if (name == "set_window") {
      session.set_window(args["center"].get<double>(), args["width"].get<double>());
      r.payload = state_summary(session.state());
    } else if (name == "set_fusion") {
      session.set_fusion(args["overlay_series"].get<std::string>(), args["alpha"].get<double>());
      r.payload = state_summary(session.state());
    } else if (name == "render") {
      RenderOutput out = session.render();
      const auto& st = session.state();
      const std::int64_t idx = st.slice_index[static_cast<std::size_t>(st.orientation)];
      r.payload = state_summary(st);
      r.payload["image"] = {{"width", out.image.width},
                            {"height", out.image.height},
                            {"artifact_id", out.png.id},
                            {"geometry", pixel_geometry(session.active_volume(), st.orientation, idx)}};
      r.image_png = out.png.bytes;
      r.artifacts.push_back(std::move(out.png));
    } else if (name == "bookmark_view") {
      BookmarkOutput out = session.bookmark_view(args["label"].get<std::string>());
      r.payload = {{"bookmark_id", out.bookmark_id},
                   {"state_digest", session.state().bookmarks.back().state_digest},
                   {"render_artifact_id", out.render.id}};
      r.artifacts.push_back(std::move(out.render));
    } else if (name == "measure_distance") {
      const double d = session.measure_distance(vec_from(args["p1"]), vec_from(args["p2"]));
      r.payload = {{"distance_mm", d}, {"step", session.state().step_counter}};
    } else if (name == "export_evidence") {
      Artifact bundle = session.export_evidence();
      const json parsed = json::parse(bundle.bytes.begin(), bundle.bytes.end());
      r.payload = {{"bundle_id", bundle.id}, {"item_count", parsed["items"].size()}};
      r.artifacts.push_back(std::move(bundle));
    } else if (name == "local_threshold_segment") {
      const std::string series_id = session.state().active_series;
      const SegmentationParams params{vec_from(args["seed_mm"]), args["lo"].get<double>(), args["hi"].get<double>(),
                                      args["max_radius_mm"].get<double>()};
      const SegmentationMask mask = local_threshold_segment(session.active_volume(), series_id, params);
      const MaskStats stats = mask_stats(mask, session.active_volume());
      Artifact art = Artifact::make("mask/rle", encode_mask(mask));
      const std::string mask_id = session.record_mask(mask, art.id);
      r.payload = {{"mask_id", mask_id}, {"series_id", series_id}, {"artifact_id", art.id}, {"stats", stats_json(stats)}};
      r.artifacts.push_back(std::move(art));
    } else if (name == "mask_stats") {
      const std::string mask_id = args["mask_id"].get<std::string>();
      const SegmentationMask* mask = session.find_mask(mask_id);
      if (!mask) throw Error(Errc::BadArgs, "no mask '" + mask_id + "' in this session");
      const Series* series = session.study().find_series(mask->series_id);
      r.payload = {{"mask_id", mask_id}, {"series_id", mask->series_id}, {"stats", stats_json(mask_stats(*mask, series->volume))}};
    }
  } catch (const Error& e) {
    session = backup;
    return fail(status_for(e.code()), std::string(to_string(e.code())), e.message(), pre);
  }
  r.state_digest = state_digest(session.state());
  return r;
}

}  // namespace voxagent::bridge
