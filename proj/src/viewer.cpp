#include "voxagent/viewer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "voxagent/error.hpp"

namespace voxagent {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

std::string sequential_id(const char* prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%04zu", prefix, n);
  return buf;
}

}  // namespace

std::string_view orientation_tag(Orientation o) {
  switch (o) {
    case Orientation::Axial: return "axial";
    case Orientation::Coronal: return "coronal";
    case Orientation::Sagittal: return "sagittal";
  }
  return "";
}

Orientation parse_orientation(std::string_view tag) {
  if (tag == "axial") return Orientation::Axial;
  if (tag == "coronal") return Orientation::Coronal;
  if (tag == "sagittal") return Orientation::Sagittal;
  throw Error(Errc::BadArgs, "unknown orientation '" + std::string(tag) + "'");
}

std::int64_t slice_extent(const GridDims& dims, Orientation o) {
  switch (o) {
    case Orientation::Axial: return dims.nz;
    case Orientation::Coronal: return dims.ny;
    case Orientation::Sagittal: return dims.nx;
  }
  return 1;
}

Artifact Artifact::make(std::string kind, Bytes bytes) {
  Artifact a;
  a.id = sha256_hex(bytes);
  a.kind = std::move(kind);
  a.bytes = std::move(bytes);
  return a;
}

json view_json(const ViewerState& s) {
  json fusion = nullptr;
  if (s.fusion) fusion = {{"overlay_series", s.fusion->overlay_series}, {"alpha", s.fusion->alpha}};
  return {{"study_id", s.study_id},
          {"active_series", s.active_series},
          {"orientation", orientation_tag(s.orientation)},
          {"slice_index",
           {{"axial", s.slice_index[0]}, {"coronal", s.slice_index[1]}, {"sagittal", s.slice_index[2]}}},
          {"window", {{"center", s.window.center}, {"width", s.window.width}}},
          {"fusion", fusion}};
}

json state_json(const ViewerState& s) {
  json j = view_json(s);
  json bookmarks = json::array();
  for (const auto& b : s.bookmarks) {
    bookmarks.push_back({{"bookmark_id", b.bookmark_id},
                         {"label", b.label},
                         {"state_digest", b.state_digest},
                         {"render_artifact_id", b.render_artifact_id}});
  }
  json measurements = json::array();
  for (const auto& m : s.measurements) {
    measurements.push_back(
        {{"p1", vec_json(m.p1)}, {"p2", vec_json(m.p2)}, {"distance_mm", m.distance_mm}, {"step", m.step}});
  }
  json masks = json::array();
  for (const auto& m : s.masks) {
    masks.push_back({{"mask_id", m.mask_id}, {"artifact_id", m.artifact_id}, {"series_id", m.series_id}, {"step", m.step}});
  }
  j["bookmarks"] = std::move(bookmarks);
  j["measurements"] = std::move(measurements);
  j["masks"] = std::move(masks);
  j["step_counter"] = s.step_counter;
  return j;
}

std::string view_digest(const ViewerState& s) { return digest_of(view_json(s)); }
std::string state_digest(const ViewerState& s) { return digest_of(state_json(s)); }

json state_summary(const ViewerState& s) {
  json j = view_json(s);
  j["step_counter"] = s.step_counter;
  j["effective_slice"] = s.slice_index[static_cast<std::size_t>(s.orientation)];
  return j;
}

std::uint8_t window_pixel(double value, const Window& window) {
  const double t = std::clamp((value - window.center + window.width / 2.0) / window.width, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::round(255.0 * t));
}

GrayImage render_slice(const Volume& volume, Orientation o, std::int64_t index, const Window& window) {
  const GridDims& d = volume.dims();
  if (index < 0 || index >= slice_extent(d, o)) throw Error(Errc::OutOfBounds, "slice index outside volume");
  GrayImage img;
  switch (o) {
    case Orientation::Axial: img.height = static_cast<int>(d.ny), img.width = static_cast<int>(d.nx); break;
    case Orientation::Coronal: img.height = static_cast<int>(d.nz), img.width = static_cast<int>(d.nx); break;
    case Orientation::Sagittal: img.height = static_cast<int>(d.nz), img.width = static_cast<int>(d.ny); break;
  }
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      Index3 idx;
      switch (o) {
        case Orientation::Axial: idx = {c, r, index}; break;
        case Orientation::Coronal: idx = {c, index, r}; break;
        case Orientation::Sagittal: idx = {index, c, r}; break;
      }
      img.pixels[static_cast<std::size_t>(r) * img.width + c] = window_pixel(volume.at(idx), window);
    }
  }
  return img;
}

GrayImage blend(const GrayImage& base, const GrayImage& overlay, double alpha) {
  if (base.width != overlay.width || base.height != overlay.height) throw Error(Errc::BadArgs, "blend size mismatch");
  GrayImage out = base;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(std::round((1.0 - alpha) * base.pixels[i] + alpha * overlay.pixels[i]));
  }
  return out;
}

Window default_window(Modality m) {
  switch (m) {
    case Modality::Ct: return {40, 400};
    case Modality::Pet: return {1500, 3000};
    default: return {800, 1600};
  }
}

ViewerSession::ViewerSession(std::shared_ptr<const StudyPackage> study, std::string session_id)
    : study_(std::move(study)) {
  if (!study_ || study_->series.empty()) throw Error(Errc::BadArgs, "session needs a study with series");
  state_.session_id = std::move(session_id);
  state_.study_id = study_->study_id;
  const Series& first = study_->series.front();
  state_.active_series = first.meta.series_id;
  for (auto o : {Orientation::Axial, Orientation::Coronal, Orientation::Sagittal}) {
    state_.slice_index[static_cast<std::size_t>(o)] = slice_extent(first.volume.dims(), o) / 2;
  }
  state_.window = default_window(first.meta.modality);
}

const Volume& ViewerSession::active_volume() const { return study_->find_series(state_.active_series)->volume; }

std::vector<SeriesMeta> ViewerSession::list_series() const {
  std::vector<SeriesMeta> out;
  for (const auto& s : study_->series) out.push_back(s.meta);
  return out;
}

void ViewerSession::select_series(std::string_view series_id) {
  if (!study_->find_series(series_id)) throw Error(Errc::UnknownSeries, "no series '" + std::string(series_id) + "'");
  state_.active_series = std::string(series_id);
  // An overlay cannot be fused onto itself.
  if (state_.fusion && state_.fusion->overlay_series == series_id) state_.fusion.reset();
  ++state_.step_counter;
}

std::int64_t ViewerSession::set_slice(Orientation o, std::int64_t index) {
  const std::int64_t extent = slice_extent(study_->grid().dims(), o);
  const std::int64_t effective = std::clamp<std::int64_t>(index, 0, extent - 1);
  state_.orientation = o;
  state_.slice_index[static_cast<std::size_t>(o)] = effective;
  ++state_.step_counter;
  return effective;
}

void ViewerSession::set_window(double center, double width) {
  if (!std::isfinite(center) || !std::isfinite(width)) throw Error(Errc::BadArgs, "window must be finite");
  const Window w{round_to(center, 3), round_to(width, 3)};
  if (!(w.width > 0)) throw Error(Errc::BadArgs, "window width must be > 0");
  state_.window = w;
  ++state_.step_counter;
}

void ViewerSession::set_fusion(std::string_view overlay_series, double alpha) {
  if (!study_->find_series(overlay_series)) {
    throw Error(Errc::UnknownSeries, "no series '" + std::string(overlay_series) + "'");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::BadArgs, "alpha must be in [0, 1]");
  if (overlay_series == state_.active_series) throw Error(Errc::BadArgs, "overlay must differ from the active series");
  state_.fusion = Fusion{std::string(overlay_series), round_to(alpha, 3)};
  ++state_.step_counter;
}

RenderOutput ViewerSession::render() const {
  const auto o = state_.orientation;
  const std::int64_t idx = state_.slice_index[static_cast<std::size_t>(o)];
  GrayImage img = render_slice(active_volume(), o, idx, state_.window);
  if (state_.fusion) {
    const GrayImage overlay =
        render_slice(study_->find_series(state_.fusion->overlay_series)->volume, o, idx, state_.window);
    img = blend(img, overlay, state_.fusion->alpha);
  }
  Artifact png = Artifact::make("image/png", encode_png(img));
  return {std::move(img), std::move(png)};
}

BookmarkOutput ViewerSession::bookmark_view(std::string label) {
  RenderOutput r = render();
  BookmarkEntry entry{sequential_id("bm", state_.bookmarks.size() + 1), std::move(label), view_digest(state_),
                      r.png.id};
  state_.bookmarks.push_back(entry);
  ++state_.step_counter;
  return {entry.bookmark_id, std::move(r.png)};
}

double ViewerSession::measure_distance(const Vec3& p1, const Vec3& p2) {
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(p1[a]) || !std::isfinite(p2[a])) throw Error(Errc::BadArgs, "points must be finite");
  }
  const double d = distance(p1, p2);
  ++state_.step_counter;
  state_.measurements.push_back({p1, p2, d, state_.step_counter});
  return d;
}

Artifact ViewerSession::export_evidence() const {
  json items = json::array();
  for (const auto& b : state_.bookmarks) {
    items.push_back({{"kind", "bookmark"},
                     {"id", b.bookmark_id},
                     {"label", b.label},
                     {"state_digest", b.state_digest},
                     {"artifact", b.render_artifact_id}});
  }
  for (const auto& m : state_.masks) {
    items.push_back({{"kind", "mask"}, {"id", m.mask_id}, {"series_id", m.series_id}, {"artifact", m.artifact_id}, {"step", m.step}});
  }
  for (std::size_t i = 0; i < state_.measurements.size(); ++i) {
    const auto& m = state_.measurements[i];
    items.push_back({{"kind", "measurement"},
                     {"id", sequential_id("ms", i + 1)},
                     {"p1", vec_json(m.p1)},
                     {"p2", vec_json(m.p2)},
                     {"distance_mm", m.distance_mm},
                     {"step", m.step}});
  }
  const json bundle{{"format", "voxagent-evidence/1"}, {"study_id", state_.study_id}, {"items", items}};
  const std::string text = canonical(bundle);
  return Artifact::make("evidence/json", Bytes(text.begin(), text.end()));
}

std::string ViewerSession::record_mask(const SegmentationMask& mask, const std::string& artifact_id) {
  ++state_.step_counter;
  MaskEntry entry{sequential_id("mask", state_.masks.size() + 1), artifact_id, mask.series_id, state_.step_counter};
  state_.masks.push_back(entry);
  mask_store_.emplace_back(entry.mask_id, mask);
  return entry.mask_id;
}

const SegmentationMask* ViewerSession::find_mask(std::string_view mask_id) const {
  for (const auto& [id, m] : mask_store_) {
    if (id == mask_id) return &m;
  }
  return nullptr;
}

}  // namespace voxagent
