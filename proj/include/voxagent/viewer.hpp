#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "voxagent/digest.hpp"
#include "voxagent/png.hpp"
#include "voxagent/segment.hpp"
#include "voxagent/study.hpp"

namespace voxagent {

enum class Orientation { Axial = 0, Coronal = 1, Sagittal = 2 };
std::string_view orientation_tag(Orientation o);  // "axial" / "coronal" / "sagittal"
Orientation parse_orientation(std::string_view tag);

/// Slice count along the orientation's normal axis (z, y, x).
std::int64_t slice_extent(const GridDims& dims, Orientation o);

struct Window {
  double center = 0;
  double width = 1;
  bool operator==(const Window&) const = default;
};

struct Fusion {
  std::string overlay_series;
  double alpha = 0;
  bool operator==(const Fusion&) const = default;
};

/// Content-addressed blob produced by a tool call (id = sha256 of bytes).
struct Artifact {
  std::string id;
  std::string kind;  // "image/png", "mask/rle", "evidence/json"
  Bytes bytes;

  static Artifact make(std::string kind, Bytes bytes);
};

struct BookmarkEntry {
  std::string bookmark_id;
  std::string label;
  std::string state_digest;  // view digest at capture
  std::string render_artifact_id;
  bool operator==(const BookmarkEntry&) const = default;
};

struct MeasurementEntry {
  Vec3 p1;
  Vec3 p2;
  double distance_mm = 0;
  std::int64_t step = 0;
  bool operator==(const MeasurementEntry&) const = default;
};

struct MaskEntry {
  std::string mask_id;
  std::string artifact_id;
  std::string series_id;
  std::int64_t step = 0;
  bool operator==(const MaskEntry&) const = default;
};

struct ViewerState {
  std::string session_id;
  std::string study_id;
  std::string active_series;
  Orientation orientation = Orientation::Axial;
  std::array<std::int64_t, 3> slice_index{};  // indexed by Orientation
  Window window;
  std::optional<Fusion> fusion;
  std::vector<BookmarkEntry> bookmarks;
  std::vector<MeasurementEntry> measurements;
  std::vector<MaskEntry> masks;
  std::int64_t step_counter = 0;
  bool operator==(const ViewerState&) const = default;
};

/// Display configuration only (what a bookmark captures).
nlohmann::json view_json(const ViewerState& s);
/// Everything except session_id, which differs between a run and its replay.
nlohmann::json state_json(const ViewerState& s);
std::string view_digest(const ViewerState& s);
std::string state_digest(const ViewerState& s);
/// Short summary returned to agents after display operations.
nlohmann::json state_summary(const ViewerState& s);

/// Windowing law: round(255 * clamp((v - c + w/2) / w, 0, 1)), half away from zero.
std::uint8_t window_pixel(double value, const Window& window);

/// Axial: rows=y, cols=x at fixed z. Coronal: rows=z, cols=x at fixed y.
/// Sagittal: rows=z, cols=y at fixed x.
GrayImage render_slice(const Volume& volume, Orientation o, std::int64_t index, const Window& window);
/// round((1 - alpha) * base + alpha * overlay) per pixel.
GrayImage blend(const GrayImage& base, const GrayImage& overlay, double alpha);

struct RenderOutput {
  GrayImage image;
  Artifact png;
};

struct BookmarkOutput {
  std::string bookmark_id;
  Artifact render;
};

/// Simulated viewer bound to one study. Single writer; every mutating
/// operation bumps step_counter by one and failed operations leave the
/// state untouched.
class ViewerSession {
 public:
  ViewerSession(std::shared_ptr<const StudyPackage> study, std::string session_id);

  const ViewerState& state() const noexcept { return state_; }
  const StudyPackage& study() const noexcept { return *study_; }
  const Volume& active_volume() const;

  // Layer 1
  std::vector<SeriesMeta> list_series() const;
  void select_series(std::string_view series_id);
  /// Clamps into [0, extent-1] and returns the effective index.
  std::int64_t set_slice(Orientation o, std::int64_t index);
  void set_window(double center, double width);
  void set_fusion(std::string_view overlay_series, double alpha);
  RenderOutput render() const;

  // Layer 2
  BookmarkOutput bookmark_view(std::string label);
  double measure_distance(const Vec3& p1, const Vec3& p2);
  Artifact export_evidence() const;

  // Evidence written by layer-3 tools.
  std::string record_mask(const SegmentationMask& mask, const std::string& artifact_id);
  const SegmentationMask* find_mask(std::string_view mask_id) const;

 private:
  std::shared_ptr<const StudyPackage> study_;
  ViewerState state_;
  std::vector<std::pair<std::string, SegmentationMask>> mask_store_;
};

/// Default display window for a modality.
Window default_window(Modality m);

}  // namespace voxagent
