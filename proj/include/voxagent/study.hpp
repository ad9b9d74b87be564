#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace voxagent {

/// World-space point or vector in millimetres.
struct Vec3 {
  double x = 0, y = 0, z = 0;

  double& operator[](int axis) { return axis == 0 ? x : axis == 1 ? y : z; }
  double operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
  bool operator==(const Vec3&) const = default;
};

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
double distance(const Vec3& a, const Vec3& b);

/// Voxel index triple (i along x, j along y, k along z).
struct Index3 {
  std::int64_t i = 0, j = 0, k = 0;

  std::int64_t operator[](int axis) const { return axis == 0 ? i : axis == 1 ? j : k; }
  bool operator==(const Index3&) const = default;
};

struct GridDims {
  std::int64_t nx = 1, ny = 1, nz = 1;

  std::int64_t operator[](int axis) const { return axis == 0 ? nx : axis == 1 ? ny : nz; }
  std::int64_t count() const { return nx * ny * nz; }
  bool contains(const Index3& idx) const {
    return idx.i >= 0 && idx.i < nx && idx.j >= 0 && idx.j < ny && idx.k >= 0 && idx.k < nz;
  }
  std::int64_t flat(const Index3& idx) const { return idx.i + nx * (idx.j + ny * idx.k); }
  Index3 unflat(std::int64_t f) const { return {f % nx, (f / nx) % ny, f / (nx * ny)}; }
  bool operator==(const GridDims&) const = default;
};

/// Scalar volume on a regular axis-aligned grid, int16 voxels, x fastest.
class Volume {
 public:
  Volume(GridDims dims, Vec3 spacing, Vec3 origin);
  Volume(GridDims dims, Vec3 spacing, Vec3 origin, std::vector<std::int16_t> voxels);

  const GridDims& dims() const noexcept { return dims_; }
  const Vec3& spacing() const noexcept { return spacing_; }
  const Vec3& origin() const noexcept { return origin_; }
  std::span<const std::int16_t> voxels() const noexcept { return voxels_; }
  std::span<std::int16_t> voxels() noexcept { return voxels_; }

  std::int16_t at(const Index3& idx) const { return voxels_[static_cast<std::size_t>(dims_.flat(idx))]; }
  std::int16_t& at(const Index3& idx) { return voxels_[static_cast<std::size_t>(dims_.flat(idx))]; }

  /// Same dims, spacing and origin.
  bool same_grid(const Volume& other) const;
  bool operator==(const Volume&) const = default;

 private:
  GridDims dims_;
  Vec3 spacing_;
  Vec3 origin_;
  std::vector<std::int16_t> voxels_;
};

/// Nearest voxel centre; ties round half away from zero. Throws OutOfBounds.
Index3 world_to_voxel(const Volume& volume, const Vec3& p);
/// Voxel centre in mm. Throws OutOfBounds.
Vec3 voxel_to_world(const Volume& volume, const Index3& idx);
/// voxel_to_world without the bounds check (for masks and generators).
Vec3 voxel_center(const Volume& volume, const Index3& idx);

enum class Modality { MrT1, MrT1c, MrT2, MrFlair, Ct, Pet };
std::string_view modality_tag(Modality m);
Modality parse_modality(std::string_view tag);

struct SeriesMeta {
  std::string series_id;
  Modality modality = Modality::Ct;
  std::string description;
  bool operator==(const SeriesMeta&) const = default;
};

struct Series {
  SeriesMeta meta;
  Volume volume;
  bool operator==(const Series&) const = default;
};

enum class ModuleKind { Brain, Chest };
std::string_view module_tag(ModuleKind m);  // "BRAIN" / "CHEST"
ModuleKind parse_module(std::string_view tag);  // accepts either case

enum class AnswerKind { Mcq, Open };

struct AnswerOption {
  std::string id;
  std::string text;
  bool operator==(const AnswerOption&) const = default;
};

struct TaskSpec {
  std::string task_id;
  std::string question;
  AnswerKind kind = AnswerKind::Mcq;
  std::vector<AnswerOption> options;

  const AnswerOption* find_option(std::string_view id) const;
  bool operator==(const TaskSpec&) const = default;
};

struct TruthAnswer {
  std::string option_id;  // empty for open tasks
  std::string text;       // canonical answer text
  bool operator==(const TruthAnswer&) const = default;
};

/// One generated finding, measured on the voxels that define it.
struct LesionTruth {
  std::string series_id;
  Vec3 centroid_mm;
  double max_diameter_mm = 0;
  std::int64_t voxel_count = 0;
  double mean_intensity = 0;
  bool operator==(const LesionTruth&) const = default;
};

struct GroundTruth {
  std::string label;  // surrogate class name (brain) or "" (chest)
  std::map<std::string, TruthAnswer> answers;
  std::vector<LesionTruth> lesions;
  std::vector<Vec3> nodes;
  bool operator==(const GroundTruth&) const = default;
};

/// Task ids used by the two modules.
namespace task_ids {
inline constexpr std::string_view kDiagnosis = "diagnosis";
inline constexpr std::string_view kLocation = "location";
inline constexpr std::string_view kTStage = "t_stage";
inline constexpr std::string_view kNStage = "n_stage";
inline constexpr std::string_view kHistology = "histology";
inline constexpr std::string_view kGrade = "grade";
inline constexpr std::array<std::string_view, 5> kChest{kLocation, kTStage, kNStage, kHistology, kGrade};
}  // namespace task_ids

struct StudyPackage {
  std::string study_id;
  ModuleKind module = ModuleKind::Brain;
  std::vector<Series> series;
  std::vector<TaskSpec> tasks;
  std::optional<GroundTruth> truth;
  /// file name -> sha256 hex, filled by load/write.
  std::map<std::string, std::string> checksums;

  const Series* find_series(std::string_view id) const;
  const TaskSpec* find_task(std::string_view id) const;
  /// Shared grid of all series.
  const Volume& grid() const { return series.front().volume; }
};

/// Throws SchemaViolation when a package breaks a structural invariant.
void validate_package(const StudyPackage& pkg);

}  // namespace voxagent
