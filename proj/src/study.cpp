#include "voxagent/study.hpp"

#include <cctype>
#include <cmath>
#include <set>

#include "voxagent/error.hpp"

namespace voxagent {

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }

double distance(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  return std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
}

namespace {

void check_grid(const GridDims& dims, const Vec3& spacing) {
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) throw Error(Errc::SchemaViolation, "volume dims must be >= 1");
  for (int a = 0; a < 3; ++a) {
    if (!(spacing[a] > 0) || !std::isfinite(spacing[a])) {
      throw Error(Errc::SchemaViolation, "volume spacing must be positive");
    }
  }
}

}  // namespace

Volume::Volume(GridDims dims, Vec3 spacing, Vec3 origin)
    : dims_(dims), spacing_(spacing), origin_(origin) {
  check_grid(dims_, spacing_);
  voxels_.assign(static_cast<std::size_t>(dims_.count()), 0);
}

Volume::Volume(GridDims dims, Vec3 spacing, Vec3 origin, std::vector<std::int16_t> voxels)
    : dims_(dims), spacing_(spacing), origin_(origin), voxels_(std::move(voxels)) {
  check_grid(dims_, spacing_);
  if (static_cast<std::int64_t>(voxels_.size()) != dims_.count()) {
    throw Error(Errc::SchemaViolation, "voxel count does not match dims");
  }
}

bool Volume::same_grid(const Volume& other) const {
  return dims_ == other.dims_ && spacing_ == other.spacing_ && origin_ == other.origin_;
}

Index3 world_to_voxel(const Volume& volume, const Vec3& p) {
  std::int64_t idx[3];
  for (int a = 0; a < 3; ++a) {
    const double f = (p[a] - volume.origin()[a]) / volume.spacing()[a];
    if (!std::isfinite(f)) throw Error(Errc::OutOfBounds, "non-finite coordinate");
    const double r = std::round(f);
    if (r < 0 || r > static_cast<double>(volume.dims()[a] - 1)) {
      throw Error(Errc::OutOfBounds, "point maps outside the voxel grid");
    }
    idx[a] = static_cast<std::int64_t>(r);
  }
  return {idx[0], idx[1], idx[2]};
}

Vec3 voxel_center(const Volume& volume, const Index3& idx) {
  const Vec3& o = volume.origin();
  const Vec3& s = volume.spacing();
  return {o.x + static_cast<double>(idx.i) * s.x, o.y + static_cast<double>(idx.j) * s.y,
          o.z + static_cast<double>(idx.k) * s.z};
}

Vec3 voxel_to_world(const Volume& volume, const Index3& idx) {
  if (!volume.dims().contains(idx)) throw Error(Errc::OutOfBounds, "voxel index outside the grid");
  return voxel_center(volume, idx);
}

std::string_view modality_tag(Modality m) {
  switch (m) {
    case Modality::MrT1: return "MR-T1";
    case Modality::MrT1c: return "MR-T1c";
    case Modality::MrT2: return "MR-T2";
    case Modality::MrFlair: return "MR-FLAIR";
    case Modality::Ct: return "CT";
    case Modality::Pet: return "PET";
  }
  return "";
}

Modality parse_modality(std::string_view tag) {
  for (Modality m : {Modality::MrT1, Modality::MrT1c, Modality::MrT2, Modality::MrFlair, Modality::Ct,
                     Modality::Pet}) {
    if (modality_tag(m) == tag) return m;
  }
  throw Error(Errc::SchemaViolation, "unknown modality tag '" + std::string(tag) + "'");
}

std::string_view module_tag(ModuleKind m) { return m == ModuleKind::Brain ? "BRAIN" : "CHEST"; }

ModuleKind parse_module(std::string_view tag) {
  std::string upper(tag);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "BRAIN") return ModuleKind::Brain;
  if (upper == "CHEST") return ModuleKind::Chest;
  throw Error(Errc::SchemaViolation, "unknown module '" + std::string(tag) + "'");
}

const AnswerOption* TaskSpec::find_option(std::string_view id) const {
  for (const auto& o : options) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

const Series* StudyPackage::find_series(std::string_view id) const {
  for (const auto& s : series) {
    if (s.meta.series_id == id) return &s;
  }
  return nullptr;
}

const TaskSpec* StudyPackage::find_task(std::string_view id) const {
  for (const auto& t : tasks) {
    if (t.task_id == id) return &t;
  }
  return nullptr;
}

void validate_package(const StudyPackage& pkg) {
  auto fail = [](const std::string& what) { throw Error(Errc::SchemaViolation, what); };
  if (pkg.study_id.empty()) fail("study_id is empty");
  if (pkg.series.empty()) fail("study has no series");

  std::set<std::string> ids;
  for (const auto& s : pkg.series) {
    if (s.meta.series_id.empty()) fail("series_id is empty");
    if (!ids.insert(s.meta.series_id).second) fail("duplicate series_id " + s.meta.series_id);
    if (!s.volume.same_grid(pkg.series.front().volume)) fail("series " + s.meta.series_id + " is on a different grid");
  }

  if (pkg.module == ModuleKind::Brain) {
    if (pkg.tasks.size() != 1) fail("BRAIN packages carry exactly 1 task");
  } else {
    if (pkg.tasks.size() != task_ids::kChest.size()) fail("CHEST packages carry exactly 5 tasks");
    for (std::size_t i = 0; i < task_ids::kChest.size(); ++i) {
      if (pkg.tasks[i].task_id != task_ids::kChest[i]) {
        fail("CHEST task " + std::to_string(i) + " must be " + std::string(task_ids::kChest[i]));
      }
    }
  }

  std::set<std::string> task_seen;
  for (const auto& t : pkg.tasks) {
    if (t.task_id.empty()) fail("task_id is empty");
    if (!task_seen.insert(t.task_id).second) fail("duplicate task_id " + t.task_id);
    if (t.kind == AnswerKind::Mcq) {
      if (t.options.size() < 2) fail("MCQ task " + t.task_id + " needs at least 2 options");
      std::set<std::string> opt_ids;
      for (const auto& o : t.options) {
        if (o.id.empty() || !opt_ids.insert(o.id).second) fail("bad option ids in task " + t.task_id);
      }
    } else if (!t.options.empty()) {
      fail("open task " + t.task_id + " carries options");
    }
  }

  if (pkg.truth) {
    for (const auto& t : pkg.tasks) {
      auto it = pkg.truth->answers.find(t.task_id);
      if (it == pkg.truth->answers.end()) fail("truth has no answer for " + t.task_id);
      if (t.kind == AnswerKind::Mcq) {
        if (!t.find_option(it->second.option_id)) fail("truth option for " + t.task_id + " is not an option");
      } else if (it->second.text.empty()) {
        fail("open task " + t.task_id + " has empty canonical answer");
      }
    }
    if (pkg.truth->answers.size() != pkg.tasks.size()) fail("truth answers do not match tasks");
  }
}

}  // namespace voxagent
