#include "voxagent/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "voxagent/error.hpp"
#include "voxagent/rng.hpp"
#include "voxagent/segment.hpp"

namespace voxagent::synth {
namespace {

// Stream tags keep lesion sampling and per-series noise independent.
constexpr std::uint64_t kLayoutStream = 0x4C41594F5554ULL;
constexpr std::uint64_t kNoiseStream = 0x4E4F495345ULL;

std::int16_t clamp16(double v) {
  return static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
}

Volume empty_grid(GridDims grid, double fov, bool centered) {
  Vec3 spacing{fov / static_cast<double>(grid.nx), fov / static_cast<double>(grid.ny),
               fov / static_cast<double>(grid.nz)};
  Vec3 origin{spacing.x / 2, spacing.y / 2, spacing.z / 2};
  if (centered) origin = origin - Vec3{fov / 2, fov / 2, fov / 2};
  return Volume(grid, spacing, origin);
}

/// Moves p onto the nearest voxel centre (inside the grid).
Vec3 snap(const Volume& v, const Vec3& p) {
  Vec3 out;
  for (int a = 0; a < 3; ++a) {
    double idx = std::round((p[a] - v.origin()[a]) / v.spacing()[a]);
    idx = std::clamp(idx, 0.0, static_cast<double>(v.dims()[a] - 1));
    out[a] = v.origin()[a] + idx * v.spacing()[a];
  }
  return out;
}

template <typename Pred>
std::vector<std::int64_t> collect(const Volume& v, Pred&& inside) {
  std::vector<std::int64_t> out;
  const GridDims& d = v.dims();
  for (std::int64_t k = 0; k < d.nz; ++k)
    for (std::int64_t j = 0; j < d.ny; ++j)
      for (std::int64_t i = 0; i < d.nx; ++i) {
        const Index3 idx{i, j, k};
        if (inside(voxel_center(v, idx))) out.push_back(d.flat(idx));
      }
  return out;
}

struct Ellipsoid {
  Vec3 center;
  Vec3 semi;
  bool contains(const Vec3& p) const {
    double q = 0;
    for (int a = 0; a < 3; ++a) {
      const double t = (p[a] - center[a]) / semi[a];
      q += t * t;
    }
    return q <= 1.0;
  }
};

struct Sphere {
  Vec3 center;
  double radius;
  bool contains(const Vec3& p) const { return distance(p, center) <= radius; }
};

void add_noise(Volume& v, std::uint64_t stream, int amplitude) {
  Rng rng(stream);
  for (auto& voxel : v.voxels()) {
    voxel = clamp16(voxel + static_cast<double>(rng.between(-amplitude, amplitude)));
  }
}

LesionTruth measure(const Volume& v, const std::string& series_id, const std::vector<std::int64_t>& voxels) {
  const MaskStats s = measure_voxels(v, voxels);
  return {series_id, s.centroid_mm, s.max_diameter_mm, s.voxel_count, s.mean_intensity};
}

std::vector<AnswerOption> make_options(std::initializer_list<const char*> texts) {
  std::vector<AnswerOption> out;
  int i = 0;
  for (const char* t : texts) out.push_back({option_id(i++), t});
  return out;
}

TruthAnswer answer_for(const TaskSpec& task, int index) {
  return {task.options.at(static_cast<std::size_t>(index)).id, task.options.at(static_cast<std::size_t>(index)).text};
}

// ---- brain -------------------------------------------------------------

struct BrainSeries {
  const char* id;
  Modality modality;
  const char* description;
  double tissue;        // head tissue base level
  double lesion_level;  // level inside an enhancing / FLAIR-bright lesion
};

constexpr std::array<BrainSeries, 4> kBrainSeries{{
    {"T1", Modality::MrT1, "Axial T1-weighted", 600, 350},
    {"T1c", Modality::MrT1c, "Axial T1-weighted post-contrast", 580, 1600},
    {"T2", Modality::MrT2, "Axial T2-weighted", 450, 1300},
    {"FLAIR", Modality::MrFlair, "Axial T2-FLAIR", 420, 1500},
}};
constexpr Vec3 kHeadSemi{80, 90, 75};
constexpr int kBrainNoise = 12;

/// Which series show a lesion for a class (T1, T1c, T2, FLAIR).
std::array<bool, 4> brain_lesion_visibility(BrainClass c) {
  switch (c) {
    case BrainClass::Enhancing: return {true, true, true, true};
    case BrainClass::NonEnhancing: return {true, false, true, true};
    case BrainClass::Multifocal: return {false, false, true, true};
    case BrainClass::NoLesion: return {false, false, false, false};
  }
  return {};
}

StudyPackage gen_brain(std::uint64_t seed, std::int64_t case_index, GridDims grid) {
  const BrainClass cls = brain_class_for_case(case_index);
  Rng rng(mix_seed(mix_seed(seed, kLayoutStream), static_cast<std::uint64_t>(case_index) * 2 + 0));
  Volume base = empty_grid(grid, kBrainFovMm, true);
  const double s_max = std::max({base.spacing().x, base.spacing().y, base.spacing().z});

  std::vector<Sphere> lesions;
  auto sample_in_ball = [&](double radius) {
    for (;;) {
      Vec3 p{rng.uniform(-radius, radius), rng.uniform(-radius, radius), rng.uniform(-radius, radius)};
      if (distance(p, {}) <= radius) return snap(base, p);
    }
  };
  if (cls == BrainClass::Enhancing || cls == BrainClass::NonEnhancing) {
    const double r = std::max(rng.uniform(12.0, 20.0), 0.6 * s_max);
    lesions.push_back({sample_in_ball(40.0), r});
  } else if (cls == BrainClass::Multifocal) {
    const auto count = 3 + static_cast<int>(rng.below(2));
    while (static_cast<int>(lesions.size()) < count) {
      const double r = std::max(rng.uniform(6.0, 8.0), 0.6 * s_max);
      const Vec3 c = sample_in_ball(55.0);
      const bool apart = std::all_of(lesions.begin(), lesions.end(), [&](const Sphere& o) {
        return distance(o.center, c) >= o.radius + r + std::max(14.0, 2 * s_max);
      });
      if (apart) lesions.push_back({c, r});
    }
  }

  std::vector<std::vector<std::int64_t>> lesion_voxels;
  for (const auto& l : lesions) lesion_voxels.push_back(collect(base, [&](const Vec3& p) { return l.contains(p); }));

  StudyPackage pkg;
  pkg.study_id = study_id_for(seed, ModuleKind::Brain, case_index);
  pkg.module = ModuleKind::Brain;
  const auto visible = brain_lesion_visibility(cls);
  for (std::size_t si = 0; si < kBrainSeries.size(); ++si) {
    const BrainSeries& bs = kBrainSeries[si];
    Volume v = base;
    const GridDims& d = v.dims();
    for (std::int64_t k = 0; k < d.nz; ++k)
      for (std::int64_t j = 0; j < d.ny; ++j)
        for (std::int64_t i = 0; i < d.nx; ++i) {
          const Vec3 p = voxel_center(v, {i, j, k});
          double q = 0;
          for (int a = 0; a < 3; ++a) q += (p[a] / kHeadSemi[a]) * (p[a] / kHeadSemi[a]);
          // Smooth radial falloff inside the head, low constant outside.
          v.at({i, j, k}) = clamp16(q <= 1.0 ? bs.tissue * (1.0 - 0.35 * q) : 10.0);
        }
    if (visible[si]) {
      for (const auto& vox : lesion_voxels)
        for (std::int64_t f : vox) v.voxels()[static_cast<std::size_t>(f)] = clamp16(bs.lesion_level);
    }
    add_noise(v, mix_seed(mix_seed(seed, kNoiseStream), static_cast<std::uint64_t>(case_index) * 8 + si), kBrainNoise);
    pkg.series.push_back({{bs.id, bs.modality, bs.description}, std::move(v)});
  }

  TaskSpec task{std::string(task_ids::kDiagnosis),
                "Which option best describes the lesion pattern in this brain MRI study?", AnswerKind::Mcq,
                make_options({"Enhancing lesion (bright on T1c and FLAIR)", "Non-enhancing lesion (bright on FLAIR only)",
                              "Multifocal lesions (three or more small FLAIR-bright foci)", "No lesion"})};
  GroundTruth truth;
  truth.label = std::string(brain_class_name(cls));
  truth.answers[task.task_id] = answer_for(task, static_cast<int>(cls));
  const Series& flair = pkg.series.back();
  for (const auto& vox : lesion_voxels) truth.lesions.push_back(measure(flair.volume, flair.meta.series_id, vox));
  pkg.tasks.push_back(std::move(task));
  pkg.truth = std::move(truth);
  return pkg;
}

// ---- chest -------------------------------------------------------------

constexpr Ellipsoid kRightLung{{78, 128, 128}, {40, 62, 105}};
constexpr Ellipsoid kLeftLung{{178, 128, 128}, {40, 62, 105}};
/// Nominal semi-major axis ranges (mm) per T stage, before discrete adjustment.
constexpr std::array<std::pair<double, double>, 4> kSemiMajor{{{7, 13}, {21, 24}, {31, 34}, {40, 46}}};

bool in_body(const Vec3& p) {
  const double dx = (p.x - 128) / 120, dy = (p.y - 128) / 100;
  return dx * dx + dy * dy <= 1.0;
}

bool t_bin_holds(int t, double d) { return t_stage_for_diameter(d) == t; }

struct ChestLayout {
  Ellipsoid lesion;
  std::vector<std::int64_t> lesion_voxels;
  std::vector<Sphere> nodes;
  std::vector<std::vector<std::int64_t>> node_voxels;
};

/// One placement attempt; empty when the draw cannot satisfy the labels.
std::optional<ChestLayout> place_chest(const Volume& grid, const ChestLabels& labels, Rng& rng) {
  const Vec3& s = grid.spacing();
  const double s_max = std::max({s.x, s.y, s.z});
  const Box& box = kLobeBoxes[static_cast<std::size_t>(labels.location)];
  const auto [a_lo, a_hi] = kSemiMajor[static_cast<std::size_t>(labels.t_stage)];
  const double major = rng.uniform(a_lo, a_hi);
  std::array<double, 3> ratios{1.0, 0.8, 0.7};
  for (int i = 2; i > 0; --i) std::swap(ratios[static_cast<std::size_t>(i)], ratios[rng.below(static_cast<std::uint64_t>(i) + 1)]);

  Ellipsoid e;
  for (int a = 0; a < 3; ++a) e.semi[a] = major * ratios[static_cast<std::size_t>(a)];
  for (int a = 0; a < 3; ++a) {
    double lo = std::max(box.lo[a] + 2 * s[a], e.semi[a] + s[a]);
    double hi = std::min(box.hi[a] - 2 * s[a], kChestFovMm - e.semi[a] - s[a]);
    if (lo > hi) lo = hi = (box.lo[a] + box.hi[a]) / 2;
    e.center[a] = rng.uniform(lo, hi);
  }
  e.center = snap(grid, e.center);

  ChestLayout out;
  // Grow or shrink until the discrete max diameter sits in the T bin.
  for (int iter = 0;; ++iter) {
    if (iter > 200) return std::nullopt;
    out.lesion_voxels = collect(grid, [&](const Vec3& p) { return e.contains(p); });
    const double d = max_voxel_diameter(grid, out.lesion_voxels);
    if (t_bin_holds(labels.t_stage, d)) break;
    const double cur_major = std::max({e.semi.x, e.semi.y, e.semi.z});
    const double f = t_stage_for_diameter(d) < labels.t_stage ? 1.0 + s_max / (4 * cur_major)
                                                              : 1.0 - s_max / (4 * cur_major);
    for (int a = 0; a < 3; ++a) e.semi[a] *= f;
  }
  out.lesion = e;

  const MaskStats st = measure_voxels(grid, out.lesion_voxels);
  if (!box.contains(st.centroid_mm)) return std::nullopt;
  for (std::int64_t f : out.lesion_voxels) {
    const Index3 idx = grid.dims().unflat(f);
    for (int a = 0; a < 3; ++a)
      if (idx[a] == 0 || idx[a] == grid.dims()[a] - 1) return std::nullopt;
  }

  // Mediastinal node candidates, shuffled, taken greedily.
  std::vector<Vec3> candidates;
  for (double z = 40; z <= 220; z += 30)
    for (double y : {96.0, 128.0, 160.0}) candidates.push_back(snap(grid, {128, y, z}));
  for (std::size_t i = candidates.size() - 1; i > 0; --i) std::swap(candidates[i], candidates[rng.below(i + 1)]);
  const double node_r = std::max(6.0, 0.6 * s_max);
  const double lesion_reach = std::max({e.semi.x, e.semi.y, e.semi.z});
  for (const Vec3& c : candidates) {
    if (static_cast<int>(out.nodes.size()) == labels.n_stage) break;
    if (distance(c, e.center) <= lesion_reach + node_r + 3 * s_max) continue;
    const bool apart = std::all_of(out.nodes.begin(), out.nodes.end(), [&](const Sphere& n) {
      return distance(n.center, c) >= 2 * node_r + 3 * s_max;
    });
    if (apart) out.nodes.push_back({c, node_r});
  }
  if (static_cast<int>(out.nodes.size()) != labels.n_stage) return std::nullopt;
  for (const auto& n : out.nodes) out.node_voxels.push_back(collect(grid, [&](const Vec3& p) { return n.contains(p); }));
  return out;
}

StudyPackage gen_chest(std::uint64_t seed, std::int64_t case_index, GridDims grid) {
  const ChestLabels labels = chest_labels_for_case(case_index);
  Rng rng(mix_seed(mix_seed(seed, kLayoutStream), static_cast<std::uint64_t>(case_index) * 2 + 1));
  Volume base = empty_grid(grid, kChestFovMm, false);

  std::optional<ChestLayout> layout;
  for (int attempt = 0; attempt < 64 && !layout; ++attempt) layout = place_chest(base, labels, rng);
  if (!layout) throw std::logic_error("chest generator could not place lesion for " + std::to_string(case_index));

  const double uptake = kUptakeBase + kUptakeStep * (3 * labels.histology + labels.grade);
  Volume ct = base, pet = base;
  const GridDims& d = base.dims();
  for (std::int64_t k = 0; k < d.nz; ++k)
    for (std::int64_t j = 0; j < d.ny; ++j)
      for (std::int64_t i = 0; i < d.nx; ++i) {
        const Index3 idx{i, j, k};
        const Vec3 p = voxel_center(base, idx);
        const bool lung = kRightLung.contains(p) || kLeftLung.contains(p);
        const bool body = in_body(p);
        ct.at(idx) = static_cast<std::int16_t>(!body ? -1000 : lung ? -850 : 40);
        pet.at(idx) = static_cast<std::int16_t>(!body ? 0 : lung ? 80 : 200);
      }
  for (const auto& vox : layout->node_voxels)
    for (std::int64_t f : vox) {
      ct.voxels()[static_cast<std::size_t>(f)] = 45;
      pet.voxels()[static_cast<std::size_t>(f)] = kPetNodeLevel;
    }
  for (std::int64_t f : layout->lesion_voxels) {
    ct.voxels()[static_cast<std::size_t>(f)] = 30;
    pet.voxels()[static_cast<std::size_t>(f)] = clamp16(uptake);
  }
  const std::uint64_t noise = mix_seed(mix_seed(seed, kNoiseStream), static_cast<std::uint64_t>(case_index) * 8 + 4);
  add_noise(ct, noise, 10);
  add_noise(pet, noise + 1, kPetNoise);

  StudyPackage pkg;
  pkg.study_id = study_id_for(seed, ModuleKind::Chest, case_index);
  pkg.module = ModuleKind::Chest;
  pkg.series.push_back({{"CT", Modality::Ct, "Chest CT, soft-tissue reconstruction"}, std::move(ct)});
  pkg.series.push_back({{"PET", Modality::Pet, "FDG PET, attenuation corrected"}, std::move(pet)});

  pkg.tasks = {
      {std::string(task_ids::kLocation), "In which lobe is the primary tumor located?", AnswerKind::Mcq,
       make_options({"Right upper lobe", "Right middle lobe", "Right lower lobe", "Left upper lobe",
                     "Left lower lobe"})},
      {std::string(task_ids::kTStage), "What is the pathological T stage of the primary tumor?", AnswerKind::Mcq,
       make_options({"T1 (max diameter <= 30 mm)", "T2 (> 30 mm, <= 50 mm)", "T3 (> 50 mm, <= 70 mm)",
                     "T4 (> 70 mm)"})},
      {std::string(task_ids::kNStage), "What is the pathological N stage?", AnswerKind::Mcq,
       make_options({"N0 (no hot nodal focus)", "N1 (one hot nodal focus)", "N2 (two hot nodal foci)",
                     "N3 (three or more hot nodal foci)"})},
      {std::string(task_ids::kHistology), "What is the tumor histology?", AnswerKind::Mcq,
       make_options({"Adenocarcinoma", "Squamous cell carcinoma", "NSCLC not otherwise specified"})},
      {std::string(task_ids::kGrade), "What is the histopathological grade?", AnswerKind::Mcq,
       make_options({"G1 (well differentiated)", "G2 (moderately differentiated)", "G3 (poorly differentiated)"})},
  };
  GroundTruth truth;
  const std::array<int, 5> picks{labels.location, labels.t_stage, labels.n_stage, labels.histology, labels.grade};
  for (std::size_t t = 0; t < pkg.tasks.size(); ++t) truth.answers[pkg.tasks[t].task_id] = answer_for(pkg.tasks[t], picks[t]);
  const Series& pet_series = pkg.series.back();
  truth.lesions.push_back(measure(pet_series.volume, "PET", layout->lesion_voxels));
  for (const auto& n : layout->nodes) truth.nodes.push_back(n.center);
  pkg.truth = std::move(truth);
  return pkg;
}

}  // namespace

std::string_view brain_class_name(BrainClass c) {
  switch (c) {
    case BrainClass::Enhancing: return "enhancing";
    case BrainClass::NonEnhancing: return "non-enhancing";
    case BrainClass::Multifocal: return "multifocal";
    case BrainClass::NoLesion: return "no-lesion";
  }
  return "";
}

std::optional<int> lobe_for_point(const Vec3& p) {
  for (std::size_t i = 0; i < kLobeBoxes.size(); ++i) {
    if (kLobeBoxes[i].contains(p)) return static_cast<int>(i);
  }
  return std::nullopt;
}

int t_stage_for_diameter(double d) {
  for (std::size_t i = 0; i < kTStageLimits.size(); ++i) {
    if (d <= kTStageLimits[i]) return static_cast<int>(i);
  }
  return 3;
}

int n_stage_for_count(int hot_foci) { return std::clamp(hot_foci, 0, 3); }

std::pair<int, int> decode_uptake(double mean_uptake) {
  const long bin = std::lround((mean_uptake - kUptakeBase) / kUptakeStep);
  const int b = static_cast<int>(std::clamp(bin, 0L, 8L));
  return {b / 3, b % 3};
}

std::string option_id(int index) { return std::string(1, static_cast<char>('A' + index)); }

BrainClass brain_class_for_case(std::int64_t case_index) {
  return static_cast<BrainClass>(case_index % kBrainClassCount);
}

ChestLabels chest_labels_for_case(std::int64_t i) {
  return {static_cast<int>(i % 5), static_cast<int>(i % 4), static_cast<int>((i / 4) % 4),
          static_cast<int>(i % 3), static_cast<int>((i / 3) % 3)};
}

void validate(const GenSpec& spec) {
  if (spec.n_cases < 1) throw Error(Errc::BadArgs, "n_cases must be >= 1");
  if (spec.grid.nx < 16 || spec.grid.ny < 16 || spec.grid.nz < 16) throw Error(Errc::BadArgs, "grid dims must be >= 16");
  if (spec.default_budget < 0) throw Error(Errc::BadArgs, "budget must be >= 0");
}

std::string study_id_for(std::uint64_t seed, ModuleKind module, std::int64_t case_index) {
  std::string idx = std::to_string(case_index);
  if (idx.size() < 4) idx.insert(0, 4 - idx.size(), '0');
  return std::string(module == ModuleKind::Brain ? "brain" : "chest") + "-" + std::to_string(seed) + "-" + idx;
}

StudyPackage gen_study(std::uint64_t seed, ModuleKind module, std::int64_t case_index, GridDims grid) {
  if (case_index < 0) throw Error(Errc::BadArgs, "case_index must be >= 0");
  StudyPackage pkg = module == ModuleKind::Brain ? gen_brain(seed, case_index, grid) : gen_chest(seed, case_index, grid);
  validate_package(pkg);
  return pkg;
}

}  // namespace voxagent::synth
