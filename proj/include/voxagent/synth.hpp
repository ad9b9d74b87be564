#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxagent/study.hpp"

namespace voxagent {

/// Synthetic study generator. Every output is a pure function of
/// (seed, module, case index, grid). Layout constants below are the
/// decoding key for the answers; see docs/synthetic-studies.md.
namespace synth {

// ---- brain ---------------------------------------------------------------

inline constexpr double kBrainFovMm = 192.0;
/// Highest intensity any non-lesion brain voxel can take, noise included.
inline constexpr std::int16_t kBrainBackgroundCeiling = 700;

enum class BrainClass { Enhancing = 0, NonEnhancing = 1, Multifocal = 2, NoLesion = 3 };
inline constexpr int kBrainClassCount = 4;
std::string_view brain_class_name(BrainClass c);

// ---- chest ---------------------------------------------------------------

inline constexpr double kChestFovMm = 256.0;
/// Highest PET value outside lesion and nodal foci, noise included.
inline constexpr std::int16_t kPetBackgroundCeiling = 400;
/// Nodal foci sit at this PET value (+- noise); strictly between the
/// background ceiling and the lesion threshold.
inline constexpr std::int16_t kPetNodeLevel = 1400;
/// Every primary-lesion PET voxel is >= this value.
inline constexpr std::int16_t kPetLesionThreshold = 1800;
/// Mean lesion uptake = base + step * (3 * histology + grade).
inline constexpr double kUptakeBase = 2000.0;
inline constexpr double kUptakeStep = 300.0;
inline constexpr int kPetNoise = 15;

struct Box {
  Vec3 lo;
  Vec3 hi;
  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
  }
};

/// Lobe boxes in world mm (x toward patient left, z toward head), in
/// location option order: RUL, RML, RLL, LUL, LLL.
inline constexpr std::array<Box, 5> kLobeBoxes{{
    {{38, 58, 170}, {118, 198, 238}},
    {{38, 58, 110}, {118, 198, 170}},
    {{38, 58, 18}, {118, 198, 110}},
    {{138, 58, 128}, {218, 198, 238}},
    {{138, 58, 18}, {218, 198, 128}},
}};

/// Max-diameter upper bounds (mm) for T1..T3; anything larger is T4.
inline constexpr std::array<double, 3> kTStageLimits{30.0, 50.0, 70.0};

/// Option index helpers used by decoders and oracles.
std::optional<int> lobe_for_point(const Vec3& p);
int t_stage_for_diameter(double max_diameter_mm);
int n_stage_for_count(int hot_foci);
/// (histology index, grade index) from mean lesion PET uptake.
std::pair<int, int> decode_uptake(double mean_uptake);

/// Option ids are "A", "B", ... in the order below.
std::string option_id(int index);

struct ChestLabels {
  int location = 0;   // 0..4
  int t_stage = 0;    // 0..3 -> T1..T4
  int n_stage = 0;    // 0..3 -> N0..N3
  int histology = 0;  // 0..2
  int grade = 0;      // 0..2
};

/// Round-robin label assignment (class_balance = BALANCED).
BrainClass brain_class_for_case(std::int64_t case_index);
ChestLabels chest_labels_for_case(std::int64_t case_index);

// ---- generation ------------------------------------------------------------

struct GenSpec {
  std::uint64_t seed = 0;
  ModuleKind module = ModuleKind::Brain;
  std::int64_t n_cases = 1;
  GridDims grid{64, 64, 64};
  int default_budget = 40;
};

/// Throws BadArgs when n_cases < 1 or any grid dim < 16.
void validate(const GenSpec& spec);

StudyPackage gen_study(std::uint64_t seed, ModuleKind module, std::int64_t case_index,
                       GridDims grid = {64, 64, 64});

/// Study ids are "<module>-<seed>-<case>" with the case zero-padded to 4.
std::string study_id_for(std::uint64_t seed, ModuleKind module, std::int64_t case_index);

}  // namespace synth
}  // namespace voxagent
