#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "voxagent/digest.hpp"
#include "voxagent/study.hpp"

namespace voxagent {

/// MVOL: 64-byte little-endian header then nx*ny*nz int16 LE voxels.
///   0  char[4] "MVOL"
///   4  u32 nx, u32 ny, u32 nz
///  16  f64 spacing x, y, z
///  40  f64 origin x, y, z
inline constexpr std::size_t kMvolHeaderSize = 64;

Bytes encode_mvol(const Volume& volume);
Volume decode_mvol(std::span<const std::uint8_t> bytes);

inline constexpr std::string_view kManifestName = "manifest.json";
inline constexpr std::string_view kTruthName = "truth.json";
inline constexpr std::string_view kPackageFormat = "voxagent-study/1";

/// Serialized documents; canonical text of these is what lands on disk.
nlohmann::json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& j);
nlohmann::json task_to_json(const TaskSpec& task);
TaskSpec task_from_json(const nlohmann::json& j);

/// Writes manifest.json, truth.json (when present) and one .mvol per series.
/// Fills pkg.checksums as a side effect of computing the manifest.
void write_study_package(StudyPackage& pkg, const std::filesystem::path& dir);

/// Validating loader. Errors: MissingFile, ChecksumMismatch, SchemaViolation.
StudyPackage load_study_package(const std::filesystem::path& dir);

}  // namespace voxagent
