#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "voxagent/episode.hpp"
#include "voxagent/synth.hpp"

namespace voxagent {

struct SuiteCase {
  StudyPackage package;
  Episode episode;
};

/// n_cases packages with one default episode each (Track A, MCQ, default budget).
std::vector<SuiteCase> gen_suite(const synth::GenSpec& spec);

inline constexpr std::string_view kSuiteManifestName = "suite.json";
inline constexpr std::string_view kSuiteFormat = "voxagent-suite/1";

/// Layout: <dir>/suite.json and <dir>/studies/<study_id>/...
/// Returns the suite digest (also recorded in suite.json).
std::string write_suite(std::vector<SuiteCase>& suite, const synth::GenSpec& spec, const std::filesystem::path& dir);

struct SuiteIndex {
  std::filesystem::path root;
  ModuleKind module = ModuleKind::Brain;
  std::vector<Episode> episodes;
  std::string digest;

  std::filesystem::path study_dir(const std::string& study_id) const { return root / "studies" / study_id; }
};

SuiteIndex load_suite_index(const std::filesystem::path& dir);

/// SHA-256 over the sorted (relative path, file digest) listing of every
/// study file under <dir>/studies.
std::string compute_suite_digest(const std::filesystem::path& dir);

}  // namespace voxagent
