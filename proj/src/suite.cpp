#include "voxagent/suite.hpp"

#include <algorithm>

#include "voxagent/error.hpp"
#include "voxagent/rng.hpp"
#include "voxagent/study_io.hpp"

namespace voxagent {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<SuiteCase> gen_suite(const synth::GenSpec& spec) {
  synth::validate(spec);
  std::vector<SuiteCase> out;
  out.reserve(static_cast<std::size_t>(spec.n_cases));
  for (std::int64_t i = 0; i < spec.n_cases; ++i) {
    StudyPackage pkg = synth::gen_study(spec.seed, spec.module, i, spec.grid);
    Episode ep;
    ep.episode_id = "ep-" + pkg.study_id;
    ep.study_id = pkg.study_id;
    ep.tool_budget = spec.default_budget;
    ep.rng_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(i));
    out.push_back({std::move(pkg), std::move(ep)});
  }
  return out;
}

std::string compute_suite_digest(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> listing;
  const fs::path studies = dir / "studies";
  if (fs::exists(studies)) {
    for (const auto& entry : fs::recursive_directory_iterator(studies)) {
      if (!entry.is_regular_file()) continue;
      listing.emplace_back(fs::relative(entry.path(), dir).generic_string(),
                           sha256_hex(read_file_bytes(entry.path().string())));
    }
  }
  std::sort(listing.begin(), listing.end());
  return digest_of(listing);
}

std::string write_suite(std::vector<SuiteCase>& suite, const synth::GenSpec& spec, const fs::path& dir) {
  fs::create_directories(dir / "studies");
  json episodes = json::array();
  for (auto& c : suite) {
    write_study_package(c.package, dir / "studies" / c.package.study_id);
    episodes.push_back(episode_to_json(c.episode));
  }
  const std::string digest = compute_suite_digest(dir);
  const json manifest{{"format", kSuiteFormat},
                      {"gen",
                       {{"seed", spec.seed},
                        {"module", module_tag(spec.module)},
                        {"n_cases", spec.n_cases},
                        {"grid", {spec.grid.nx, spec.grid.ny, spec.grid.nz}},
                        {"class_balance", "BALANCED"}}},
                      {"episodes", episodes},
                      {"digest", digest}};
  write_file_text((dir / kSuiteManifestName).string(), canonical(manifest) + "\n");
  return digest;
}

SuiteIndex load_suite_index(const fs::path& dir) {
  const fs::path path = dir / kSuiteManifestName;
  if (!fs::exists(path)) throw Error(Errc::MissingFile, path.string());
  const Bytes bytes = read_file_bytes(path.string());
  SuiteIndex idx;
  idx.root = dir;
  try {
    const json j = json::parse(bytes.begin(), bytes.end());
    if (j.at("format").get<std::string>() != kSuiteFormat) throw Error(Errc::SchemaViolation, "unsupported suite format");
    idx.module = parse_module(j.at("gen").at("module").get<std::string>());
    idx.digest = j.at("digest").get<std::string>();
    for (const auto& e : j.at("episodes")) idx.episodes.push_back(episode_from_json(e));
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("suite.json: ") + e.what());
  }
  return idx;
}

}  // namespace voxagent
