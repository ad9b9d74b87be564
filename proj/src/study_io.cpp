#include "voxagent/study_io.hpp"

#include <bit>
#include <cstring>
#include <ranges>

#include "voxagent/error.hpp"

namespace voxagent {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(Bytes& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= std::uint32_t{in[at + b]} << (8 * b);
  return v;
}

double get_f64(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= std::uint64_t{in[at + b]} << (8 * b);
  return std::bit_cast<double>(v);
}

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::SchemaViolation, "expected a 3-vector");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

std::string series_file(const SeriesMeta& meta) { return meta.series_id + ".mvol"; }

json parse_json_file(const fs::path& path, const Bytes& bytes) {
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, path.filename().string() + ": " + e.what());
  }
}

void check_digest(const std::map<std::string, std::string>& sums, const std::string& name,
                  const Bytes& bytes) {
  auto it = sums.find(name);
  if (it == sums.end()) throw Error(Errc::SchemaViolation, "no checksum listed for " + name);
  if (it->second != sha256_hex(bytes)) throw Error(Errc::ChecksumMismatch, name);
}

}  // namespace

Bytes encode_mvol(const Volume& volume) {
  Bytes out;
  out.reserve(kMvolHeaderSize + volume.voxels().size() * 2);
  for (char c : std::string_view("MVOL")) out.push_back(static_cast<std::uint8_t>(c));
  for (int a = 0; a < 3; ++a) put_u32(out, static_cast<std::uint32_t>(volume.dims()[a]));
  for (int a = 0; a < 3; ++a) put_f64(out, volume.spacing()[a]);
  for (int a = 0; a < 3; ++a) put_f64(out, volume.origin()[a]);
  for (std::int16_t v : volume.voxels()) {
    const auto u = static_cast<std::uint16_t>(v);
    out.push_back(static_cast<std::uint8_t>(u & 0xFF));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
  }
  return out;
}

Volume decode_mvol(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMvolHeaderSize || std::memcmp(bytes.data(), "MVOL", 4) != 0) {
    throw Error(Errc::SchemaViolation, "not an MVOL volume");
  }
  GridDims dims{get_u32(bytes, 4), get_u32(bytes, 8), get_u32(bytes, 12)};
  Vec3 spacing{get_f64(bytes, 16), get_f64(bytes, 24), get_f64(bytes, 32)};
  Vec3 origin{get_f64(bytes, 40), get_f64(bytes, 48), get_f64(bytes, 56)};
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) throw Error(Errc::SchemaViolation, "MVOL dims must be >= 1");
  const auto count = static_cast<std::size_t>(dims.count());
  if (bytes.size() != kMvolHeaderSize + 2 * count) {
    throw Error(Errc::SchemaViolation, "MVOL payload size does not match dims");
  }
  std::vector<std::int16_t> voxels(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = kMvolHeaderSize + 2 * i;
    voxels[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(bytes[at] | (bytes[at + 1] << 8)));
  }
  return Volume(dims, spacing, origin, std::move(voxels));
}

json task_to_json(const TaskSpec& task) {
  json j{{"task_id", task.task_id},
         {"question", task.question},
         {"kind", task.kind == AnswerKind::Mcq ? "mcq" : "open"}};
  json opts = json::array();
  for (const auto& o : task.options) opts.push_back({{"id", o.id}, {"text", o.text}});
  j["options"] = std::move(opts);
  return j;
}

TaskSpec task_from_json(const json& j) {
  TaskSpec t;
  t.task_id = j.at("task_id").get<std::string>();
  t.question = j.at("question").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "mcq") {
    t.kind = AnswerKind::Mcq;
  } else if (kind == "open") {
    t.kind = AnswerKind::Open;
  } else {
    throw Error(Errc::SchemaViolation, "unknown task kind " + kind);
  }
  for (const auto& o : j.at("options")) t.options.push_back({o.at("id").get<std::string>(), o.at("text").get<std::string>()});
  return t;
}

json truth_to_json(const GroundTruth& truth) {
  json answers = json::object();
  for (const auto& [task, a] : truth.answers) answers[task] = {{"option", a.option_id}, {"text", a.text}};
  json lesions = json::array();
  for (const auto& l : truth.lesions) {
    lesions.push_back({{"series_id", l.series_id},
                       {"centroid_mm", vec_to_json(l.centroid_mm)},
                       {"max_diameter_mm", l.max_diameter_mm},
                       {"voxel_count", l.voxel_count},
                       {"mean_intensity", l.mean_intensity}});
  }
  json nodes = json::array();
  for (const auto& n : truth.nodes) nodes.push_back(vec_to_json(n));
  return {{"label", truth.label}, {"answers", answers}, {"lesions", lesions}, {"nodes", nodes}};
}

GroundTruth truth_from_json(const json& j) {
  GroundTruth t;
  t.label = j.at("label").get<std::string>();
  for (const auto& [task, a] : j.at("answers").items()) {
    t.answers[task] = {a.at("option").get<std::string>(), a.at("text").get<std::string>()};
  }
  for (const auto& l : j.at("lesions")) {
    t.lesions.push_back({l.at("series_id").get<std::string>(), vec_from_json(l.at("centroid_mm")),
                         l.at("max_diameter_mm").get<double>(), l.at("voxel_count").get<std::int64_t>(),
                         l.at("mean_intensity").get<double>()});
  }
  for (const auto& n : j.at("nodes")) t.nodes.push_back(vec_from_json(n));
  return t;
}

void write_study_package(StudyPackage& pkg, const fs::path& dir) {
  validate_package(pkg);
  fs::create_directories(dir);
  pkg.checksums.clear();

  json series = json::array();
  for (const auto& s : pkg.series) {
    const Bytes bytes = encode_mvol(s.volume);
    const std::string name = series_file(s.meta);
    write_file_bytes((dir / name).string(), bytes);
    pkg.checksums[name] = sha256_hex(bytes);
    series.push_back({{"series_id", s.meta.series_id},
                      {"modality", modality_tag(s.meta.modality)},
                      {"description", s.meta.description},
                      {"file", name}});
  }
  if (pkg.truth) {
    const std::string text = canonical(truth_to_json(*pkg.truth));
    write_file_text((dir / kTruthName).string(), text);
    pkg.checksums[std::string(kTruthName)] = sha256_hex(text);
  }
  json tasks = json::array();
  for (const auto& t : pkg.tasks) tasks.push_back(task_to_json(t));

  const json manifest{{"format", kPackageFormat},
                      {"study_id", pkg.study_id},
                      {"module", module_tag(pkg.module)},
                      {"series", series},
                      {"tasks", tasks},
                      {"checksums", pkg.checksums}};
  write_file_text((dir / kManifestName).string(), canonical(manifest));
}

StudyPackage load_study_package(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  if (!fs::exists(manifest_path)) throw Error(Errc::MissingFile, manifest_path.string());
  const json manifest = parse_json_file(manifest_path, read_file_bytes(manifest_path.string()));

  StudyPackage pkg;
  std::vector<std::pair<SeriesMeta, std::string>> listed;
  try {
    if (manifest.at("format").get<std::string>() != kPackageFormat) {
      throw Error(Errc::SchemaViolation, "unsupported package format");
    }
    pkg.study_id = manifest.at("study_id").get<std::string>();
    pkg.module = parse_module(manifest.at("module").get<std::string>());
    pkg.checksums = manifest.at("checksums").get<std::map<std::string, std::string>>();
    for (const auto& s : manifest.at("series")) {
      SeriesMeta meta{s.at("series_id").get<std::string>(), parse_modality(s.at("modality").get<std::string>()),
                      s.at("description").get<std::string>()};
      listed.emplace_back(std::move(meta), s.at("file").get<std::string>());
    }
    for (const auto& t : manifest.at("tasks")) pkg.tasks.push_back(task_from_json(t));
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, std::string("manifest: ") + e.what());
  }

  for (const auto& name : pkg.checksums | std::views::keys) {
    if (name != kTruthName && !fs::exists(dir / name)) throw Error(Errc::MissingFile, (dir / name).string());
  }
  for (auto& [meta, file] : listed) {
    if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
      throw Error(Errc::SchemaViolation, "series file must be a plain name");
    }
    const fs::path path = dir / file;
    if (!fs::exists(path)) throw Error(Errc::MissingFile, path.string());
    const Bytes bytes = read_file_bytes(path.string());
    check_digest(pkg.checksums, file, bytes);
    pkg.series.push_back({std::move(meta), decode_mvol(bytes)});
  }

  const fs::path truth_path = dir / kTruthName;
  if (fs::exists(truth_path)) {
    const Bytes bytes = read_file_bytes(truth_path.string());
    check_digest(pkg.checksums, std::string(kTruthName), bytes);
    try {
      pkg.truth = truth_from_json(parse_json_file(truth_path, bytes));
    } catch (const json::exception& e) {
      throw Error(Errc::SchemaViolation, std::string("truth: ") + e.what());
    }
  }
  validate_package(pkg);
  return pkg;
}

}  // namespace voxagent
