#pragma once

// Test-only helpers and brute-force oracles. The oracles deliberately avoid
// the library's algorithms (BFS, boundary pruning, lobe lookup) so that
// agreement means something.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "voxagent/segment.hpp"
#include "voxagent/study.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace voxagent;

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = fs::temp_directory_path() / ("voxagent-test-" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline Volume make_volume(GridDims dims, Vec3 spacing = {1, 1, 1}, Vec3 origin = {0, 0, 0}, std::int16_t fill = 0) {
  return Volume(dims, spacing, origin, std::vector<std::int16_t>(static_cast<std::size_t>(dims.count()), fill));
}

inline Vec3 center_of(const Volume& v, std::int64_t i, std::int64_t j, std::int64_t k) {
  return {v.origin().x + static_cast<double>(i) * v.spacing().x, v.origin().y + static_cast<double>(j) * v.spacing().y,
          v.origin().z + static_cast<double>(k) * v.spacing().z};
}

/// Nearest index along one axis; exact ties go away from zero.
inline std::int64_t nearest_index(double p, double origin, double spacing) {
  const double c = (p - origin) / spacing;
  const double lo = std::floor(c), hi = std::ceil(c);
  const double dlo = c - lo, dhi = hi - c;
  if (dlo < dhi) return static_cast<std::int64_t>(lo);
  if (dhi < dlo) return static_cast<std::int64_t>(hi);
  return static_cast<std::int64_t>(c >= 0 ? hi : lo);
}

/// Fixpoint region growing: keep adding any eligible voxel with a masked
/// 6-neighbour until nothing changes. Returns nullopt when the seed voxel is
/// out of the grid or outside [lo, hi].
inline std::optional<std::set<std::int64_t>> flood_oracle(const Volume& v, const SegmentationParams& p) {
  const GridDims d = v.dims();
  const std::int64_t si = nearest_index(p.seed_mm.x, v.origin().x, v.spacing().x);
  const std::int64_t sj = nearest_index(p.seed_mm.y, v.origin().y, v.spacing().y);
  const std::int64_t sk = nearest_index(p.seed_mm.z, v.origin().z, v.spacing().z);
  if (si < 0 || sj < 0 || sk < 0 || si >= d.nx || sj >= d.ny || sk >= d.nz) return std::nullopt;
  auto flat = [&](std::int64_t i, std::int64_t j, std::int64_t k) { return i + d.nx * (j + d.ny * k); };
  auto value = [&](std::int64_t i, std::int64_t j, std::int64_t k) { return v.voxels()[static_cast<std::size_t>(flat(i, j, k))]; };
  if (value(si, sj, sk) < p.lo || value(si, sj, sk) > p.hi) return std::nullopt;

  std::vector<char> in(static_cast<std::size_t>(d.count()), 0);
  in[static_cast<std::size_t>(flat(si, sj, sk))] = 1;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::int64_t k = 0; k < d.nz; ++k)
      for (std::int64_t j = 0; j < d.ny; ++j)
        for (std::int64_t i = 0; i < d.nx; ++i) {
          const auto f = static_cast<std::size_t>(flat(i, j, k));
          if (in[f]) continue;
          const double val = value(i, j, k);
          if (val < p.lo || val > p.hi) continue;
          const Vec3 c = center_of(v, i, j, k);
          const double dx = c.x - p.seed_mm.x, dy = c.y - p.seed_mm.y, dz = c.z - p.seed_mm.z;
          if (std::sqrt(dx * dx + dy * dy + dz * dz) > p.max_radius_mm) continue;
          const std::array<std::array<std::int64_t, 3>, 6> nb{{{i - 1, j, k}, {i + 1, j, k}, {i, j - 1, k},
                                                               {i, j + 1, k}, {i, j, k - 1}, {i, j, k + 1}}};
          for (const auto& n : nb) {
            if (n[0] < 0 || n[1] < 0 || n[2] < 0 || n[0] >= d.nx || n[1] >= d.ny || n[2] >= d.nz) continue;
            if (in[static_cast<std::size_t>(flat(n[0], n[1], n[2]))]) {
              in[f] = 1;
              changed = true;
              break;
            }
          }
        }
  }
  std::set<std::int64_t> out;
  for (std::int64_t f = 0; f < d.count(); ++f) {
    if (in[static_cast<std::size_t>(f)]) out.insert(f);
  }
  return out;
}

/// All-pairs maximum distance between voxel centres.
inline double brute_diameter(const Volume& v, const std::vector<std::int64_t>& flat) {
  std::vector<Vec3> pts;
  const GridDims d = v.dims();
  for (auto f : flat) pts.push_back(center_of(v, f % d.nx, (f / d.nx) % d.ny, f / (d.nx * d.ny)));
  double best = 0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      const double dx = pts[a].x - pts[b].x, dy = pts[a].y - pts[b].y, dz = pts[a].z - pts[b].z;
      best = std::max(best, dx * dx + dy * dy + dz * dz);
    }
  return std::sqrt(best);
}

/// Answers a chest study straight from its PET voxels using the published
/// layout constants, typed in here independently of the generator.
struct ChestReading {
  int location = -1;  // index into RUL, RML, RLL, LUL, LLL; -1 = outside every box
  int t_stage = -1;
  int histology = -1;
  int grade = -1;
  double diameter_mm = 0;
  Vec3 centroid;
  std::int64_t voxels = 0;
};

inline ChestReading read_chest_pet(const Volume& pet) {
  constexpr double kLesionThreshold = 1800;
  constexpr double kBoxes[5][6] = {
      {38, 58, 170, 118, 198, 238}, {38, 58, 110, 118, 198, 170}, {38, 58, 18, 118, 198, 110},
      {138, 58, 128, 218, 198, 238}, {138, 58, 18, 218, 198, 128},
  };
  ChestReading r;
  std::vector<std::int64_t> lesion;
  double sx = 0, sy = 0, sz = 0, sum = 0;
  const GridDims d = pet.dims();
  for (std::int64_t f = 0; f < d.count(); ++f) {
    const double val = pet.voxels()[static_cast<std::size_t>(f)];
    if (val < kLesionThreshold) continue;
    lesion.push_back(f);
    const Vec3 c = center_of(pet, f % d.nx, (f / d.nx) % d.ny, f / (d.nx * d.ny));
    sx += c.x;
    sy += c.y;
    sz += c.z;
    sum += val;
  }
  r.voxels = static_cast<std::int64_t>(lesion.size());
  if (lesion.empty()) return r;
  const double n = static_cast<double>(lesion.size());
  r.centroid = {sx / n, sy / n, sz / n};
  for (int b = 0; b < 5; ++b) {
    const auto& bx = kBoxes[b];
    if (r.centroid.x >= bx[0] && r.centroid.x <= bx[3] && r.centroid.y >= bx[1] && r.centroid.y <= bx[4] &&
        r.centroid.z >= bx[2] && r.centroid.z <= bx[5]) {
      r.location = b;
      break;
    }
  }
  r.diameter_mm = brute_diameter(pet, lesion);
  r.t_stage = r.diameter_mm <= 30 ? 0 : r.diameter_mm <= 50 ? 1 : r.diameter_mm <= 70 ? 2 : 3;
  const long bin = std::lround((sum / n - 2000.0) / 300.0);
  r.histology = static_cast<int>(bin / 3);
  r.grade = static_cast<int>(bin % 3);
  return r;
}

inline std::string letter(int index) { return std::string(1, static_cast<char>('A' + index)); }

}  // namespace testsupport
