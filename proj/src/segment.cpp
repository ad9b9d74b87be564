#include "voxagent/segment.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <deque>
#include <unordered_set>

#include "voxagent/error.hpp"

namespace voxagent {
namespace {

constexpr std::array<std::array<int, 3>, 6> kFaceNeighbors{{
    {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

void put_u32(Bytes& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}
void put_u64(Bytes& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}
void put_f64(Bytes& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint64_t u(int width) {
    if (at_ + width > in_.size()) throw Error(Errc::Malformed, "mask artifact truncated");
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) v |= std::uint64_t{in_[at_ + b]} << (8 * b);
    at_ += width;
    return v;
  }
  double f64() { return std::bit_cast<double>(u(8)); }
  std::string str(std::size_t n) {
    if (at_ + n > in_.size()) throw Error(Errc::Malformed, "mask artifact truncated");
    std::string s(reinterpret_cast<const char*>(in_.data() + at_), n);
    at_ += n;
    return s;
  }
  bool done() const { return at_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t at_ = 0;
};

}  // namespace

SegmentationMask local_threshold_segment(const Volume& volume, std::string series_id,
                                         const SegmentationParams& params) {
  const Vec3& seed = params.seed_mm;
  if (!std::isfinite(seed.x) || !std::isfinite(seed.y) || !std::isfinite(seed.z) ||
      !std::isfinite(params.lo) || !std::isfinite(params.hi) || !std::isfinite(params.max_radius_mm)) {
    throw Error(Errc::BadArgs, "segmentation inputs must be finite");
  }
  if (params.lo > params.hi) throw Error(Errc::BadArgs, "lo must not exceed hi");
  if (!(params.max_radius_mm > 0)) throw Error(Errc::BadArgs, "max_radius_mm must be positive");

  Index3 seed_idx;
  try {
    seed_idx = world_to_voxel(volume, seed);
  } catch (const Error&) {
    throw Error(Errc::SeedOutOfBounds, "seed lies outside the volume");
  }
  const auto inside_window = [&](std::int16_t v) { return v >= params.lo && v <= params.hi; };
  const auto inside_radius = [&](const Index3& idx) {
    return distance(voxel_center(volume, idx), seed) <= params.max_radius_mm;
  };
  if (!inside_window(volume.at(seed_idx))) {
    throw Error(Errc::SeedOutsideThreshold, "seed voxel intensity " + std::to_string(volume.at(seed_idx)) +
                                                " is outside [lo, hi]");
  }

  const GridDims& dims = volume.dims();
  SegmentationMask mask{std::move(series_id), dims, volume.spacing(), volume.origin(), params, {}};
  // Seed voxel centre may itself be farther than the radius from the seed
  // point on very coarse grids; it is always included.
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(dims.count()), 0);
  std::deque<Index3> frontier{seed_idx};
  visited[static_cast<std::size_t>(dims.flat(seed_idx))] = 1;
  while (!frontier.empty()) {
    const Index3 cur = frontier.front();
    frontier.pop_front();
    mask.voxels.push_back(dims.flat(cur));
    for (const auto& d : kFaceNeighbors) {
      const Index3 next{cur.i + d[0], cur.j + d[1], cur.k + d[2]};
      if (!dims.contains(next)) continue;
      auto& seen = visited[static_cast<std::size_t>(dims.flat(next))];
      if (seen) continue;
      seen = 1;
      if (inside_window(volume.at(next)) && inside_radius(next)) frontier.push_back(next);
    }
  }
  std::sort(mask.voxels.begin(), mask.voxels.end());
  return mask;
}

double max_voxel_diameter(const Volume& volume, std::span<const std::int64_t> flat_voxels) {
  const GridDims& dims = volume.dims();
  std::unordered_set<std::int64_t> members(flat_voxels.begin(), flat_voxels.end());
  std::vector<Vec3> boundary;
  for (std::int64_t f : members) {
    const Index3 idx = dims.unflat(f);
    bool interior = true;
    for (const auto& d : kFaceNeighbors) {
      const Index3 n{idx.i + d[0], idx.j + d[1], idx.k + d[2]};
      if (!dims.contains(n) || !members.contains(dims.flat(n))) {
        interior = false;
        break;
      }
    }
    if (!interior) boundary.push_back(voxel_center(volume, idx));
  }
  double best_sq = 0;
  for (std::size_t a = 0; a < boundary.size(); ++a) {
    for (std::size_t b = a + 1; b < boundary.size(); ++b) {
      const Vec3 d = boundary[a] - boundary[b];
      best_sq = std::max(best_sq, d.x * d.x + d.y * d.y + d.z * d.z);
    }
  }
  return std::sqrt(best_sq);
}

MaskStats measure_voxels(const Volume& volume, std::span<const std::int64_t> flat_voxels) {
  if (flat_voxels.empty()) throw Error(Errc::EmptyMask, "mask has no voxels");
  const GridDims& dims = volume.dims();
  MaskStats stats;
  stats.voxel_count = static_cast<std::int64_t>(flat_voxels.size());
  const Vec3& s = volume.spacing();
  stats.volume_mm3 = static_cast<double>(stats.voxel_count) * s.x * s.y * s.z;
  // Sum in index space to keep the centroid exact for symmetric sets.
  double si = 0, sj = 0, sk = 0, sv = 0;
  for (std::int64_t f : flat_voxels) {
    const Index3 idx = dims.unflat(f);
    si += static_cast<double>(idx.i);
    sj += static_cast<double>(idx.j);
    sk += static_cast<double>(idx.k);
    sv += volume.voxels()[static_cast<std::size_t>(f)];
  }
  const double n = static_cast<double>(stats.voxel_count);
  const Vec3& o = volume.origin();
  stats.centroid_mm = {o.x + si / n * s.x, o.y + sj / n * s.y, o.z + sk / n * s.z};
  stats.mean_intensity = sv / n;
  stats.max_diameter_mm = max_voxel_diameter(volume, flat_voxels);
  return stats;
}

MaskStats mask_stats(const SegmentationMask& mask, const Volume& volume) {
  if (mask.dims != volume.dims()) throw Error(Errc::BadArgs, "mask and volume grids differ");
  return measure_voxels(volume, mask.voxels);
}

Bytes encode_mask(const SegmentationMask& mask) {
  Bytes out{'V', 'X', 'M', 'A', 'S', 'K', '0', '1'};
  put_u32(out, static_cast<std::uint32_t>(mask.series_id.size()));
  out.insert(out.end(), mask.series_id.begin(), mask.series_id.end());
  put_f64(out, mask.params.lo);
  put_f64(out, mask.params.hi);
  for (int a = 0; a < 3; ++a) put_f64(out, mask.params.seed_mm[a]);
  put_f64(out, mask.params.max_radius_mm);
  for (int a = 0; a < 3; ++a) put_u32(out, static_cast<std::uint32_t>(mask.dims[a]));
  for (int a = 0; a < 3; ++a) put_f64(out, mask.spacing[a]);
  for (int a = 0; a < 3; ++a) put_f64(out, mask.origin[a]);

  std::vector<std::pair<std::uint64_t, std::uint64_t>> runs;
  for (std::int64_t f : mask.voxels) {
    const auto u = static_cast<std::uint64_t>(f);
    if (!runs.empty() && runs.back().first + runs.back().second == u) {
      ++runs.back().second;
    } else {
      runs.emplace_back(u, 1);
    }
  }
  put_u32(out, static_cast<std::uint32_t>(runs.size()));
  for (const auto& [start, len] : runs) {
    put_u64(out, start);
    put_u64(out, len);
  }
  return out;
}

SegmentationMask decode_mask(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "VXMASK01", 8) != 0) {
    throw Error(Errc::Malformed, "not a mask artifact");
  }
  Reader r(bytes.subspan(8));
  SegmentationMask mask;
  mask.series_id = r.str(r.u(4));
  mask.params.lo = r.f64();
  mask.params.hi = r.f64();
  mask.params.seed_mm = {r.f64(), r.f64(), r.f64()};
  mask.params.max_radius_mm = r.f64();
  const auto nx = static_cast<std::int64_t>(r.u(4));
  const auto ny = static_cast<std::int64_t>(r.u(4));
  const auto nz = static_cast<std::int64_t>(r.u(4));
  mask.dims = {nx, ny, nz};
  mask.spacing = {r.f64(), r.f64(), r.f64()};
  mask.origin = {r.f64(), r.f64(), r.f64()};
  const auto runs = r.u(4);
  for (std::uint64_t i = 0; i < runs; ++i) {
    const auto start = r.u(8);
    const auto len = r.u(8);
    if (start + len > static_cast<std::uint64_t>(mask.dims.count())) throw Error(Errc::Malformed, "run outside grid");
    for (std::uint64_t v = 0; v < len; ++v) mask.voxels.push_back(static_cast<std::int64_t>(start + v));
  }
  if (!r.done()) throw Error(Errc::Malformed, "trailing bytes in mask artifact");
  return mask;
}

}  // namespace voxagent
