#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "voxagent/digest.hpp"
#include "voxagent/study.hpp"

namespace voxagent {

/// Analytic stand-in for an expert segmentation tool: seeded, bounded,
/// 6-connected region growing over an intensity window.
struct SegmentationParams {
  Vec3 seed_mm;
  double lo = 0;
  double hi = 0;
  double max_radius_mm = 0;
  bool operator==(const SegmentationParams&) const = default;
};

struct SegmentationMask {
  std::string series_id;
  GridDims dims;
  Vec3 spacing;
  Vec3 origin;
  SegmentationParams params;
  /// Sorted flat (x-fastest) voxel indices.
  std::vector<std::int64_t> voxels;
  bool operator==(const SegmentationMask&) const = default;
};

struct MaskStats {
  std::int64_t voxel_count = 0;
  double volume_mm3 = 0;
  Vec3 centroid_mm;
  double mean_intensity = 0;
  double max_diameter_mm = 0;
};

/// Errors: BadArgs (lo > hi, radius <= 0, non-finite input), SeedOutOfBounds,
/// SeedOutsideThreshold.
SegmentationMask local_threshold_segment(const Volume& volume, std::string series_id,
                                         const SegmentationParams& params);

/// Stats of a mask over the volume it was drawn on. Throws EmptyMask.
MaskStats mask_stats(const SegmentationMask& mask, const Volume& volume);

/// Stats of an arbitrary voxel set (sorted or not). Throws EmptyMask.
MaskStats measure_voxels(const Volume& volume, std::span<const std::int64_t> flat_voxels);

/// Largest pairwise distance between voxel centres. Only voxels with a
/// 6-neighbour outside the set can be extreme points, so the search runs
/// over that boundary subset.
double max_voxel_diameter(const Volume& volume, std::span<const std::int64_t> flat_voxels);

/// Mask artifact bytes:
///   "VXMASK01"                        8 bytes magic
///   u32 len, series_id bytes
///   f64 lo, f64 hi
///   f64 seed x,y,z, f64 max_radius_mm
///   u32 nx, ny, nz
///   f64 spacing x,y,z, f64 origin x,y,z
///   u32 run_count, then run_count x (u64 start, u64 length)
/// All little-endian; runs ascend over the flat x-fastest index space.
Bytes encode_mask(const SegmentationMask& mask);
SegmentationMask decode_mask(std::span<const std::uint8_t> bytes);

}  // namespace voxagent
