#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "expect_errc.hpp"
#include "support.hpp"
#include "voxagent/rng.hpp"
#include "voxagent/segment.hpp"

using namespace voxagent;
using testsupport::make_volume;

namespace {

std::set<std::int64_t> as_set(const SegmentationMask& m) { return {m.voxels.begin(), m.voxels.end()}; }

}  // namespace

TEST(Segment, UniformCubeIsFullyGrown) {
  const Volume v = make_volume({3, 3, 3}, {1, 1, 1}, {0, 0, 0}, 100);
  const SegmentationMask m = local_threshold_segment(v, "S", {{1, 1, 1}, 50, 150, 100});
  ASSERT_EQ(m.voxels.size(), 27u);
  const MaskStats s = mask_stats(m, v);
  EXPECT_EQ(s.voxel_count, 27);
  EXPECT_DOUBLE_EQ(s.volume_mm3, 27.0);
  EXPECT_DOUBLE_EQ(s.centroid_mm.x, 1.0);
  EXPECT_DOUBLE_EQ(s.centroid_mm.y, 1.0);
  EXPECT_DOUBLE_EQ(s.centroid_mm.z, 1.0);
  EXPECT_DOUBLE_EQ(s.mean_intensity, 100.0);
  EXPECT_DOUBLE_EQ(s.max_diameter_mm, std::sqrt(12.0));
}

TEST(Segment, SingleBrightVoxel) {
  Volume v = make_volume({5, 5, 5}, {2, 2, 2}, {-4, -4, -4});
  v.at({2, 3, 1}) = 200;
  const SegmentationMask m = local_threshold_segment(v, "S", {voxel_to_world(v, {2, 3, 1}), 150, 250, 10});
  const MaskStats s = mask_stats(m, v);
  EXPECT_EQ(s.voxel_count, 1);
  EXPECT_EQ(s.centroid_mm, voxel_to_world(v, {2, 3, 1}));
  EXPECT_DOUBLE_EQ(s.max_diameter_mm, 0.0);
  EXPECT_DOUBLE_EQ(s.volume_mm3, 8.0);
}

TEST(Segment, Errors) {
  const Volume v = make_volume({4, 4, 4});
  EXPECT_ERRC(local_threshold_segment(v, "S", {{1, 1, 1}, 150, 250, 10}), Errc::SeedOutsideThreshold);
  EXPECT_ERRC(local_threshold_segment(v, "S", {{10, 1, 1}, -1, 1, 10}), Errc::SeedOutOfBounds);
  EXPECT_ERRC(local_threshold_segment(v, "S", {{1, 1, 1}, 2, 1, 10}), Errc::BadArgs);
  EXPECT_ERRC(local_threshold_segment(v, "S", {{1, 1, 1}, 0, 1, 0}), Errc::BadArgs);
  EXPECT_ERRC(local_threshold_segment(v, "S", {{NAN, 1, 1}, 0, 1, 1}), Errc::BadArgs);
}

TEST(MaskStats, ExamplesOnIdentityGrid) {
  const Volume v = make_volume({8, 8, 8});
  const std::vector<std::int64_t> one{v.dims().flat({2, 2, 2})};
  const MaskStats s = measure_voxels(v, one);
  EXPECT_EQ(s.centroid_mm, (Vec3{2, 2, 2}));
  EXPECT_DOUBLE_EQ(s.volume_mm3, 1.0);
  const std::vector<std::int64_t> two{v.dims().flat({0, 0, 0}), v.dims().flat({3, 4, 0})};
  EXPECT_DOUBLE_EQ(measure_voxels(v, two).max_diameter_mm, 5.0);
  EXPECT_ERRC(measure_voxels(v, std::vector<std::int64_t>{}), Errc::EmptyMask);
}

TEST(Segment, RadiusBoundsAndSeedContainment) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Volume v = make_volume({12, 12, 12}, {1.5, 1, 0.75}, {-5, 3, 0}, 100);
    const Vec3 seed = testsupport::center_of(v, rng.between(0, 11), rng.between(0, 11), rng.between(0, 11));
    const double radius = rng.uniform(0.5, 8);
    const SegmentationMask m = local_threshold_segment(v, "S", {seed, 0, 200, radius});
    const Index3 sidx = world_to_voxel(v, seed);
    EXPECT_TRUE(std::binary_search(m.voxels.begin(), m.voxels.end(), v.dims().flat(sidx)));
    for (auto f : m.voxels) EXPECT_LE(distance(voxel_center(v, v.dims().unflat(f)), seed), radius + 1e-9);
  }
}

TEST(Segment, MatchesBruteForceOracleOnRandomVolumes) {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const GridDims d{rng.between(1, 9), rng.between(1, 9), rng.between(1, 9)};
    Volume v = make_volume(d, {rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.5, 2)},
                           {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)});
    for (auto& x : v.voxels()) x = static_cast<std::int16_t>(rng.between(0, 9));
    const Vec3 seed = testsupport::center_of(v, rng.between(0, d.nx - 1), rng.between(0, d.ny - 1), rng.between(0, d.nz - 1));
    const SegmentationParams p{{seed.x + rng.uniform(-0.2, 0.2), seed.y, seed.z}, 3, 7, rng.uniform(1, 12)};
    const auto want = testsupport::flood_oracle(v, p);
    if (!want) {
      EXPECT_ANY_THROW(local_threshold_segment(v, "S", p));
      continue;
    }
    EXPECT_EQ(as_set(local_threshold_segment(v, "S", p)), *want) << "trial " << trial;
  }
}

TEST(Segment, MonotoneInThresholdWindowAndRadius) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    Volume v = make_volume({10, 10, 10});
    for (auto& x : v.voxels()) x = static_cast<std::int16_t>(rng.between(0, 20));
    v.at({5, 5, 5}) = 10;
    const Vec3 seed{5, 5, 5};
    const auto narrow = as_set(local_threshold_segment(v, "S", {seed, 8, 12, 4}));
    const auto wide = as_set(local_threshold_segment(v, "S", {seed, 5, 15, 4}));
    const auto far = as_set(local_threshold_segment(v, "S", {seed, 8, 12, 9}));
    EXPECT_TRUE(std::includes(wide.begin(), wide.end(), narrow.begin(), narrow.end()));
    EXPECT_TRUE(std::includes(far.begin(), far.end(), narrow.begin(), narrow.end()));
  }
}

TEST(Segment, DiameterMatchesAllPairs) {
  Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    Volume v = make_volume({9, 9, 9}, {1, 1.5, 0.5});
    std::vector<std::int64_t> set;
    for (std::int64_t f = 0; f < v.dims().count(); ++f) {
      if (rng.uniform() < 0.15) set.push_back(f);
    }
    if (set.empty()) continue;
    EXPECT_NEAR(max_voxel_diameter(v, set), testsupport::brute_diameter(v, set), 1e-9);
  }
}

TEST(MaskCodec, RoundTrip) {
  Volume v = make_volume({6, 5, 4}, {1, 2, 3}, {-1, -2, -3}, 50);
  v.at({0, 0, 0}) = 0;
  const SegmentationMask m = local_threshold_segment(v, "PET", {{2, 2, 3}, 40, 60, 30});
  const Bytes b = encode_mask(m);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 8), "VXMASK01");
  EXPECT_EQ(decode_mask(b), m);
  EXPECT_ERRC(decode_mask(std::span(b).first(b.size() - 3)), Errc::Malformed);
}
