#include <gtest/gtest.h>

#include <cmath>

#include "expect_errc.hpp"
#include "support.hpp"
#include "voxagent/synth.hpp"
#include "voxagent/viewer.hpp"

using namespace voxagent;
using nlohmann::json;

namespace {

std::shared_ptr<const StudyPackage> chest64() {
  static auto pkg = std::make_shared<const StudyPackage>(synth::gen_study(42, ModuleKind::Chest, 0));
  return pkg;
}

std::shared_ptr<const StudyPackage> constant_study(std::int16_t value) {
  auto pkg = std::make_shared<StudyPackage>();
  pkg->study_id = "const";
  pkg->series.push_back({{"A", Modality::Ct, "a"}, testsupport::make_volume({8, 6, 4}, {1, 1, 1}, {0, 0, 0}, value)});
  pkg->series.push_back({{"B", Modality::Pet, "b"}, testsupport::make_volume({8, 6, 4}, {1, 1, 1}, {0, 0, 0}, 0)});
  return pkg;
}

}  // namespace

TEST(Windowing, ReferencePixels) {
  const Window w{40, 80};
  EXPECT_EQ(window_pixel(0, w), 0);
  EXPECT_EQ(window_pixel(40, w), 128);
  EXPECT_EQ(window_pixel(80, w), 255);
  EXPECT_EQ(window_pixel(-1000, w), 0);
  EXPECT_EQ(window_pixel(1000, w), 255);
}

TEST(Windowing, MatchesLawExhaustively) {
  for (double c : {-600.0, 0.0, 40.0, 1500.0})
    for (double w : {1.0, 80.0, 400.0, 3000.0})
      for (int v = -2000; v <= 3000; v += 7) {
        const double t = std::clamp((v - c + w / 2) / w, 0.0, 1.0);
        EXPECT_EQ(window_pixel(v, {c, w}), static_cast<int>(std::round(255 * t))) << v << " " << c << " " << w;
      }
}

TEST(Render, ConstantVolumeIsMidGray) {
  ViewerSession s(constant_study(300), "s");
  s.set_window(300, 50);
  const RenderOutput r = s.render();
  EXPECT_EQ(r.image.width, 8);
  EXPECT_EQ(r.image.height, 6);
  for (auto p : r.image.pixels) EXPECT_EQ(p, 128);
  EXPECT_EQ(decode_png(r.png.bytes), r.image);
  EXPECT_EQ(r.png.id, sha256_hex(r.png.bytes));
}

TEST(Render, OrientationGeometry) {
  Volume v = testsupport::make_volume({5, 4, 3});
  for (std::int64_t k = 0; k < 3; ++k)
    for (std::int64_t j = 0; j < 4; ++j)
      for (std::int64_t i = 0; i < 5; ++i) v.at({i, j, k}) = static_cast<std::int16_t>(100 * k + 10 * j + i);
  const Window w{127.5, 255};
  const GrayImage ax = render_slice(v, Orientation::Axial, 2, w);
  EXPECT_EQ(ax.width, 5);
  EXPECT_EQ(ax.height, 4);
  EXPECT_EQ(ax.at(3, 4), window_pixel(234, w));
  const GrayImage co = render_slice(v, Orientation::Coronal, 1, w);
  EXPECT_EQ(co.width, 5);
  EXPECT_EQ(co.height, 3);
  EXPECT_EQ(co.at(2, 3), window_pixel(213, w));
  const GrayImage sa = render_slice(v, Orientation::Sagittal, 4, w);
  EXPECT_EQ(sa.width, 4);
  EXPECT_EQ(sa.height, 3);
  EXPECT_EQ(sa.at(1, 2), window_pixel(124, w));
}

TEST(Render, FusionAlphaZeroIsIdentity) {
  ViewerSession s(chest64(), "s");
  s.set_slice(Orientation::Axial, 30);
  const RenderOutput plain = s.render();
  s.set_fusion("PET", 0.0);
  const RenderOutput fused = s.render();
  EXPECT_EQ(plain.png.bytes, fused.png.bytes);
  s.set_fusion("PET", 0.5);
  EXPECT_NE(s.render().png.bytes, plain.png.bytes);
}

TEST(Session, SelectSeries) {
  ViewerSession s(chest64(), "s");
  EXPECT_EQ(s.state().active_series, "CT");
  s.select_series("PET");
  EXPECT_EQ(s.state().active_series, "PET");
  EXPECT_ERRC(s.select_series("XX"), Errc::UnknownSeries);

  ViewerState before = s.state();
  s.select_series("PET");
  ViewerState after = s.state();
  EXPECT_EQ(after.step_counter, before.step_counter + 1);
  after.step_counter = before.step_counter;
  EXPECT_EQ(state_digest(after), state_digest(before));
}

TEST(Session, SetSliceClamps) {
  ViewerSession s(chest64(), "s");
  EXPECT_EQ(s.set_slice(Orientation::Axial, 70), 63);
  EXPECT_EQ(s.set_slice(Orientation::Axial, -5), 0);
  EXPECT_EQ(s.set_slice(Orientation::Axial, 32), 32);
  EXPECT_EQ(s.state().slice_index[0], 32);
}

TEST(Session, SetWindow) {
  ViewerSession s(chest64(), "s");
  s.set_window(40, 80);
  EXPECT_EQ(s.state().window, (Window{40, 80}));
  s.set_window(-600, 1500);
  EXPECT_EQ(s.state().window, (Window{-600, 1500}));
  const auto before = state_digest(s.state());
  EXPECT_ERRC(s.set_window(40, 0), Errc::BadArgs);
  EXPECT_EQ(state_digest(s.state()), before);
}

TEST(Session, SetFusion) {
  ViewerSession s(chest64(), "s");
  s.set_fusion("PET", 0.5);
  ASSERT_TRUE(s.state().fusion.has_value());
  EXPECT_EQ(s.state().fusion->overlay_series, "PET");
  EXPECT_ERRC(s.set_fusion("PET", 1.5), Errc::BadArgs);
  EXPECT_ERRC(s.set_fusion("CT", 0.5), Errc::BadArgs);
  EXPECT_ERRC(s.set_fusion("XX", 0.5), Errc::UnknownSeries);
}

TEST(Session, Bookmarks) {
  ViewerSession s(chest64(), "s");
  const BookmarkOutput a = s.bookmark_view("");
  const BookmarkOutput b = s.bookmark_view("again");
  EXPECT_EQ(a.bookmark_id, "bm-0001");
  EXPECT_EQ(b.bookmark_id, "bm-0002");
  EXPECT_EQ(s.state().bookmarks[0].label, "");
  EXPECT_EQ(s.state().bookmarks[0].state_digest, s.state().bookmarks[1].state_digest);
  EXPECT_EQ(a.render.id, b.render.id);
}

TEST(Session, MeasureDistance) {
  ViewerSession s(chest64(), "s");
  EXPECT_DOUBLE_EQ(s.measure_distance({0, 0, 0}, {3, 4, 0}), 5.0);
  EXPECT_DOUBLE_EQ(s.measure_distance({7, 7, 7}, {7, 7, 7}), 0.0);
  EXPECT_NEAR(s.measure_distance({1, 1, 1}, {2, 2, 2}), std::sqrt(3.0), 1e-12);
  EXPECT_EQ(s.state().measurements.size(), 3u);
  // points outside the volume are fine
  EXPECT_DOUBLE_EQ(s.measure_distance({-1e4, 0, 0}, {1e4, 0, 0}), 2e4);
}

TEST(Session, EvidenceBundle) {
  ViewerSession s(chest64(), "s");
  const auto empty = json::parse(s.export_evidence().bytes);
  EXPECT_TRUE(empty["items"].empty());
  s.bookmark_view("x");
  s.bookmark_view("y");
  s.measure_distance({0, 0, 0}, {1, 0, 0});
  const Artifact a = s.export_evidence();
  EXPECT_EQ(json::parse(a.bytes)["items"].size(), 3u);
  EXPECT_EQ(a.id, s.export_evidence().id);
}

TEST(Session, SameCallsSameDigests) {
  ViewerSession a(chest64(), "one");
  ViewerSession b(chest64(), "two");
  for (ViewerSession* s : {&a, &b}) {
    s->select_series("PET");
    s->set_window(1500, 3000);
    s->set_slice(Orientation::Coronal, 20);
    s->bookmark_view("k");
  }
  EXPECT_EQ(state_digest(a.state()), state_digest(b.state()));
  EXPECT_EQ(a.render().png.bytes, b.render().png.bytes);
}
