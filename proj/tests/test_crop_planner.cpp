#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fovea/crop_planner.hpp"
#include "fovea/frame.hpp"
#include "fovea/geometry.hpp"
#include "oracles.hpp"

using namespace fovea;

namespace {

CameraModel test_camera() {
  CameraModel cam;
  cam.fx_m = 3.75e-3;
  cam.fy_m = 3.75e-3;
  cam.pixel_size_m = 3.75e-6;  // 1000 px focal length
  cam.ku_px = 640.0;
  cam.kv_px = 384.0;
  cam.width_px = 1280;
  cam.height_px = 768;
  return cam;
}

std::vector<WorldPoint> straight_path(double length_m, double spacing = 0.5) {
  std::vector<WorldPoint> wps;
  const int n = static_cast<int>(std::floor(length_m / spacing)) + 1;
  for (int i = 0; i < n; ++i) wps.push_back({i * spacing, 0.0, 0.0});
  return wps;
}

// Camera two meters above the vehicle origin, looking forward.
ExtrinsicChain camera_chain(const VehiclePose& pose) {
  return {world_to_pose(pose),
          RigidTransform{detail::identity3(), {0, 0, -2.0}, Frame::pose,
                         Frame::board},
          RigidTransform::identity(Frame::board, Frame::camera)};
}

}  // namespace

TEST_CASE("path validation enforces waypoint count and spacing") {
  Path p{straight_path(150.0)};
  CHECK_NOTHROW(p.validate());

  Path single{{{0, 0, 0}}};
  CHECK_THROWS_AS(single.validate(), std::invalid_argument);

  Path uneven{{{0, 0, 0}, {0.7, 0, 0}, {1.4, 0, 0}}};  // 0.7 > 0.5 * 1.2
  CHECK_THROWS_AS(uneven.validate(), std::invalid_argument);

  Path close_enough{{{0, 0, 0}, {0.55, 0, 0}, {1.1, 0, 0}}};  // within 20%
  CHECK_NOTHROW(close_enough.validate());
}

TEST_CASE("reference waypoints fall at multiples of the spacing") {
  const Path path{straight_path(150.0)};
  CropPlanConfig cfg;  // d = 25, n = 5
  const auto refs =
      select_reference_waypoints(path, cfg, WorldPoint{0, 0, 2.0});
  REQUIRE(refs.size() == 5);
  for (int j = 1; j <= 5; ++j) {
    // index j*50 on a 0.5 m grid = j*25 meters ahead
    CHECK(refs[j - 1].x == j * 25.0);
    CHECK(refs[j - 1].y == 0.0);
  }
}

TEST_CASE("zero crops requested yields no reference waypoints") {
  const Path path{straight_path(150.0)};
  CropPlanConfig cfg;
  cfg.count = 0;
  CHECK(select_reference_waypoints(path, cfg, WorldPoint{0, 0, 0}).empty());
}

TEST_CASE("short path truncates the reference list") {
  const Path path{straight_path(60.0)};
  CropPlanConfig cfg;  // d = 25, n = 5 but only 60 m of path
  const auto refs =
      select_reference_waypoints(path, cfg, WorldPoint{0, 0, 0});
  REQUIRE(refs.size() == 2);
  CHECK(refs[0].x == 25.0);
  CHECK(refs[1].x == 50.0);
}

TEST_CASE("reference selection starts at the waypoint nearest the camera") {
  const Path path{straight_path(150.0)};
  CropPlanConfig cfg;
  // Camera abreast of the 10 m waypoint: references shift accordingly.
  const auto refs =
      select_reference_waypoints(path, cfg, WorldPoint{10.0, 1.0, 2.0});
  REQUIRE(refs.size() == 5);
  CHECK(refs[0].x == 35.0);
  CHECK(refs[4].x == 135.0);
}

TEST_CASE("empty path is an error") {
  CropPlanConfig cfg;
  CHECK_THROWS_AS(
      select_reference_waypoints(Path{}, cfg, WorldPoint{0, 0, 0}),
      std::invalid_argument);
}

TEST_CASE("crop sizes reproduce the published values") {
  const CameraModel cam = test_camera();
  CropPlanConfig cfg;  // alpha = 0.6

  const CropSize s1 = crop_size(1, cam, cfg);
  CHECK(s1.w == 768);
  CHECK(s1.h == 460);

  const CropSize s4 = crop_size(4, cam, cfg);
  CHECK(s4.w == 192);
  CHECK(s4.h == 115);

  const CropSize s5 = crop_size(5, cam, cfg);
  CHECK(s5.w == 153);
  CHECK(s5.h == 92);
}

TEST_CASE("crop sizes strictly decrease with the crop index") {
  const CameraModel cam = test_camera();
  CropPlanConfig cfg;
  CropSize prev = crop_size(1, cam, cfg);
  for (int j = 2; j <= 12; ++j) {
    const CropSize cur = crop_size(j, cam, cfg);
    CHECK(cur.w < prev.w);
    CHECK(cur.h < prev.h);
    prev = cur;
  }
}

TEST_CASE("crop aspect ratio tracks the image aspect ratio") {
  const CameraModel cam = test_camera();
  CropPlanConfig cfg;
  const double image_aspect =
      static_cast<double>(cam.width_px) / cam.height_px;
  for (int j = 1; j <= 8; ++j) {
    const CropSize s = crop_size(j, cam, cfg);
    // floor() perturbs each side by less than one pixel
    const double lo = (0.6 * cam.width_px / j - 1.0) / (0.6 * cam.height_px / j);
    const double hi = (0.6 * cam.width_px / j) / (0.6 * cam.height_px / j - 1.0);
    const double aspect = static_cast<double>(s.w) / s.h;
    CHECK(aspect >= lo);
    CHECK(aspect <= hi);
    CHECK_THAT(aspect, Catch::Matchers::WithinAbs(image_aspect, 0.02));
  }
}

TEST_CASE("crop placement matches the hand-computed examples") {
  CropPlanConfig cfg;  // v_lift = 1.5

  const PlacedCrop a = place_crop({640.0, 400.0}, {768, 460}, cfg);
  CHECK(a.u == 256.0);
  CHECK(a.v == 55.0);

  // lift factor 1 centers the crop on the anchor
  cfg.vertical_lift = 1.0;
  const PlacedCrop b = place_crop({640.0, 384.0}, {200, 100}, cfg);
  CHECK(b.u == 540.0);
  CHECK(b.v == 334.0);

  cfg.vertical_lift = 1.5;
  const PlacedCrop c = place_crop({100.0, 50.0}, {192, 115}, cfg);
  CHECK(c.u == 4.0);
  CHECK_THAT(c.v, Catch::Matchers::WithinAbs(-36.25, 1e-12));
}

TEST_CASE("clamping translates crops into the image without resizing") {
  const CameraModel cam = test_camera();
  CropPlanConfig cfg;
  const PixelPoint anchor{0, 0};

  // in-bounds crop: unchanged
  const auto keep = clamp_crop({100.0, 50.0, 300, 200}, 2, anchor, cam, cfg);
  REQUIRE(keep.has_value());
  CHECK(keep->u == 100);
  CHECK(keep->v == 50);
  CHECK(keep->w == 300);
  CHECK(keep->h == 200);

  // negative left edge: slides right, keeps its size
  const auto left = clamp_crop({-10.0, 20.0, 100, 100}, 3, anchor, cam, cfg);
  REQUIRE(left.has_value());
  CHECK(left->u == 0);
  CHECK(left->w == 100);

  // sticking out on the right: slides so u + w == image width
  const auto right =
      clamp_crop({1250.0, 0.0, 100, 100}, 3, anchor, cam, cfg);
  REQUIRE(right.has_value());
  CHECK(right->u == 1180);
  CHECK(right->w == 100);

  // taller than the image: height clipped to the image
  const auto tall = clamp_crop({0.0, -50.0, 500, 900}, 1, anchor, cam, cfg);
  REQUIRE(tall.has_value());
  CHECK(tall->v == 0);
  CHECK(tall->h == 768);

  // below the minimum side: rejected
  CHECK(!clamp_crop({10.0, 10.0, 10, 40}, 6, anchor, cam, cfg).has_value());
  CHECK(!clamp_crop({10.0, 10.0, 40, 15}, 6, anchor, cam, cfg).has_value());
}

TEST_CASE("clamping rounds coordinates half-up") {
  const CameraModel cam = test_camera();
  CropPlanConfig cfg;
  const PixelPoint anchor{0, 0};
  const auto a = clamp_crop({10.5, 10.4, 100, 100}, 1, anchor, cam, cfg);
  REQUIRE(a.has_value());
  CHECK(a->u == 11);
  CHECK(a->v == 10);
  const auto b = clamp_crop({-0.5, 767.5, 100, 100}, 1, anchor, cam, cfg);
  REQUIRE(b.has_value());
  CHECK(b->u == 0);    // rounds to 0, already inside
  CHECK(b->v == 668);  // rounds to 768, then slides to 768 - 100
}

TEST_CASE("straight path ahead yields horizontally centered crops") {
  const CameraModel cam = test_camera();
  CropPlanConfig cfg;
  FrameRecord frame;
  frame.frame_id = 0;
  frame.waypoints = straight_path(150.0);
  frame.pose = {0, 0, 0, 0, 0, 0};
  const ExtrinsicChain chain = camera_chain(frame.pose);

  const auto plan = plan_crops(frame, cam, chain, cfg);
  REQUIRE(plan.size() == 5);
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const CropSpec& c = plan[k];
    CHECK(c.j == static_cast<int>(k) + 1);
    const CropSize expect = crop_size(c.j, cam, cfg);
    CHECK(c.w == expect.w);
    CHECK(c.h == expect.h);
    // anchors on the optical-axis plane: crops centered at ku
    CHECK_THAT(c.u + c.w / 2.0, Catch::Matchers::WithinAbs(640.0, 0.5));
    CHECK_THAT(c.anchor.u, Catch::Matchers::WithinAbs(640.0, 1e-9));
    // fully inside the image with compliant sides
    CHECK(c.u >= 0);
    CHECK(c.v >= 0);
    CHECK(c.u + c.w <= cam.width_px);
    CHECK(c.v + c.h <= cam.height_px);
    CHECK(c.w >= cfg.min_crop_px);
    CHECK(c.h >= cfg.min_crop_px);
  }

  // anchor heights: v = kv + f * cam_height / distance
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const double d = 25.0 * (k + 1);
    CHECK_THAT(plan[k].anchor.v,
               Catch::Matchers::WithinAbs(384.0 + 1000.0 * 2.0 / d, 1e-9));
  }
}

TEST_CASE("zero-crop config plans nothing") {
  const CameraModel cam = test_camera();
  CropPlanConfig cfg;
  cfg.count = 0;
  FrameRecord frame;
  frame.waypoints = straight_path(150.0);
  const ExtrinsicChain chain = camera_chain(frame.pose);
  CHECK(plan_crops(frame, cam, chain, cfg).empty());
}

TEST_CASE("waypoints leaving the field of view drop their crops") {
  const CameraModel cam = test_camera();
  CropPlanConfig cfg;
  // Straight for 55 m, then a hard left turn: the 100 m and 125 m
  // references project outside the image (|y/x| > 0.64) and are skipped.
  std::vector<WorldPoint> wps;
  for (int i = 0; i <= 110; ++i) wps.push_back({i * 0.5, 0.0, 0.0});
  for (int i = 1; i <= 190; ++i) wps.push_back({55.0, i * 0.5, 0.0});

  FrameRecord frame;
  frame.waypoints = wps;
  const ExtrinsicChain chain = camera_chain(frame.pose);
  const auto plan = plan_crops(frame, cam, chain, cfg);
  REQUIRE(plan.size() == 3);
  CHECK(plan[0].j == 1);
  CHECK(plan[1].j == 2);
  CHECK(plan[2].j == 3);
  // the surviving crops keep their original sizes
  CHECK(plan[2].w == crop_size(3, cam, cfg).w);
}

TEST_CASE("waypoints behind the camera drop their crops") {
  const CameraModel cam = test_camera();
  CropPlanConfig cfg;
  FrameRecord frame;
  frame.waypoints = straight_path(150.0);
  // vehicle at 130 m along the path: only one 25 m reference fits ahead
  frame.pose = {130.0, 0, 0, 0, 0, 0};
  const ExtrinsicChain chain = camera_chain(frame.pose);
  const auto plan = plan_crops(frame, cam, chain, cfg);
  // references at 155/180/... m do not exist; path ends at 150 m
  REQUIRE(plan.size() == 0);

  frame.pose = {100.0, 0, 0, 0, 0, 0};
  const auto plan2 = plan_crops(frame, cam, camera_chain(frame.pose), cfg);
  REQUIRE(plan2.size() == 2);  // 125 m and 150 m references
  CHECK(plan2[0].j == 1);
  CHECK(plan2[1].j == 2);

  // facing away from the path: every reference is behind the camera
  frame.pose = {0.0, 0, 0, 0, 0, 3.14159265358979323846};
  CHECK(plan_crops(frame, cam, camera_chain(frame.pose), cfg).empty());
}

TEST_CASE("tiny images reject sub-minimum crops") {
  CameraModel cam;
  cam.fx_m = 3.0e-5;
  cam.fy_m = 3.0e-5;
  cam.pixel_size_m = 1e-6;  // 30 px focal length
  cam.ku_px = 32.0;
  cam.kv_px = 24.0;
  cam.width_px = 64;
  cam.height_px = 48;

  CropPlanConfig cfg;
  FrameRecord frame;
  frame.waypoints = straight_path(150.0);
  const ExtrinsicChain chain = camera_chain(frame.pose);
  const auto plan = plan_crops(frame, cam, chain, cfg);
  // j=1 gives 38x28 (kept); j>=2 gives 19x14 and smaller (rejected: h < 16)
  REQUIRE(plan.size() == 1);
  CHECK(plan[0].j == 1);
  CHECK(plan[0].w == 38);
  CHECK(plan[0].h == 28);
}

TEST_CASE("planning is deterministic") {
  const CameraModel cam = test_camera();
  CropPlanConfig cfg;
  FrameRecord frame;
  frame.waypoints = straight_path(150.0);
  const ExtrinsicChain chain = camera_chain(frame.pose);
  const auto a = plan_crops(frame, cam, chain, cfg);
  const auto b = plan_crops(frame, cam, chain, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].j == b[i].j);
    CHECK(a[i].u == b[i].u);
    CHECK(a[i].v == b[i].v);
    CHECK(a[i].w == b[i].w);
    CHECK(a[i].h == b[i].h);
  }
}

TEST_CASE("whole-image pseudo-crop covers the image") {
  const CameraModel cam = test_camera();
  const CropSpec whole = CropSpec::whole_image(cam);
  CHECK(whole.j == 0);
  CHECK(whole.u == 0);
  CHECK(whole.v == 0);
  CHECK(whole.w == 1280);
  CHECK(whole.h == 768);
}

TEST_CASE("config validation") {
  CropPlanConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.count = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.spacing_m = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.first_crop_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.vertical_lift = 0.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
