#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fovea/box.hpp"
#include "fovea/detector.hpp"
#include "fovea/frame.hpp"
#include "fovea/geometry.hpp"

namespace fovea {

/// Camera defaults used by the simulator: 1280x768 image, centered
/// principal point, focal length of 1000 pixel widths.
inline CameraModel default_camera() {
  CameraModel cam;
  cam.fx_m = 3.75e-3;
  cam.fy_m = 3.75e-3;
  cam.pixel_size_m = 3.75e-6;
  cam.ku_px = 640.0;
  cam.kv_px = 384.0;
  cam.width_px = 1280;
  cam.height_px = 768;
  return cam;
}

/// Camera mounted 2 m above the vehicle origin, level, looking forward.
inline RigidTransform default_pose_to_board() {
  return {detail::identity3(), Vec3{0.0, 0.0, -2.0}, Frame::pose,
          Frame::board};
}

inline RigidTransform default_board_to_camera() {
  return RigidTransform::identity(Frame::board, Frame::camera);
}

/// A parked car: ground-contact center, heading, and body dimensions.
struct SceneCar {
  WorldPoint center;
  double yaw = 0.0;
  double length = 4.5;
  double width = 1.8;
  double height = 1.5;

  void validate() const {
    if (!(length > 0.0 && width > 0.0 && height > 0.0))
      throw std::invalid_argument("car dimensions must be positive");
  }
};

struct SceneConfig {
  enum class PathShape { straight, arc };

  PathShape path_shape = PathShape::straight;
  double arc_radius_m = 200.0;  // used when path_shape == arc
  double path_length_m = 150.0;
  std::vector<double> car_ranges_m = {20.0, 32.0,  45.0,  60.0,  76.0,
                                      92.0, 108.0, 122.0, 134.0, 145.0};
  std::vector<double> lateral_offsets_m = {3.0, -3.0, 3.0, -3.0, 3.0,
                                           -3.0, 3.0, -3.0, 3.0, -3.0};
  int frames = 200;
  double frame_advance_m = 0.5;  // vehicle travel between frames
  double placement_jitter_m = 0.0;
  std::uint64_t seed = 0;

  static constexpr double waypoint_spacing_m = 0.5;

  void validate() const {
    if (!(path_length_m > 0.0))
      throw std::invalid_argument("path length must be > 0");
    if (path_shape == PathShape::arc && !(arc_radius_m > 0.0))
      throw std::invalid_argument("arc radius must be > 0");
    for (double r : car_ranges_m)
      if (!(r > 0.0 && r <= path_length_m))
        throw std::invalid_argument(
            "car ranges must lie in (0, path_length]");
    if (lateral_offsets_m.size() != car_ranges_m.size())
      throw std::invalid_argument(
          "one lateral offset required per car range");
    if (frames < 1) throw std::invalid_argument("frames must be >= 1");
    if (!(frame_advance_m >= 0.0))
      throw std::invalid_argument("frame advance must be >= 0");
    if (placement_jitter_m < 0.0)
      throw std::invalid_argument("placement jitter must be >= 0");
  }
};

namespace detail {

/// Point and heading at arc length s along the configured path.
struct PathSample {
  WorldPoint point;
  double heading = 0.0;
};

inline PathSample sample_path(const SceneConfig& cfg, double s) {
  if (cfg.path_shape == SceneConfig::PathShape::straight)
    return {{s, 0.0, 0.0}, 0.0};
  const double theta = s / cfg.arc_radius_m;
  return {{cfg.arc_radius_m * std::sin(theta),
           cfg.arc_radius_m * (1.0 - std::cos(theta)), 0.0},
          theta};
}

}  // namespace detail

/// A generated world: the drive path and the parked cars.
struct Scene {
  SceneConfig config;
  std::vector<WorldPoint> waypoints;  // waypoint_spacing_m apart
  std::vector<SceneCar> cars;
};

/// Builds a deterministic scene: waypoints every 0.5 m along the path and
/// one car per configured range, offset laterally (positive = left of the
/// travel direction). placement_jitter_m > 0 adds seeded Gaussian jitter
/// to each car's position.
inline Scene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  Scene scene;
  scene.config = cfg;

  const int n_wp =
      static_cast<int>(std::floor(cfg.path_length_m /
                                  SceneConfig::waypoint_spacing_m)) +
      1;
  scene.waypoints.reserve(n_wp);
  for (int i = 0; i < n_wp; ++i)
    scene.waypoints.push_back(
        detail::sample_path(cfg, i * SceneConfig::waypoint_spacing_m).point);

  std::mt19937_64 rng(detail::mix_seed(cfg.seed, 0x5ce9ecull, 0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < cfg.car_ranges_m.size(); ++i) {
    const detail::PathSample at = detail::sample_path(cfg, cfg.car_ranges_m[i]);
    const double d = cfg.lateral_offsets_m[i];
    SceneCar car;
    car.center = {at.point.x - d * std::sin(at.heading),
                  at.point.y + d * std::cos(at.heading), 0.0};
    car.yaw = at.heading;
    if (cfg.placement_jitter_m > 0.0) {
      car.center.x += gauss(rng) * cfg.placement_jitter_m;
      car.center.y += gauss(rng) * cfg.placement_jitter_m;
    }
    car.validate();
    scene.cars.push_back(car);
  }
  return scene;
}

/// Projects the car's eight corners and returns the axis-aligned hull
/// clipped to the image, or nothing when the car is behind the camera,
/// entirely off-image, or reduced to under 4 square pixels.
inline std::optional<Box2D> gt_bbox(const SceneCar& car,
                                    const ExtrinsicChain& chain,
                                    const CameraModel& cam) {
  cam.validate();
  const double cy = std::cos(car.yaw);
  const double sy = std::sin(car.yaw);
  double min_u = 0.0, min_v = 0.0, max_u = 0.0, max_v = 0.0;
  bool any = false;
  for (int sx = -1; sx <= 1; sx += 2)
    for (int sw = -1; sw <= 1; sw += 2)
      for (int sz = 0; sz <= 1; ++sz) {
        const double lx = sx * car.length / 2.0;
        const double ly = sw * car.width / 2.0;
        const WorldPoint corner{car.center.x + cy * lx - sy * ly,
                                car.center.y + sy * lx + cy * ly,
                                car.center.z + sz * car.height};
        const auto px =
            try_project_to_image(world_to_camera(chain, corner), cam);
        if (!px) continue;
        if (!any) {
          min_u = max_u = px->u;
          min_v = max_v = px->v;
          any = true;
        } else {
          min_u = std::min(min_u, px->u);
          max_u = std::max(max_u, px->u);
          min_v = std::min(min_v, px->v);
          max_v = std::max(max_v, px->v);
        }
      }
  if (!any) return std::nullopt;
  const double x0 = std::max(min_u, 0.0);
  const double y0 = std::max(min_v, 0.0);
  const double x1 = std::min(max_u, static_cast<double>(cam.width_px));
  const double y1 = std::min(max_v, static_cast<double>(cam.height_px));
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  const Box2D clipped{x0, y0, x1 - x0, y1 - y0};
  if (clipped.area() < 4.0) return std::nullopt;
  return clipped;
}

/// Vehicle pose after frame_index * frame_advance_m of travel, capped at
/// the end of the path.
inline VehiclePose pose_at_frame(const Scene& scene, int frame_index) {
  const double s = std::min(frame_index * scene.config.frame_advance_m,
                            scene.config.path_length_m);
  const detail::PathSample at = detail::sample_path(scene.config, s);
  return {at.point.x, at.point.y, at.point.z, 0.0, 0.0, at.heading};
}

/// Produces the frame log entry for one simulation step: the advanced
/// pose, the forward remainder of the path, and ground-truth boxes for
/// every car still visible from the default camera mount.
inline FrameRecord render_frame(
    const Scene& scene, int frame_index,
    const CameraModel& cam = default_camera(),
    const RigidTransform& pose_to_board = default_pose_to_board(),
    const RigidTransform& board_to_camera = default_board_to_camera()) {
  if (frame_index < 0 || frame_index >= scene.config.frames)
    throw std::out_of_range("frame index outside configured frame count");

  FrameRecord frame;
  frame.frame_id = frame_index;
  frame.pose = pose_at_frame(scene, frame_index);

  const double s = std::min(frame_index * scene.config.frame_advance_m,
                            scene.config.path_length_m);
  const std::size_t first = std::min(
      static_cast<std::size_t>(
          std::floor(s / SceneConfig::waypoint_spacing_m)),
      scene.waypoints.size() - 1);
  frame.waypoints.assign(scene.waypoints.begin() + first,
                         scene.waypoints.end());

  const ExtrinsicChain chain{world_to_pose(frame.pose), pose_to_board,
                             board_to_camera};
  for (const SceneCar& car : scene.cars) {
    if (const auto box = gt_bbox(car, chain, cam))
      frame.gt.push_back({"car", *box});
  }
  return frame;
}

}  // namespace fovea
