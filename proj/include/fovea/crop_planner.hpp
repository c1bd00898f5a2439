#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fovea/frame.hpp"
#include "fovea/geometry.hpp"

namespace fovea {

/// Planned path: ordered waypoints with a nominal spacing.
struct Path {
  std::vector<WorldPoint> waypoints;
  double nominal_spacing_m = 0.5;

  void validate() const {
    if (waypoints.size() < 2)
      throw std::invalid_argument("path needs at least 2 waypoints");
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      const double d = distance(waypoints[i - 1], waypoints[i]);
      if (d < 0.8 * nominal_spacing_m || d > 1.2 * nominal_spacing_m)
        throw std::invalid_argument(
            "waypoint spacing out of tolerance at index " + std::to_string(i));
    }
  }

  static double distance(const WorldPoint& a, const WorldPoint& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
  }
};

struct CropPlanConfig {
  int count = 5;                     // number of crops
  double spacing_m = 25.0;           // distance between reference waypoints
  double first_crop_fraction = 0.6;  // first crop size as fraction of image
  double vertical_lift = 1.5;        // upward shift of the crop center
  int min_crop_px = 16;              // reject crops smaller than this

  void validate() const {
    if (count < 0) throw std::invalid_argument("crop count must be >= 0");
    if (!(spacing_m > 0.0))
      throw std::invalid_argument("crop spacing must be > 0");
    if (!(first_crop_fraction > 0.0 && first_crop_fraction <= 1.0))
      throw std::invalid_argument("first crop fraction must be in (0, 1]");
    if (!(vertical_lift >= 1.0))
      throw std::invalid_argument("vertical lift must be >= 1");
    if (min_crop_px < 1)
      throw std::invalid_argument("min crop side must be >= 1");
  }
};

struct CropSize {
  int w = 0;
  int h = 0;
};

/// One crop rectangle, integer coordinates, fully inside the image.
/// j = 0 denotes the whole-image pseudo crop.
struct CropSpec {
  int j = 0;
  int u = 0;
  int v = 0;
  int w = 0;
  int h = 0;
  PixelPoint anchor;

  Box2D rect() const {
    return {static_cast<double>(u), static_cast<double>(v),
            static_cast<double>(w), static_cast<double>(h)};
  }

  static CropSpec whole_image(const CameraModel& cam) {
    return {0, 0, 0, cam.width_px, cam.height_px,
            PixelPoint{cam.width_px / 2.0, cam.height_px / 2.0}};
  }
};

/// Crop placement before rounding and border handling.
struct PlacedCrop {
  double u = 0.0;
  double v = 0.0;
  int w = 0;
  int h = 0;
};

/// Reference waypoints at cumulative arc length j * spacing (j = 1..count)
/// ahead of the path point nearest to the camera origin. Returns fewer
/// than count when the path runs out.
inline std::vector<WorldPoint> select_reference_waypoints(
    const Path& path, const CropPlanConfig& cfg, const WorldPoint& cam_origin) {
  const auto& wps = path.waypoints;
  if (wps.empty()) throw std::invalid_argument("path is empty");

  std::size_t nearest = 0;
  double best = Path::distance(wps[0], cam_origin);
  for (std::size_t i = 1; i < wps.size(); ++i) {
    const double d = Path::distance(wps[i], cam_origin);
    if (d < best) {
      best = d;
      nearest = i;
    }
  }

  std::vector<WorldPoint> refs;
  double cum = 0.0;
  std::size_t i = nearest;
  for (int j = 1; j <= cfg.count; ++j) {
    const double target = j * cfg.spacing_m;
    while (cum < target && i + 1 < wps.size()) {
      cum += Path::distance(wps[i], wps[i + 1]);
      ++i;
    }
    if (cum < target) break;  // path shorter than j * spacing
    refs.push_back(wps[i]);
  }
  return refs;
}

/// Crop size for index j: floor(fraction * image_dim / j).
inline CropSize crop_size(int j, const CameraModel& cam,
                          const CropPlanConfig& cfg) {
  if (j < 1) throw std::invalid_argument("crop index must be >= 1");
  const double f = cfg.first_crop_fraction;
  return {static_cast<int>(std::floor(f * cam.width_px / j)),
          static_cast<int>(std::floor(f * cam.height_px / j))};
}

/// Top-left placement: horizontally centered on the anchor, lifted
/// upward by vertical_lift half-heights.
inline PlacedCrop place_crop(const PixelPoint& anchor, CropSize size,
                             const CropPlanConfig& cfg) {
  return {anchor.u - size.w / 2.0,
          anchor.v - (size.h / 2.0) * cfg.vertical_lift, size.w, size.h};
}

/// Rounds the placement to integers and translates the rectangle (without
/// resizing it) so it lies fully inside the image. A crop wider or taller
/// than the image is clipped to the image; a crop with a side below
/// min_crop_px is rejected.
inline std::optional<CropSpec> clamp_crop(const PlacedCrop& placed, int j,
                                          const PixelPoint& anchor,
                                          const CameraModel& cam,
                                          const CropPlanConfig& cfg) {
  const int w = std::min(placed.w, cam.width_px);
  const int h = std::min(placed.h, cam.height_px);
  if (w < cfg.min_crop_px || h < cfg.min_crop_px) return std::nullopt;
  int u = static_cast<int>(std::floor(placed.u + 0.5));
  int v = static_cast<int>(std::floor(placed.v + 0.5));
  u = std::clamp(u, 0, cam.width_px - w);
  v = std::clamp(v, 0, cam.height_px - h);
  return CropSpec{j, u, v, w, h, anchor};
}

/// Full per-frame plan: select reference waypoints, project them, size
/// and place one crop per waypoint. Waypoints behind the camera or
/// projecting outside the image are skipped; the surviving crops keep
/// their original index j for sizing.
inline std::vector<CropSpec> plan_crops(const FrameRecord& frame,
                                        const CameraModel& cam,
                                        const ExtrinsicChain& chain,
                                        const CropPlanConfig& cfg) {
  const Path path{frame.waypoints};
  path.validate();
  const WorldPoint origin = camera_origin_in_world(chain);
  const auto refs = select_reference_waypoints(path, cfg, origin);

  std::vector<CropSpec> plan;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const int j = static_cast<int>(k) + 1;
    const auto pixel = try_project_to_image(world_to_camera(chain, refs[k]), cam);
    if (!pixel) continue;
    if (pixel->u < 0.0 || pixel->u >= cam.width_px || pixel->v < 0.0 ||
        pixel->v >= cam.height_px)
      continue;
    const CropSize size = crop_size(j, cam, cfg);
    const PlacedCrop placed = place_crop(*pixel, size, cfg);
    if (auto crop = clamp_crop(placed, j, *pixel, cam, cfg))
      plan.push_back(*crop);
  }
  return plan;
}

}  // namespace fovea
