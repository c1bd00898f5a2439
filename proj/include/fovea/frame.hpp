#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fovea/box.hpp"
#include "fovea/geometry.hpp"

namespace fovea {

/// A ground-truth annotation within one frame.
struct LabeledBox {
  std::string class_label;
  Box2D box;
};

/// One timestep of a frame log: vehicle pose, the remaining planned
/// path, ground-truth boxes, and an optional image reference.
struct FrameRecord {
  std::int64_t frame_id = 0;
  VehiclePose pose;
  std::vector<WorldPoint> waypoints;
  std::vector<LabeledBox> gt;
  std::string image;  // path, may be empty
};

}  // namespace fovea
