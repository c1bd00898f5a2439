#pragma once

#include <algorithm>
#include <optional>

namespace fovea {

/// Axis-aligned box, top-left origin, continuous pixel coordinates.
struct Box2D {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }
};

inline std::optional<Box2D> intersect(const Box2D& a, const Box2D& b) {
  const double x0 = std::max(a.x, b.x);
  const double y0 = std::max(a.y, b.y);
  const double x1 = std::min(a.right(), b.right());
  const double y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return Box2D{x0, y0, x1 - x0, y1 - y0};
}

/// Intersection over union; 0 for disjoint boxes.
inline double iou(const Box2D& a, const Box2D& b) {
  const auto inter = intersect(a, b);
  if (!inter) return 0.0;
  const double i = inter->area();
  return i / (a.area() + b.area() - i);
}

}  // namespace fovea
