#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace fovea {

// All coordinate frames share one orientation convention:
// x forward, y left, z up. Pixels: u rightward, v downward.

struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct CameraPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

enum class Frame { world, pose, board, camera };

inline const char* frame_name(Frame f) {
  switch (f) {
    case Frame::world: return "world";
    case Frame::pose: return "pose";
    case Frame::board: return "board";
    case Frame::camera: return "camera";
  }
  return "?";
}

struct FrameMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BehindCameraError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;  // row-major

namespace detail {

inline Mat3 mat_mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}

inline Vec3 mat_vec(const Mat3& m, const Vec3& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
          m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

inline Mat3 transpose(const Mat3& m) {
  return {{{m[0][0], m[1][0], m[2][0]},
           {m[0][1], m[1][1], m[2][1]},
           {m[0][2], m[1][2], m[2][2]}}};
}

inline double det(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline Mat3 identity3() {
  return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
}

}  // namespace detail

/// Rotation from roll/pitch/yaw, applied yaw first in the composition
/// sense: R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 rotation_from_rpy(double roll, double pitch, double yaw) {
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const Mat3 rx{{{1, 0, 0}, {0, cr, -sr}, {0, sr, cr}}};
  const Mat3 ry{{{cp, 0, sp}, {0, 1, 0}, {-sp, 0, cp}}};
  const Mat3 rz{{{cy, -sy, 0}, {sy, cy, 0}, {0, 0, 1}}};
  return detail::mat_mul(rz, detail::mat_mul(ry, rx));
}

/// A rigid map between two named frames: p_to = R * p_from + t.
/// The rotation is checked for orthonormality and det +1 on construction.
class RigidTransform {
 public:
  RigidTransform(const Mat3& rotation, const Vec3& translation,
                 Frame from_frame, Frame to_frame)
      : rotation_(rotation),
        translation_(translation),
        from_(from_frame),
        to_(to_frame) {
    validate_rotation(rotation_);
  }

  static RigidTransform identity(Frame from_frame, Frame to_frame) {
    return {detail::identity3(), Vec3{0, 0, 0}, from_frame, to_frame};
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Frame from_frame() const { return from_; }
  Frame to_frame() const { return to_; }

  Vec3 apply(const Vec3& p) const {
    Vec3 r = detail::mat_vec(rotation_, p);
    return {r[0] + translation_[0], r[1] + translation_[1],
            r[2] + translation_[2]};
  }

 private:
  static void validate_rotation(const Mat3& r) {
    constexpr double tol = 1e-9;
    const Mat3 rtr = detail::mat_mul(detail::transpose(r), r);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double want = i == j ? 1.0 : 0.0;
        if (!(std::abs(rtr[i][j] - want) <= tol))
          throw std::invalid_argument("rotation is not orthonormal");
      }
    if (!(std::abs(detail::det(r) - 1.0) <= tol))
      throw std::invalid_argument("rotation determinant is not +1");
  }

  Mat3 rotation_;
  Vec3 translation_;
  Frame from_;
  Frame to_;
};

/// compose(a, b): first b, then a. Requires a.from == b.to.
inline RigidTransform compose(const RigidTransform& a,
                              const RigidTransform& b) {
  if (a.from_frame() != b.to_frame())
    throw FrameMismatchError(std::string("cannot compose ") +
                             frame_name(b.from_frame()) + "->" +
                             frame_name(b.to_frame()) + " with " +
                             frame_name(a.from_frame()) + "->" +
                             frame_name(a.to_frame()));
  const Mat3 r = detail::mat_mul(a.rotation(), b.rotation());
  const Vec3 at = a.translation();
  const Vec3 bt = detail::mat_vec(a.rotation(), b.translation());
  return {r,
          Vec3{bt[0] + at[0], bt[1] + at[1], bt[2] + at[2]},
          b.from_frame(), a.to_frame()};
}

inline RigidTransform invert(const RigidTransform& t) {
  const Mat3 rt = detail::transpose(t.rotation());
  const Vec3 nt = detail::mat_vec(rt, t.translation());
  return {rt, Vec3{-nt[0], -nt[1], -nt[2]}, t.to_frame(), t.from_frame()};
}

/// The world -> pose -> board -> camera extrinsic chain.
struct ExtrinsicChain {
  RigidTransform world_to_pose;
  RigidTransform pose_to_board;
  RigidTransform board_to_camera;

  ExtrinsicChain(RigidTransform w2p, RigidTransform p2b, RigidTransform b2c)
      : world_to_pose(std::move(w2p)),
        pose_to_board(std::move(p2b)),
        board_to_camera(std::move(b2c)) {
    check_link(world_to_pose, Frame::world, Frame::pose);
    check_link(pose_to_board, Frame::pose, Frame::board);
    check_link(board_to_camera, Frame::board, Frame::camera);
  }

 private:
  static void check_link(const RigidTransform& t, Frame from, Frame to) {
    if (t.from_frame() != from || t.to_frame() != to)
      throw FrameMismatchError(std::string("chain link must map ") +
                               frame_name(from) + "->" + frame_name(to) +
                               ", got " + frame_name(t.from_frame()) + "->" +
                               frame_name(t.to_frame()));
  }
};

inline CameraPoint world_to_camera(const ExtrinsicChain& chain,
                                   const WorldPoint& w) {
  Vec3 p{w.x, w.y, w.z};
  p = chain.world_to_pose.apply(p);
  p = chain.pose_to_board.apply(p);
  p = chain.board_to_camera.apply(p);
  return {p[0], p[1], p[2]};
}

/// Position of the camera origin expressed in world coordinates,
/// i.e. the inverse of the full chain applied to (0,0,0).
inline WorldPoint camera_origin_in_world(const ExtrinsicChain& chain) {
  const RigidTransform world_to_cam = compose(
      chain.board_to_camera, compose(chain.pose_to_board, chain.world_to_pose));
  const Vec3 o = invert(world_to_cam).apply(Vec3{0, 0, 0});
  return {o[0], o[1], o[2]};
}

/// Pinhole intrinsics plus image dimensions. Focal lengths and pixel
/// size are in meters; the principal point is in pixels. axis_sign_u/v
/// absorb the handedness of the calibration (+1 keeps y-left mapping
/// directly to u and -z to v).
struct CameraModel {
  double fx_m = 0.0;
  double fy_m = 0.0;
  double pixel_size_m = 0.0;
  double ku_px = 0.0;
  double kv_px = 0.0;
  int width_px = 0;
  int height_px = 0;
  int axis_sign_u = 1;
  int axis_sign_v = 1;

  double fx_px() const { return fx_m / pixel_size_m; }
  double fy_px() const { return fy_m / pixel_size_m; }

  void validate() const {
    if (!(fx_m > 0.0 && fy_m > 0.0 && pixel_size_m > 0.0))
      throw std::invalid_argument("focal lengths and pixel size must be > 0");
    if (!(width_px > 0 && height_px > 0))
      throw std::invalid_argument("image dimensions must be > 0");
    if (!(ku_px > 0.0 && ku_px < width_px && kv_px > 0.0 &&
          kv_px < height_px))
      throw std::invalid_argument("principal point must lie inside the image");
    if (std::abs(axis_sign_u) != 1 || std::abs(axis_sign_v) != 1)
      throw std::invalid_argument("axis signs must be +1 or -1");
  }
};

inline std::optional<PixelPoint> try_project_to_image(const CameraPoint& c,
                                                      const CameraModel& cam) {
  if (!(c.x > 0.0)) return std::nullopt;
  const double u = cam.axis_sign_u * cam.fx_px() * (c.y / c.x) + cam.ku_px;
  const double v = cam.axis_sign_v * cam.fy_px() * (-c.z / c.x) + cam.kv_px;
  return PixelPoint{u, v};
}

inline PixelPoint project_to_image(const CameraPoint& c,
                                   const CameraModel& cam) {
  auto p = try_project_to_image(c, cam);
  if (!p)
    throw BehindCameraError("point is behind the camera (x <= 0)");
  return *p;
}

/// Vehicle pose in the world: position plus roll/pitch/yaw.
struct VehiclePose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// pose -> world map of a vehicle pose (pose axes expressed in world).
inline RigidTransform pose_to_world(const VehiclePose& p) {
  return {rotation_from_rpy(p.roll, p.pitch, p.yaw), Vec3{p.x, p.y, p.z},
          Frame::pose, Frame::world};
}

inline RigidTransform world_to_pose(const VehiclePose& p) {
  return invert(pose_to_world(p));
}

}  // namespace fovea
