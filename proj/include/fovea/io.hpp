#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fovea/crop_planner.hpp"
#include "fovea/detector.hpp"
#include "fovea/frame.hpp"
#include "fovea/geometry.hpp"
#include "fovea/metrics.hpp"
#include "fovea/sim.hpp"

namespace fovea {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

using json = nlohmann::json;

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw FormatError(std::string(what) + " is not finite");
}

inline double get_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw FormatError(std::string("missing or non-numeric field: ") + key);
  return j.at(key).get<double>();
}

inline std::int64_t get_integer(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer())
    throw FormatError(std::string("missing or non-integer field: ") + key);
  return j.at(key).get<std::int64_t>();
}

inline std::string get_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw FormatError(std::string("missing or non-string field: ") + key);
  return j.at(key).get<std::string>();
}

inline const json& get_array(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw FormatError(std::string("missing or non-array field: ") + key);
  return j.at(key);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path);
  out << text;
  if (!out) throw FormatError("write failed: " + path);
}

inline json parse(const std::string& text, const std::string& origin) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw FormatError("invalid JSON in " + origin);
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Calibration file
// ---------------------------------------------------------------------------

/// A rigid transform stored as roll/pitch/yaw plus translation, the form
/// calibration files use.
struct TransformSpec {
  std::array<double, 3> rotation_rpy_rad{0.0, 0.0, 0.0};
  std::array<double, 3> translation_m{0.0, 0.0, 0.0};

  RigidTransform to_transform(Frame from, Frame to) const {
    return {rotation_from_rpy(rotation_rpy_rad[0], rotation_rpy_rad[1],
                              rotation_rpy_rad[2]),
            Vec3{translation_m[0], translation_m[1], translation_m[2]}, from,
            to};
  }
};

struct Calibration {
  CameraModel camera = default_camera();
  TransformSpec pose_to_board{{0.0, 0.0, 0.0}, {0.0, 0.0, -2.0}};
  TransformSpec board_to_camera{};

  RigidTransform pose_to_board_transform() const {
    return pose_to_board.to_transform(Frame::pose, Frame::board);
  }
  RigidTransform board_to_camera_transform() const {
    return board_to_camera.to_transform(Frame::board, Frame::camera);
  }
};

namespace detail {

inline json transform_spec_to_json(const TransformSpec& t) {
  return {{"rotation_rpy_rad", t.rotation_rpy_rad},
          {"translation_m", t.translation_m}};
}

inline TransformSpec transform_spec_from_json(const json& j) {
  const json& r = get_array(j, "rotation_rpy_rad");
  const json& t = get_array(j, "translation_m");
  if (r.size() != 3 || t.size() != 3)
    throw FormatError("transform arrays must have 3 elements");
  TransformSpec spec;
  for (int i = 0; i < 3; ++i) {
    spec.rotation_rpy_rad[i] = r.at(i).get<double>();
    spec.translation_m[i] = t.at(i).get<double>();
  }
  return spec;
}

}  // namespace detail

inline std::string calibration_to_json_text(const Calibration& c) {
  detail::json j;
  j["intrinsics"] = {{"fx_m", c.camera.fx_m},
                     {"fy_m", c.camera.fy_m},
                     {"pixel_size_m", c.camera.pixel_size_m},
                     {"ku_px", c.camera.ku_px},
                     {"kv_px", c.camera.kv_px},
                     {"width_px", c.camera.width_px},
                     {"height_px", c.camera.height_px},
                     {"axis_sign_u", c.camera.axis_sign_u},
                     {"axis_sign_v", c.camera.axis_sign_v}};
  j["extrinsics"] = {
      {"board_to_camera", detail::transform_spec_to_json(c.board_to_camera)},
      {"pose_to_board", detail::transform_spec_to_json(c.pose_to_board)}};
  return j.dump(2) + "\n";
}

inline Calibration calibration_from_json_text(const std::string& text) {
  const detail::json j = detail::parse(text, "calibration");
  if (!j.contains("intrinsics") || !j.contains("extrinsics"))
    throw FormatError("calibration needs intrinsics and extrinsics");
  const detail::json& in = j.at("intrinsics");
  Calibration c;
  c.camera.fx_m = detail::get_number(in, "fx_m");
  c.camera.fy_m = detail::get_number(in, "fy_m");
  c.camera.pixel_size_m = detail::get_number(in, "pixel_size_m");
  c.camera.ku_px = detail::get_number(in, "ku_px");
  c.camera.kv_px = detail::get_number(in, "kv_px");
  c.camera.width_px = static_cast<int>(detail::get_integer(in, "width_px"));
  c.camera.height_px = static_cast<int>(detail::get_integer(in, "height_px"));
  if (in.contains("axis_sign_u"))
    c.camera.axis_sign_u =
        static_cast<int>(detail::get_integer(in, "axis_sign_u"));
  if (in.contains("axis_sign_v"))
    c.camera.axis_sign_v =
        static_cast<int>(detail::get_integer(in, "axis_sign_v"));
  c.camera.validate();
  const detail::json& ex = j.at("extrinsics");
  if (!ex.contains("board_to_camera") || !ex.contains("pose_to_board"))
    throw FormatError("extrinsics need board_to_camera and pose_to_board");
  c.board_to_camera =
      detail::transform_spec_from_json(ex.at("board_to_camera"));
  c.pose_to_board = detail::transform_spec_from_json(ex.at("pose_to_board"));
  c.pose_to_board_transform();   // validates the rotation
  c.board_to_camera_transform();
  return c;
}

inline void write_calibration(const std::string& path, const Calibration& c) {
  detail::write_text_file(path, calibration_to_json_text(c));
}

inline Calibration read_calibration(const std::string& path) {
  return calibration_from_json_text(detail::read_text_file(path));
}

// ---------------------------------------------------------------------------
// Frame log (JSON Lines)
// ---------------------------------------------------------------------------

namespace detail {

inline json labeled_box_to_json(const LabeledBox& b) {
  require_finite(b.box.x, "gt box x");
  require_finite(b.box.y, "gt box y");
  require_finite(b.box.w, "gt box w");
  require_finite(b.box.h, "gt box h");
  return {{"class", b.class_label}, {"x", b.box.x}, {"y", b.box.y},
          {"w", b.box.w},           {"h", b.box.h}};
}

inline LabeledBox labeled_box_from_json(const json& j) {
  LabeledBox b;
  b.class_label = get_string(j, "class");
  b.box = {get_number(j, "x"), get_number(j, "y"), get_number(j, "w"),
           get_number(j, "h")};
  if (!(b.box.w > 0.0) || !(b.box.h > 0.0))
    throw FormatError("gt box must have positive size");
  return b;
}

}  // namespace detail

inline std::string frame_to_json_line(const FrameRecord& f) {
  detail::json j;
  j["frame_id"] = f.frame_id;
  j["pose"] = {{"x", f.pose.x},       {"y", f.pose.y},
               {"z", f.pose.z},       {"roll", f.pose.roll},
               {"pitch", f.pose.pitch}, {"yaw", f.pose.yaw}};
  detail::json wps = detail::json::array();
  for (const WorldPoint& w : f.waypoints)
    wps.push_back({w.x, w.y, w.z});
  j["waypoints"] = std::move(wps);
  detail::json gt = detail::json::array();
  for (const LabeledBox& b : f.gt) gt.push_back(detail::labeled_box_to_json(b));
  j["gt"] = std::move(gt);
  if (!f.image.empty()) j["image"] = f.image;
  return j.dump();
}

inline FrameRecord frame_from_json_line(const std::string& line) {
  const detail::json j = detail::parse(line, "frame log line");
  FrameRecord f;
  f.frame_id = detail::get_integer(j, "frame_id");
  if (!j.contains("pose")) throw FormatError("frame is missing pose");
  const detail::json& p = j.at("pose");
  f.pose = {detail::get_number(p, "x"),    detail::get_number(p, "y"),
            detail::get_number(p, "z"),    detail::get_number(p, "roll"),
            detail::get_number(p, "pitch"), detail::get_number(p, "yaw")};
  for (const detail::json& w : detail::get_array(j, "waypoints")) {
    if (!w.is_array() || w.size() != 3)
      throw FormatError("waypoints must be [x, y, z] triples");
    f.waypoints.push_back(
        {w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()});
  }
  for (const detail::json& b : detail::get_array(j, "gt"))
    f.gt.push_back(detail::labeled_box_from_json(b));
  if (j.contains("image")) f.image = detail::get_string(j, "image");
  return f;
}

inline std::string frame_log_to_text(const std::vector<FrameRecord>& frames) {
  std::string out;
  for (const FrameRecord& f : frames) {
    out += frame_to_json_line(f);
    out += '\n';
  }
  return out;
}

inline std::vector<FrameRecord> frame_log_from_text(const std::string& text) {
  std::vector<FrameRecord> frames;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    frames.push_back(frame_from_json_line(line));
  }
  return frames;
}

inline void write_frame_log(const std::string& path,
                            const std::vector<FrameRecord>& frames) {
  detail::write_text_file(path, frame_log_to_text(frames));
}

inline std::vector<FrameRecord> read_frame_log(const std::string& path) {
  return frame_log_from_text(detail::read_text_file(path));
}

// ---------------------------------------------------------------------------
// Replay file
// ---------------------------------------------------------------------------

namespace detail {

inline json detection_to_json(const Detection& d, bool with_source) {
  require_finite(d.box.x, "detection x");
  require_finite(d.box.y, "detection y");
  require_finite(d.box.w, "detection w");
  require_finite(d.box.h, "detection h");
  require_finite(d.score, "detection score");
  json j = {{"class", d.class_label}, {"score", d.score}, {"x", d.box.x},
            {"y", d.box.y},           {"w", d.box.w},     {"h", d.box.h}};
  if (with_source) j["source"] = d.source;
  return j;
}

inline Detection detection_from_json(const json& j, bool with_source) {
  Detection d;
  d.class_label = get_string(j, "class");
  d.score = get_number(j, "score");
  d.box = {get_number(j, "x"), get_number(j, "y"), get_number(j, "w"),
           get_number(j, "h")};
  if (with_source) d.source = static_cast<int>(get_integer(j, "source"));
  if (!(d.score >= 0.0 && d.score <= 1.0))
    throw FormatError("detection score must be in [0, 1]");
  if (!(d.box.w > 0.0) || !(d.box.h > 0.0))
    throw FormatError("detection box must have positive size");
  return d;
}

}  // namespace detail

inline std::string replay_to_json_text(const ReplayStore& store) {
  detail::json frames = detail::json::array();
  detail::json* current = nullptr;
  std::int64_t current_id = 0;
  for (const auto& [key, dets] : store.entries) {
    if (current == nullptr || key.first != current_id) {
      frames.push_back({{"frame_id", key.first},
                        {"sources", detail::json::array()}});
      current = &frames.back();
      current_id = key.first;
    }
    detail::json det_list = detail::json::array();
    for (const Detection& d : dets)
      det_list.push_back(detail::detection_to_json(d, false));
    (*current)["sources"].push_back(
        {{"source_j", key.second}, {"detections", std::move(det_list)}});
  }
  detail::json j;
  j["frames"] = std::move(frames);
  return j.dump(2) + "\n";
}

inline ReplayStore replay_from_json_text(const std::string& text) {
  const detail::json j = detail::parse(text, "replay file");
  ReplayStore store;
  for (const detail::json& frame : detail::get_array(j, "frames")) {
    const std::int64_t frame_id = detail::get_integer(frame, "frame_id");
    for (const detail::json& src : detail::get_array(frame, "sources")) {
      const int source_j =
          static_cast<int>(detail::get_integer(src, "source_j"));
      if (source_j < 0) throw FormatError("source_j must be >= 0");
      std::vector<Detection> dets;
      for (const detail::json& d : detail::get_array(src, "detections")) {
        Detection det = detail::detection_from_json(d, false);
        det.source = source_j;
        dets.push_back(std::move(det));
      }
      const auto [it, inserted] =
          store.entries.emplace(std::make_pair(frame_id, source_j),
                                std::move(dets));
      if (!inserted)
        throw FormatError("replay lists (frame, source) twice: frame " +
                          std::to_string(frame_id) + ", source " +
                          std::to_string(source_j));
    }
  }
  return store;
}

inline void write_replay(const std::string& path, const ReplayStore& store) {
  detail::write_text_file(path, replay_to_json_text(store));
}

inline ReplayStore read_replay(const std::string& path) {
  return replay_from_json_text(detail::read_text_file(path));
}

// ---------------------------------------------------------------------------
// Crop plan
// ---------------------------------------------------------------------------

inline std::string crop_plan_to_json_text(const std::vector<CropSpec>& plan) {
  detail::json arr = detail::json::array();
  for (const CropSpec& c : plan) {
    detail::require_finite(c.anchor.u, "anchor u");
    detail::require_finite(c.anchor.v, "anchor v");
    arr.push_back({{"j", c.j},
                   {"u", c.u},
                   {"v", c.v},
                   {"w", c.w},
                   {"h", c.h},
                   {"anchor_u", c.anchor.u},
                   {"anchor_v", c.anchor.v}});
  }
  return arr.dump(2) + "\n";
}

inline std::vector<CropSpec> crop_plan_from_json_text(
    const std::string& text) {
  const detail::json j = detail::parse(text, "crop plan");
  if (!j.is_array()) throw FormatError("crop plan must be a JSON array");
  std::vector<CropSpec> plan;
  for (const detail::json& c : j) {
    CropSpec spec;
    spec.j = static_cast<int>(detail::get_integer(c, "j"));
    spec.u = static_cast<int>(detail::get_integer(c, "u"));
    spec.v = static_cast<int>(detail::get_integer(c, "v"));
    spec.w = static_cast<int>(detail::get_integer(c, "w"));
    spec.h = static_cast<int>(detail::get_integer(c, "h"));
    spec.anchor = {detail::get_number(c, "anchor_u"),
                   detail::get_number(c, "anchor_v")};
    if (spec.w < 1 || spec.h < 1)
      throw FormatError("crop sizes must be >= 1");
    plan.push_back(spec);
  }
  return plan;
}

inline void write_crop_plan(const std::string& path,
                            const std::vector<CropSpec>& plan) {
  detail::write_text_file(path, crop_plan_to_json_text(plan));
}

inline std::vector<CropSpec> read_crop_plan(const std::string& path) {
  return crop_plan_from_json_text(detail::read_text_file(path));
}

// ---------------------------------------------------------------------------
// Fused detections
// ---------------------------------------------------------------------------

/// Fused output for one frame of a run.
struct FusedFrame {
  std::int64_t frame_id = 0;
  std::vector<Detection> detections;  // full-image coordinates
};

inline std::string fused_to_json_text(const std::vector<FusedFrame>& frames) {
  detail::json arr = detail::json::array();
  for (const FusedFrame& f : frames) {
    detail::json dets = detail::json::array();
    for (const Detection& d : f.detections)
      dets.push_back(detail::detection_to_json(d, true));
    arr.push_back({{"frame_id", f.frame_id}, {"detections", std::move(dets)}});
  }
  detail::json j;
  j["frames"] = std::move(arr);
  return j.dump(2) + "\n";
}

inline std::vector<FusedFrame> fused_from_json_text(const std::string& text) {
  const detail::json j = detail::parse(text, "fused detections");
  std::vector<FusedFrame> frames;
  for (const detail::json& f : detail::get_array(j, "frames")) {
    FusedFrame frame;
    frame.frame_id = detail::get_integer(f, "frame_id");
    for (const detail::json& d : detail::get_array(f, "detections"))
      frame.detections.push_back(detail::detection_from_json(d, true));
    frames.push_back(std::move(frame));
  }
  return frames;
}

inline void write_fused(const std::string& path,
                        const std::vector<FusedFrame>& frames) {
  detail::write_text_file(path, fused_to_json_text(frames));
}

inline std::vector<FusedFrame> read_fused(const std::string& path) {
  return fused_from_json_text(detail::read_text_file(path));
}

// ---------------------------------------------------------------------------
// Ground truth file
// ---------------------------------------------------------------------------

inline std::string ground_truth_to_json_text(
    const std::vector<GroundTruthBox>& gts) {
  std::map<std::int64_t, std::vector<const GroundTruthBox*>> by_frame;
  for (const GroundTruthBox& g : gts) by_frame[g.frame_id].push_back(&g);
  detail::json frames = detail::json::array();
  for (const auto& [frame_id, boxes] : by_frame) {
    detail::json arr = detail::json::array();
    for (const GroundTruthBox* g : boxes)
      arr.push_back(detail::labeled_box_to_json({g->class_label, g->box}));
    frames.push_back({{"frame_id", frame_id}, {"boxes", std::move(arr)}});
  }
  detail::json j;
  j["frames"] = std::move(frames);
  return j.dump(2) + "\n";
}

inline std::vector<GroundTruthBox> ground_truth_from_json_text(
    const std::string& text) {
  const detail::json j = detail::parse(text, "ground truth");
  std::vector<GroundTruthBox> gts;
  for (const detail::json& f : detail::get_array(j, "frames")) {
    const std::int64_t frame_id = detail::get_integer(f, "frame_id");
    for (const detail::json& b : detail::get_array(f, "boxes")) {
      const LabeledBox lb = detail::labeled_box_from_json(b);
      gts.push_back({frame_id, lb.box, lb.class_label});
    }
  }
  return gts;
}

inline void write_ground_truth(const std::string& path,
                               const std::vector<GroundTruthBox>& gts) {
  detail::write_text_file(path, ground_truth_to_json_text(gts));
}

inline std::vector<GroundTruthBox> read_ground_truth(const std::string& path) {
  return ground_truth_from_json_text(detail::read_text_file(path));
}

// ---------------------------------------------------------------------------
// Precision/recall CSV
// ---------------------------------------------------------------------------

inline std::string pr_curve_to_csv(const PRCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "score,recall,precision\n";
  for (const PRPoint& p : curve.points)
    out << p.score << ',' << p.recall << ',' << p.precision << '\n';
  return out.str();
}

inline void write_pr_csv(const std::string& path, const PRCurve& curve) {
  detail::write_text_file(path, pr_curve_to_csv(curve));
}

}  // namespace fovea
