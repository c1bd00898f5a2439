// Independent reference implementations the tests compare the library
// against. Everything here is deliberately written from the definitions,
// in a different style from the library code, so agreement is meaningful.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "fovea/detector.hpp"
#include "fovea/fusion.hpp"
#include "fovea/geometry.hpp"
#include "fovea/metrics.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// 4x4 homogeneous matrices (reference for rigid-transform chains)
// ---------------------------------------------------------------------------

using Mat4 = std::array<std::array<double, 4>, 4>;

inline Mat4 homogeneous(const fovea::Mat3& r, const fovea::Vec3& t) {
  Mat4 m{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = r[i][j];
    m[i][3] = t[i];
  }
  m[3] = {0.0, 0.0, 0.0, 1.0};
  return m;
}

inline Mat4 mat4_mul(const Mat4& a, const Mat4& b) {
  Mat4 out{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += a[i][k] * b[k][j];
      out[i][j] = acc;
    }
  return out;
}

inline std::array<double, 3> mat4_apply(const Mat4& m,
                                        const std::array<double, 3>& p) {
  std::array<double, 4> h{p[0], p[1], p[2], 1.0};
  std::array<double, 4> r{};
  for (int i = 0; i < 4; ++i) {
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) acc += m[i][k] * h[k];
    r[i] = acc;
  }
  return {r[0] / r[3], r[1] / r[3], r[2] / r[3]};
}

// ---------------------------------------------------------------------------
// Sequential duplicate-suppression re-trace
// ---------------------------------------------------------------------------

// Corner-form IoU, written independently of the library's box helpers.
inline double iou_corners(const fovea::Box2D& a, const fovea::Box2D& b) {
  const double ix0 = std::max(a.x, b.x);
  const double iy0 = std::max(a.y, b.y);
  const double ix1 = std::min(a.x + a.w, b.x + b.w);
  const double iy1 = std::min(a.y + a.h, b.y + b.h);
  const double iw = ix1 - ix0;
  const double ih = iy1 - iy0;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

// Literal re-trace of the merge rule: walk rows top to bottom; every box
// of the first row holding any box joins the output unconditionally; each
// box after that joins only if no already-output box overlaps it with IoU
// strictly above the threshold.
inline std::vector<fovea::Detection> overlap_filter_retrace(
    const fovea::DetectionMatrix& matrix, double thresh) {
  std::vector<fovea::Detection> accepted;
  std::size_t row_index = 0;
  // find the first row that contains any detection
  while (row_index < matrix.rows.size() &&
         matrix.rows[row_index].detections.empty())
    ++row_index;
  if (row_index == matrix.rows.size()) return accepted;
  for (const fovea::Detection& d : matrix.rows[row_index].detections)
    accepted.push_back(d);
  for (std::size_t r = row_index + 1; r < matrix.rows.size(); ++r) {
    for (const fovea::Detection& d : matrix.rows[r].detections) {
      bool is_duplicate = false;
      for (std::size_t k = 0; k < accepted.size() && !is_duplicate; ++k)
        if (iou_corners(accepted[k].box, d.box) > thresh) is_duplicate = true;
      if (!is_duplicate) accepted.push_back(d);
    }
  }
  return accepted;
}

// ---------------------------------------------------------------------------
// Average precision by direct envelope evaluation
// ---------------------------------------------------------------------------

// Envelope at recall r: the best precision among all points whose recall
// is at least r, evaluated by a full scan (no running-max shortcut).
inline double envelope_at(const fovea::PRCurve& curve, double r) {
  double best = 0.0;
  for (const fovea::PRPoint& p : curve.points)
    if (p.recall >= r) best = std::max(best, p.precision);
  return best;
}

// Riemann sum over the recall breakpoints: the envelope is a step
// function constant on (r_{k-1}, r_k], so summing width times the value
// at the right endpoint is exact.
inline double average_precision_riemann(const fovea::PRCurve& curve) {
  if (!curve.recall_defined) return 0.0;
  std::vector<double> breakpoints;
  for (const fovea::PRPoint& p : curve.points)
    breakpoints.push_back(p.recall);
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()),
                    breakpoints.end());
  double ap = 0.0;
  double prev = 0.0;
  for (double r : breakpoints) {
    ap += (r - prev) * envelope_at(curve, r);
    prev = r;
  }
  return ap;
}

// ---------------------------------------------------------------------------
// Greedy matching re-trace
// ---------------------------------------------------------------------------

// Re-derives the TP/FP labels: detections visited best score first (ties:
// lower frame id first, then earlier input position); each takes the
// not-yet-taken same-frame same-class ground-truth box it overlaps most,
// if that overlap reaches the threshold.
inline std::vector<bool> match_retrace(
    const std::vector<fovea::DetectionRecord>& dets,
    const std::vector<fovea::GroundTruthBox>& gts, double iou_thresh) {
  std::vector<std::size_t> visit(dets.size());
  for (std::size_t i = 0; i < visit.size(); ++i) visit[i] = i;
  std::sort(visit.begin(), visit.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].det.score != dets[b].det.score)
      return dets[a].det.score > dets[b].det.score;
    if (dets[a].frame_id != dets[b].frame_id)
      return dets[a].frame_id < dets[b].frame_id;
    return a < b;
  });

  std::vector<bool> taken(gts.size(), false);
  std::vector<bool> by_input(dets.size(), false);
  for (std::size_t pos = 0; pos < visit.size(); ++pos) {
    const std::size_t i = visit[pos];
    double best = -1.0;
    std::size_t arg = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      if (gts[g].frame_id != dets[i].frame_id) continue;
      if (gts[g].class_label != dets[i].det.class_label) continue;
      const double v = iou_corners(dets[i].det.box, gts[g].box);
      if (v > best) {
        best = v;
        arg = g;
      }
    }
    if (arg < gts.size() && best >= iou_thresh) {
      taken[arg] = true;
      by_input[i] = true;
    }
  }
  return by_input;
}

// ---------------------------------------------------------------------------
// Random generation helpers
// ---------------------------------------------------------------------------

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline fovea::Box2D random_box(std::mt19937_64& rng, double span = 100.0) {
  return {uniform(rng, 0.0, span), uniform(rng, 0.0, span),
          uniform(rng, 1.0, span / 2.0), uniform(rng, 1.0, span / 2.0)};
}

inline fovea::Mat3 random_rotation(std::mt19937_64& rng) {
  return fovea::rotation_from_rpy(uniform(rng, -3.1, 3.1),
                                  uniform(rng, -1.5, 1.5),
                                  uniform(rng, -3.1, 3.1));
}

inline fovea::RigidTransform random_transform(std::mt19937_64& rng,
                                              fovea::Frame from,
                                              fovea::Frame to,
                                              double span = 10.0) {
  return {random_rotation(rng),
          fovea::Vec3{uniform(rng, -span, span), uniform(rng, -span, span),
                      uniform(rng, -span, span)},
          from, to};
}

}  // namespace oracle
