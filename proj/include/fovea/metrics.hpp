#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fovea/box.hpp"
#include "fovea/detector.hpp"

namespace fovea {

/// One labeled ground-truth box, full-image coordinates.
struct GroundTruthBox {
  std::int64_t frame_id = 0;
  Box2D box;
  std::string class_label = "car";
};

/// One detection tagged with the frame it belongs to.
struct DetectionRecord {
  std::int64_t frame_id = 0;
  Detection det;
};

/// Detections in descending-score order, each flagged true positive or
/// false positive after greedy matching.
struct MatchList {
  struct Entry {
    double score = 0.0;
    bool is_tp = false;
    std::size_t input_index = 0;  // position in the caller's vector
  };
  std::vector<Entry> entries;
  int n_gt = 0;
};

/// Greedy matching: walk detections by descending score (ties keep input
/// order); each detection takes the highest-IoU unmatched ground-truth
/// box of the same frame and class, provided that IoU >= iou_threshold.
/// A match consumes the ground-truth box; everything else is a false
/// positive.
inline MatchList match_detections(const std::vector<DetectionRecord>& dets,
                                  const std::vector<GroundTruthBox>& gts,
                                  double iou_threshold = 0.5) {
  if (!(iou_threshold > 0.0) || !(iou_threshold <= 1.0))
    throw std::invalid_argument("iou threshold must be in (0, 1]");

  std::map<std::int64_t, std::vector<std::size_t>> gt_by_frame;
  for (std::size_t i = 0; i < gts.size(); ++i)
    gt_by_frame[gts[i].frame_id].push_back(i);
  std::vector<char> gt_matched(gts.size(), 0);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (dets[a].det.score != dets[b].det.score)
                       return dets[a].det.score > dets[b].det.score;
                     return dets[a].frame_id < dets[b].frame_id;
                   });

  MatchList result;
  result.n_gt = static_cast<int>(gts.size());
  result.entries.reserve(dets.size());
  for (std::size_t idx : order) {
    const DetectionRecord& rec = dets[idx];
    double best_iou = 0.0;
    std::size_t best_gt = gts.size();
    const auto it = gt_by_frame.find(rec.frame_id);
    if (it != gt_by_frame.end()) {
      for (std::size_t g : it->second) {
        if (gt_matched[g]) continue;
        if (gts[g].class_label != rec.det.class_label) continue;
        const double v = iou(rec.det.box, gts[g].box);
        if (v > best_iou) {
          best_iou = v;
          best_gt = g;
        }
      }
    }
    const bool tp = best_gt < gts.size() && best_iou >= iou_threshold;
    if (tp) gt_matched[best_gt] = 1;
    result.entries.push_back({rec.det.score, tp, idx});
  }
  return result;
}

struct PRPoint {
  double score = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

/// Cumulative precision/recall after each detection in descending-score
/// order. recall_defined is false when there is no ground truth at all,
/// in which case recall is reported as 0.
struct PRCurve {
  std::vector<PRPoint> points;
  int n_gt = 0;
  bool recall_defined = true;
};

inline PRCurve pr_curve(const MatchList& matches) {
  PRCurve curve;
  curve.n_gt = matches.n_gt;
  curve.recall_defined = matches.n_gt > 0;
  curve.points.reserve(matches.entries.size());
  int tp = 0;
  int seen = 0;
  for (const MatchList::Entry& e : matches.entries) {
    ++seen;
    if (e.is_tp) ++tp;
    const double recall =
        curve.recall_defined ? static_cast<double>(tp) / matches.n_gt : 0.0;
    const double precision = static_cast<double>(tp) / seen;
    curve.points.push_back({e.score, recall, precision});
  }
  return curve;
}

/// Area under the precision envelope: at each point the precision is
/// replaced by the maximum precision at that recall or beyond, and the
/// curve is integrated over recall. Zero ground truth yields 0.
inline double average_precision(const PRCurve& curve) {
  if (!curve.recall_defined || curve.points.empty()) return 0.0;
  const std::size_t n = curve.points.size();
  std::vector<double> envelope(n);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    running = std::max(running, curve.points[i].precision);
    envelope[i] = running;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (curve.points[i].recall - prev_recall) * envelope[i];
    prev_recall = curve.points[i].recall;
  }
  return ap;
}

/// Bundled evaluation output.
struct APResult {
  double ap = 0.0;
  PRCurve curve;
  int tp = 0;
  int fp = 0;
  int n_gt = 0;
};

inline APResult evaluate_detections(const std::vector<DetectionRecord>& dets,
                                    const std::vector<GroundTruthBox>& gts,
                                    double iou_threshold = 0.5) {
  const MatchList matches = match_detections(dets, gts, iou_threshold);
  APResult r;
  r.curve = pr_curve(matches);
  r.ap = average_precision(r.curve);
  r.n_gt = matches.n_gt;
  for (const MatchList::Entry& e : matches.entries)
    (e.is_tp ? r.tp : r.fp) += 1;
  return r;
}

}  // namespace fovea
