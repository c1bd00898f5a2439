#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fovea/box.hpp"
#include "fovea/detector.hpp"

namespace fovea {

struct DuplicateSourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Detections grouped by source region, one row per region. Rows are
/// ordered whole image first (source 0), then crops by ascending source
/// index — i.e. largest region to smallest. All boxes are full-image.
struct DetectionMatrix {
  struct Row {
    int source = 0;
    std::vector<Detection> detections;
  };
  std::vector<Row> rows;
};

/// Groups full-image detections into a DetectionMatrix. Every source in
/// `sources` gets a row (possibly empty), ordered ascending. A detection
/// whose source is not listed is an error, as is a repeated source.
inline DetectionMatrix build_matrix(const std::vector<Detection>& detections,
                                    std::vector<int> sources) {
  std::sort(sources.begin(), sources.end());
  if (std::adjacent_find(sources.begin(), sources.end()) != sources.end())
    throw DuplicateSourceError("source listed twice");

  DetectionMatrix m;
  std::map<int, std::size_t> row_of;
  for (int s : sources) {
    row_of[s] = m.rows.size();
    m.rows.push_back({s, {}});
  }
  for (const Detection& d : detections) {
    const auto it = row_of.find(d.source);
    if (it == row_of.end())
      throw std::invalid_argument("detection from unlisted source " +
                                  std::to_string(d.source));
    m.rows[it->second].detections.push_back(d);
  }
  return m;
}

/// build_matrix from explicit (source, detections) groups.
inline DetectionMatrix build_matrix(
    const std::vector<std::pair<int, std::vector<Detection>>>& per_source) {
  std::vector<Detection> flat;
  std::vector<int> sources;
  for (const auto& [source, dets] : per_source) {
    sources.push_back(source);
    for (Detection d : dets) {
      d.source = source;
      flat.push_back(std::move(d));
    }
  }
  return build_matrix(flat, std::move(sources));
}

/// Result of merging a DetectionMatrix into one deduplicated list.
struct FusedDetections {
  std::vector<Detection> detections;  // accepted, in scan order
  int duplicates_dropped = 0;
};

/// Merges rows by scanning them in order (whole image first, then crops
/// largest to smallest). Every box in the first row that has any boxes
/// is accepted unconditionally. Each later box is accepted iff its IoU
/// with every already-accepted box stays at or below `iou_threshold`;
/// overlapping more than that with any accepted box makes it a duplicate.
/// With class_aware = true only boxes of the same class can suppress
/// each other.
inline FusedDetections overlap_filter(const DetectionMatrix& matrix,
                                      double iou_threshold = 0.5,
                                      bool class_aware = false) {
  if (!(iou_threshold >= 0.0) || !(iou_threshold <= 1.0))
    throw std::invalid_argument("iou threshold must be in [0, 1]");

  FusedDetections fused;
  bool past_first_nonempty = false;
  for (const DetectionMatrix::Row& row : matrix.rows) {
    if (row.detections.empty()) continue;
    if (!past_first_nonempty) {
      fused.detections.insert(fused.detections.end(), row.detections.begin(),
                              row.detections.end());
      past_first_nonempty = true;
      continue;
    }
    for (const Detection& d : row.detections) {
      bool duplicate = false;
      for (const Detection& kept : fused.detections) {
        if (class_aware && kept.class_label != d.class_label) continue;
        if (iou(kept.box, d.box) > iou_threshold) {
          duplicate = true;
          break;
        }
      }
      if (duplicate)
        ++fused.duplicates_dropped;
      else
        fused.detections.push_back(d);
    }
  }
  return fused;
}

}  // namespace fovea
