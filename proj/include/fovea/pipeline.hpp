#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "fovea/crop_planner.hpp"
#include "fovea/detector.hpp"
#include "fovea/fusion.hpp"
#include "fovea/io.hpp"
#include "fovea/metrics.hpp"

namespace fovea {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  Calibration calibration;
  std::vector<FrameRecord> frames;
  std::shared_ptr<const DetectorBackend> backend;
  CropPlanConfig crop;
  std::set<std::string> class_whitelist = {"car"};
  double fusion_iou = 0.5;
  double eval_iou = 0.5;
  int input_side = 608;
  int jobs = 1;
  double max_failure_fraction = 0.0;  // tolerated share of failed frames

  void validate() const {
    if (!backend) throw ConfigError("no detector backend configured");
    calibration.camera.validate();
    crop.validate();
    if (!(fusion_iou > 0.0 && fusion_iou < 1.0))
      throw ConfigError("fusion iou threshold must be in (0, 1)");
    if (!(eval_iou > 0.0 && eval_iou < 1.0))
      throw ConfigError("eval iou threshold must be in (0, 1)");
    if (input_side < 1) throw ConfigError("input side must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0))
      throw ConfigError("failure fraction must be in [0, 1]");
  }
};

struct FrameFailure {
  std::int64_t frame_id = 0;
  std::string message;
};

struct PipelineResult {
  std::vector<FusedFrame> fused;      // successfully processed frames, in order
  std::vector<GroundTruthBox> gt;     // ground truth from those frames
  APResult ap;
  bool ap_defined = false;            // false when there is no ground truth
  int duplicates_dropped = 0;
  std::vector<FrameFailure> failures;
};

namespace detail {

struct FrameOutcome {
  bool ok = false;
  FusedFrame fused;
  int duplicates = 0;
  std::string error;
};

inline FrameOutcome process_frame(const FrameRecord& frame,
                                  const PipelineConfig& cfg,
                                  std::mutex* backend_mutex) {
  FrameOutcome out;
  out.fused.frame_id = frame.frame_id;
  try {
    const CameraModel& cam = cfg.calibration.camera;
    const ExtrinsicChain chain{world_to_pose(frame.pose),
                               cfg.calibration.pose_to_board_transform(),
                               cfg.calibration.board_to_camera_transform()};

    std::vector<CropSpec> regions;
    regions.push_back(CropSpec::whole_image(cam));
    if (cfg.crop.count > 0) {
      for (const CropSpec& c : plan_crops(frame, cam, chain, cfg.crop))
        regions.push_back(c);
    }

    std::vector<Detection> full_image_dets;
    std::vector<int> sources;
    for (const CropSpec& region : regions) {
      sources.push_back(region.j);
      std::vector<Detection> local;
      {
        std::unique_lock<std::mutex> lock;
        if (backend_mutex)
          lock = std::unique_lock<std::mutex>(*backend_mutex);
        local = cfg.backend->detect({&frame, region, cfg.input_side});
      }
      for (const Detection& d : local)
        full_image_dets.push_back(to_full_image(d, region));
    }

    const std::vector<Detection> kept =
        class_filter(full_image_dets, cfg.class_whitelist);
    const DetectionMatrix matrix = build_matrix(kept, sources);
    FusedDetections fused = overlap_filter(matrix, cfg.fusion_iou);

    out.fused.detections = std::move(fused.detections);
    out.duplicates = fused.duplicates_dropped;
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace detail

/// Runs the full per-frame chain (plan crops, detect everywhere, remap,
/// class-filter, fuse) over every frame, then matches the surviving
/// detections against the surviving frames' ground truth. Frames that
/// throw are skipped and reported in `failures`. Worker count cfg.jobs;
/// output is identical regardless of parallelism.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();

  const std::size_t n = cfg.frames.size();
  std::vector<detail::FrameOutcome> outcomes(n);
  std::mutex backend_mutex;
  std::mutex* mutex_ptr =
      cfg.backend->concurrency_safe() ? nullptr : &backend_mutex;

  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(cfg.jobs, n ? n : 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      outcomes[i] = detail::process_frame(cfg.frames[i], cfg, mutex_ptr);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) return;
          outcomes[i] = detail::process_frame(cfg.frames[i], cfg, mutex_ptr);
        }
      });
    for (std::thread& th : pool) th.join();
  }

  PipelineResult result;
  std::vector<DetectionRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    detail::FrameOutcome& o = outcomes[i];
    if (!o.ok) {
      result.failures.push_back({cfg.frames[i].frame_id, o.error});
      continue;
    }
    for (const Detection& d : o.fused.detections)
      records.push_back({o.fused.frame_id, d});
    for (const LabeledBox& gt : cfg.frames[i].gt) {
      if (!cfg.class_whitelist.count(gt.class_label)) continue;
      result.gt.push_back({cfg.frames[i].frame_id, gt.box, gt.class_label});
    }
    result.duplicates_dropped += o.duplicates;
    result.fused.push_back(std::move(o.fused));
  }

  result.ap = evaluate_detections(records, result.gt, cfg.eval_iou);
  result.ap_defined = result.ap.n_gt > 0;
  return result;
}

// ---------------------------------------------------------------------------
// Crop-count sweep
// ---------------------------------------------------------------------------

struct SweepRow {
  int crops = 0;
  double ap = 0.0;
  bool ap_defined = false;
  int detections = 0;
  int duplicates_dropped = 0;
  int tp = 0;
  int fp = 0;
  int n_gt = 0;
  int failed_frames = 0;
  double wall_ms = 0.0;  // human-readable table only, not in the JSON report
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<PRCurve> curves;  // one per row, same order
};

/// Runs the pipeline once per crop count with everything else fixed.
inline SweepReport sweep_crops(const PipelineConfig& base,
                               const std::vector<int>& counts = {0, 1, 2, 3,
                                                                 4, 5}) {
  SweepReport report;
  for (int count : counts) {
    PipelineConfig cfg = base;
    cfg.crop.count = count;
    const auto start = std::chrono::steady_clock::now();
    const PipelineResult r = run_pipeline(cfg);
    const auto stop = std::chrono::steady_clock::now();

    SweepRow row;
    row.crops = count;
    row.ap = r.ap.ap;
    row.ap_defined = r.ap_defined;
    for (const FusedFrame& f : r.fused)
      row.detections += static_cast<int>(f.detections.size());
    row.duplicates_dropped = r.duplicates_dropped;
    row.tp = r.ap.tp;
    row.fp = r.ap.fp;
    row.n_gt = r.ap.n_gt;
    row.failed_frames = static_cast<int>(r.failures.size());
    row.wall_ms =
        std::chrono::duration<double, std::milli>(stop - start).count();
    report.rows.push_back(row);
    report.curves.push_back(r.ap.curve);
  }
  return report;
}

/// Canonical machine-readable report. Deliberately excludes wall-clock
/// timing so identical runs produce identical bytes.
inline std::string sweep_report_to_json_text(const SweepReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SweepRow& r : report.rows) {
    rows.push_back({{"crops", r.crops},
                    {"ap", r.ap},
                    {"ap_defined", r.ap_defined},
                    {"detections", r.detections},
                    {"duplicates_dropped", r.duplicates_dropped},
                    {"tp", r.tp},
                    {"fp", r.fp},
                    {"n_gt", r.n_gt},
                    {"failed_frames", r.failed_frames}});
  }
  nlohmann::json j;
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

/// Aligned-column table for humans, including wall time.
inline std::string render_sweep_table(const SweepReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(7) << "crops" << std::right << std::setw(10)
      << "ap" << std::setw(12) << "detections" << std::setw(12) << "dropped"
      << std::setw(8) << "tp" << std::setw(8) << "fp" << std::setw(8)
      << "n_gt" << std::setw(8) << "failed" << std::setw(12) << "wall_ms"
      << '\n';
  for (const SweepRow& r : report.rows) {
    out << std::left << std::setw(7) << r.crops << std::right << std::fixed
        << std::setprecision(4) << std::setw(10) << r.ap << std::setw(12)
        << r.detections << std::setw(12) << r.duplicates_dropped
        << std::setw(8) << r.tp << std::setw(8) << r.fp << std::setw(8)
        << r.n_gt << std::setw(8) << r.failed_frames << std::setprecision(1)
        << std::setw(12) << r.wall_ms << '\n';
    out.unsetf(std::ios::fixed);
  }
  return out.str();
}

}  // namespace fovea
