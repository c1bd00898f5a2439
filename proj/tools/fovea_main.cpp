// Command-line front end: simulate scenes, plan crops, run detection
// backends, fuse, evaluate, and sweep crop counts over a frame log.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fovea/fovea.hpp"

namespace {

namespace fs = std::filesystem;

struct BackendFlags {
  std::string kind = "synthetic";
  std::string replay_path;
  std::string external_cmd;
  double h_min = 20.0;
  double sigma = 1.5;
  std::uint64_t seed = 0;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& f) {
  cmd->add_option("--backend", f.kind, "Detector backend")
      ->check(CLI::IsMember({"replay", "synthetic", "external"}))
      ->capture_default_str();
  cmd->add_option("--replay", f.replay_path,
                  "Replay file (for --backend replay)");
  cmd->add_option("--cmd", f.external_cmd,
                  "Detector command (for --backend external)");
  cmd->add_option("--h-min", f.h_min,
                  "Synthetic: min box height in detector input pixels")
      ->capture_default_str();
  cmd->add_option("--sigma", f.sigma, "Synthetic: noise sigma in pixels")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Synthetic: RNG seed")
      ->capture_default_str();
}

std::shared_ptr<const fovea::DetectorBackend> make_backend(
    const BackendFlags& f) {
  if (f.kind == "synthetic")
    return std::make_shared<fovea::SyntheticBackend>(
        fovea::SyntheticConfig{f.h_min, f.sigma, f.seed});
  if (f.kind == "replay") {
    if (f.replay_path.empty())
      throw fovea::ConfigError("--backend replay requires --replay FILE");
    return std::make_shared<fovea::ReplayBackend>(
        fovea::read_replay(f.replay_path));
  }
  if (f.external_cmd.empty())
    throw fovea::ConfigError("--backend external requires --cmd COMMAND");
  return std::make_shared<fovea::ExternalBackend>(f.external_cmd);
}

struct PlanFlags {
  int crops = 5;
  double spacing_m = 25.0;
  double fraction = 0.6;
  double lift = 1.5;
  int min_crop_px = 16;
};

void add_plan_flags(CLI::App* cmd, PlanFlags& f) {
  cmd->add_option("--crops", f.crops, "Number of crops")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--spacing-m", f.spacing_m,
                  "Arc-length spacing between crop anchors, meters")
      ->capture_default_str();
  cmd->add_option("--crop-fraction", f.fraction,
                  "First crop's size as a fraction of the image")
      ->capture_default_str();
  cmd->add_option("--lift", f.lift,
                  "Upward crop shift, in crop half-heights")
      ->capture_default_str();
  cmd->add_option("--min-crop-px", f.min_crop_px,
                  "Reject crops smaller than this on either side")
      ->capture_default_str();
}

fovea::CropPlanConfig to_crop_config(const PlanFlags& f) {
  fovea::CropPlanConfig cfg;
  cfg.count = f.crops;
  cfg.spacing_m = f.spacing_m;
  cfg.first_crop_fraction = f.fraction;
  cfg.vertical_lift = f.lift;
  cfg.min_crop_px = f.min_crop_px;
  cfg.validate();
  return cfg;
}

fovea::Calibration load_calibration(const std::string& path) {
  if (path.empty()) return {};
  return fovea::read_calibration(path);
}

std::set<std::string> to_whitelist(const std::vector<std::string>& classes) {
  if (classes.empty()) return {"car"};
  return {classes.begin(), classes.end()};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw fovea::ConfigError("cannot create output directory: " + dir);
}

std::string ap_result_to_json_text(const fovea::APResult& ap,
                                   bool ap_defined) {
  nlohmann::json j;
  j["ap"] = ap.ap;
  j["ap_defined"] = ap_defined;
  j["tp"] = ap.tp;
  j["fp"] = ap.fp;
  j["n_gt"] = ap.n_gt;
  return j.dump(2) + "\n";
}

/// Exit code 2: more frames failed than the run tolerates.
struct TooManyFrameFailures : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_failures(const fovea::PipelineResult& result, std::size_t frames,
                    double max_fraction) {
  if (result.failures.empty() || frames == 0) return;
  for (const fovea::FrameFailure& f : result.failures)
    std::cerr << "frame " << f.frame_id << " failed: " << f.message << "\n";
  const double fraction =
      static_cast<double>(result.failures.size()) / frames;
  if (fraction > max_fraction)
    throw TooManyFrameFailures(
        std::to_string(result.failures.size()) + " of " +
        std::to_string(frames) + " frames failed");
}

int run(int argc, char** argv) {
  CLI::App app{
      "Path-guided image cropping pipeline: plan magnified crops along "
      "the drive path, detect in each, fuse, and evaluate"};
  app.require_subcommand(1);

  // ---- simulate -----------------------------------------------------------
  auto* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic drive and write its frame log");
  struct {
    std::string out = "frames.jsonl";
    std::string calib_out;
    std::string shape = "straight";
    double arc_radius = 200.0;
    double path_length = 150.0;
    int frames = 200;
    double advance = 0.5;
    double jitter = 0.0;
    std::uint64_t seed = 0;
  } sim;
  simulate->add_option("--out", sim.out, "Frame log path")
      ->capture_default_str();
  simulate->add_option("--calib-out", sim.calib_out,
                       "Also write the default calibration JSON here");
  simulate->add_option("--path-shape", sim.shape, "Drive path shape")
      ->check(CLI::IsMember({"straight", "arc"}))
      ->capture_default_str();
  simulate->add_option("--arc-radius", sim.arc_radius,
                       "Arc radius in meters (for --path-shape arc)")
      ->capture_default_str();
  simulate->add_option("--path-length", sim.path_length,
                       "Path length in meters")
      ->capture_default_str();
  simulate->add_option("--frames", sim.frames, "Number of frames")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--advance", sim.advance,
                       "Vehicle travel per frame, meters")
      ->capture_default_str();
  simulate->add_option("--jitter", sim.jitter,
                       "Car placement jitter sigma, meters")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Scene seed")
      ->capture_default_str();
  simulate->callback([&] {
    fovea::SceneConfig cfg;
    cfg.path_shape = sim.shape == "arc"
                         ? fovea::SceneConfig::PathShape::arc
                         : fovea::SceneConfig::PathShape::straight;
    cfg.arc_radius_m = sim.arc_radius;
    cfg.path_length_m = sim.path_length;
    cfg.frames = sim.frames;
    cfg.frame_advance_m = sim.advance;
    cfg.placement_jitter_m = sim.jitter;
    cfg.seed = sim.seed;
    const fovea::Scene scene = fovea::generate_scene(cfg);
    std::vector<fovea::FrameRecord> frames;
    frames.reserve(cfg.frames);
    for (int i = 0; i < cfg.frames; ++i)
      frames.push_back(fovea::render_frame(scene, i));
    fovea::write_frame_log(sim.out, frames);
    if (!sim.calib_out.empty())
      fovea::write_calibration(sim.calib_out, fovea::Calibration{});
    std::cout << "wrote " << frames.size() << " frames to " << sim.out
              << "\n";
  });

  // ---- plan ---------------------------------------------------------------
  auto* plan = app.add_subcommand(
      "plan", "Emit the crop rectangles for one frame of a log");
  struct {
    std::string log;
    std::string config;
    std::string out = "plan.json";
    std::int64_t frame_id = -1;
  } pl;
  PlanFlags plan_flags;
  plan->add_option("--log", pl.log, "Frame log path")->required();
  plan->add_option("--config", pl.config, "Calibration JSON path");
  plan->add_option("--frame-id", pl.frame_id,
                   "Frame to plan (default: first frame)");
  plan->add_option("--out", pl.out, "Crop plan output path")
      ->capture_default_str();
  add_plan_flags(plan, plan_flags);
  plan->callback([&] {
    const auto frames = fovea::read_frame_log(pl.log);
    if (frames.empty()) throw fovea::ConfigError("frame log is empty");
    const fovea::FrameRecord* frame = &frames.front();
    if (pl.frame_id >= 0) {
      frame = nullptr;
      for (const auto& f : frames)
        if (f.frame_id == pl.frame_id) frame = &f;
      if (!frame)
        throw fovea::ConfigError("frame id not found in log: " +
                                 std::to_string(pl.frame_id));
    }
    const fovea::Calibration calib = load_calibration(pl.config);
    const fovea::ExtrinsicChain chain{
        fovea::world_to_pose(frame->pose), calib.pose_to_board_transform(),
        calib.board_to_camera_transform()};
    const auto crops = fovea::plan_crops(*frame, calib.camera, chain,
                                         to_crop_config(plan_flags));
    fovea::write_crop_plan(pl.out, crops);
    std::cout << "wrote " << crops.size() << " crops to " << pl.out << "\n";
  });

  // ---- detect -------------------------------------------------------------
  auto* detect = app.add_subcommand(
      "detect",
      "Run a detector over the full image and planned crops of every "
      "frame; write region-local results in replay format");
  struct {
    std::string log;
    std::string config;
    std::string out = "detections.json";
    int input_side = 608;
  } det;
  BackendFlags det_backend;
  PlanFlags det_plan;
  detect->add_option("--log", det.log, "Frame log path")->required();
  detect->add_option("--config", det.config, "Calibration JSON path");
  detect->add_option("--out", det.out, "Detection output path (replay format)")
      ->capture_default_str();
  detect->add_option("--input-side", det.input_side,
                     "Detector input side, pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_backend_flags(detect, det_backend);
  add_plan_flags(detect, det_plan);
  detect->callback([&] {
    const auto frames = fovea::read_frame_log(det.log);
    const fovea::Calibration calib = load_calibration(det.config);
    const auto backend = make_backend(det_backend);
    const fovea::CropPlanConfig crop_cfg = to_crop_config(det_plan);
    fovea::ReplayStore store;
    for (const fovea::FrameRecord& frame : frames) {
      const fovea::ExtrinsicChain chain{fovea::world_to_pose(frame.pose),
                                        calib.pose_to_board_transform(),
                                        calib.board_to_camera_transform()};
      std::vector<fovea::CropSpec> regions;
      regions.push_back(fovea::CropSpec::whole_image(calib.camera));
      if (crop_cfg.count > 0)
        for (const auto& c :
             fovea::plan_crops(frame, calib.camera, chain, crop_cfg))
          regions.push_back(c);
      for (const fovea::CropSpec& region : regions)
        store.entries[{frame.frame_id, region.j}] =
            backend->detect({&frame, region, det.input_side});
    }
    fovea::write_replay(det.out, store);
    std::cout << "wrote detections for " << frames.size() << " frames to "
              << det.out << "\n";
  });

  // ---- fuse ---------------------------------------------------------------
  auto* fuse = app.add_subcommand(
      "fuse",
      "Remap recorded region-local detections to full-image coordinates "
      "and merge duplicates");
  struct {
    std::string log;
    std::string config;
    std::string replay;
    std::string out = "fused.json";
    std::vector<std::string> classes;
    double fusion_iou = 0.5;
    int jobs = 1;
    double max_failure_fraction = 0.0;
  } fu;
  PlanFlags fuse_plan;
  fuse->add_option("--log", fu.log, "Frame log path")->required();
  fuse->add_option("--config", fu.config, "Calibration JSON path");
  fuse->add_option("--replay", fu.replay, "Recorded detections (replay format)")
      ->required();
  fuse->add_option("--out", fu.out, "Fused output path")
      ->capture_default_str();
  fuse->add_option("--class", fu.classes,
                   "Class whitelist entry (repeatable; default car)");
  fuse->add_option("--fusion-iou", fu.fusion_iou,
                   "IoU above which a later box is a duplicate")
      ->capture_default_str();
  fuse->add_option("--jobs", fu.jobs, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fuse->add_option("--max-failure-fraction", fu.max_failure_fraction,
                   "Tolerated share of failed frames")
      ->capture_default_str();
  add_plan_flags(fuse, fuse_plan);
  fuse->callback([&] {
    fovea::PipelineConfig cfg;
    cfg.calibration = load_calibration(fu.config);
    cfg.frames = fovea::read_frame_log(fu.log);
    cfg.backend =
        std::make_shared<fovea::ReplayBackend>(fovea::read_replay(fu.replay));
    cfg.crop = to_crop_config(fuse_plan);
    cfg.class_whitelist = to_whitelist(fu.classes);
    cfg.fusion_iou = fu.fusion_iou;
    cfg.jobs = fu.jobs;
    cfg.max_failure_fraction = fu.max_failure_fraction;
    const fovea::PipelineResult result = fovea::run_pipeline(cfg);
    fovea::write_fused(fu.out, result.fused);
    std::cout << "wrote fused detections for " << result.fused.size()
              << " frames to " << fu.out << " (dropped "
              << result.duplicates_dropped << " duplicates)\n";
    check_failures(result, cfg.frames.size(), fu.max_failure_fraction);
  });

  // ---- eval ---------------------------------------------------------------
  auto* eval = app.add_subcommand(
      "eval", "Match fused detections against ground truth and compute AP");
  struct {
    std::string fused;
    std::string gt;
    std::string log;
    std::string out = "eval";
    double iou = 0.5;
  } ev;
  eval->add_option("--fused", ev.fused, "Fused detections path")->required();
  eval->add_option("--gt", ev.gt, "Ground truth JSON path");
  eval->add_option("--log", ev.log,
                   "Frame log path (ground truth source if --gt absent)");
  eval->add_option("--out", ev.out, "Output directory")
      ->capture_default_str();
  eval->add_option("--iou", ev.iou, "Matching IoU threshold")
      ->capture_default_str();
  eval->callback([&] {
    if (ev.gt.empty() && ev.log.empty())
      throw fovea::ConfigError("eval needs --gt or --log for ground truth");
    std::vector<fovea::GroundTruthBox> gts;
    if (!ev.gt.empty()) {
      gts = fovea::read_ground_truth(ev.gt);
    } else {
      for (const fovea::FrameRecord& f : fovea::read_frame_log(ev.log))
        for (const fovea::LabeledBox& b : f.gt)
          gts.push_back({f.frame_id, b.box, b.class_label});
    }
    std::vector<fovea::DetectionRecord> records;
    for (const fovea::FusedFrame& f : fovea::read_fused(ev.fused))
      for (const fovea::Detection& d : f.detections)
        records.push_back({f.frame_id, d});
    const fovea::APResult ap =
        fovea::evaluate_detections(records, gts, ev.iou);
    ensure_dir(ev.out);
    fovea::detail::write_text_file((fs::path(ev.out) / "ap.json").string(),
                                   ap_result_to_json_text(ap, ap.n_gt > 0));
    fovea::write_pr_csv((fs::path(ev.out) / "pr.csv").string(), ap.curve);
    std::cout << "ap " << ap.ap << " (tp " << ap.tp << ", fp " << ap.fp
              << ", gt " << ap.n_gt << ") -> " << ev.out << "\n";
  });

  // ---- pipeline -----------------------------------------------------------
  auto* pipeline = app.add_subcommand(
      "pipeline", "Plan, detect, fuse, and evaluate in one pass");
  struct {
    std::string log;
    std::string config;
    std::string out = "run";
    std::vector<std::string> classes;
    double fusion_iou = 0.5;
    double eval_iou = 0.5;
    int input_side = 608;
    int jobs = 1;
    double max_failure_fraction = 0.0;
  } pi;
  BackendFlags pipe_backend;
  PlanFlags pipe_plan;
  pipeline->add_option("--log", pi.log, "Frame log path")->required();
  pipeline->add_option("--config", pi.config, "Calibration JSON path");
  pipeline->add_option("--out", pi.out, "Output directory")
      ->capture_default_str();
  pipeline->add_option("--class", pi.classes,
                       "Class whitelist entry (repeatable; default car)");
  pipeline->add_option("--fusion-iou", pi.fusion_iou,
                       "Duplicate-suppression IoU threshold")
      ->capture_default_str();
  pipeline->add_option("--eval-iou", pi.eval_iou,
                       "Ground-truth matching IoU threshold")
      ->capture_default_str();
  pipeline->add_option("--input-side", pi.input_side,
                       "Detector input side, pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pipeline->add_option("--jobs", pi.jobs, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pipeline->add_option("--max-failure-fraction", pi.max_failure_fraction,
                       "Tolerated share of failed frames")
      ->capture_default_str();
  add_backend_flags(pipeline, pipe_backend);
  add_plan_flags(pipeline, pipe_plan);
  pipeline->callback([&] {
    fovea::PipelineConfig cfg;
    cfg.calibration = load_calibration(pi.config);
    cfg.frames = fovea::read_frame_log(pi.log);
    cfg.backend = make_backend(pipe_backend);
    cfg.crop = to_crop_config(pipe_plan);
    cfg.class_whitelist = to_whitelist(pi.classes);
    cfg.fusion_iou = pi.fusion_iou;
    cfg.eval_iou = pi.eval_iou;
    cfg.input_side = pi.input_side;
    cfg.jobs = pi.jobs;
    cfg.max_failure_fraction = pi.max_failure_fraction;
    const fovea::PipelineResult result = fovea::run_pipeline(cfg);
    ensure_dir(pi.out);
    fovea::write_fused((fs::path(pi.out) / "fused.json").string(),
                       result.fused);
    fovea::detail::write_text_file(
        (fs::path(pi.out) / "ap.json").string(),
        ap_result_to_json_text(result.ap, result.ap_defined));
    fovea::write_pr_csv((fs::path(pi.out) / "pr.csv").string(),
                        result.ap.curve);
    std::cout << "ap " << result.ap.ap << " (tp " << result.ap.tp << ", fp "
              << result.ap.fp << ", gt " << result.ap.n_gt << ", dropped "
              << result.duplicates_dropped << " duplicates) -> " << pi.out
              << "\n";
    check_failures(result, cfg.frames.size(), pi.max_failure_fraction);
  });

  // ---- sweep --------------------------------------------------------------
  auto* sweep = app.add_subcommand(
      "sweep", "Run the pipeline at several crop counts and tabulate AP");
  struct {
    std::string log;
    std::string config;
    std::string out = "sweep";
    std::vector<int> counts = {0, 1, 2, 3, 4, 5};
    std::vector<std::string> classes;
    double fusion_iou = 0.5;
    double eval_iou = 0.5;
    int input_side = 608;
    int jobs = 1;
    double max_failure_fraction = 0.0;
  } sw;
  BackendFlags sweep_backend;
  PlanFlags sweep_plan;
  sweep->add_option("--log", sw.log, "Frame log path")->required();
  sweep->add_option("--config", sw.config, "Calibration JSON path");
  sweep->add_option("--out", sw.out, "Output directory")
      ->capture_default_str();
  sweep->add_option("--counts", sw.counts, "Crop counts to sweep")
      ->capture_default_str();
  sweep->add_option("--class", sw.classes,
                    "Class whitelist entry (repeatable; default car)");
  sweep->add_option("--fusion-iou", sw.fusion_iou,
                    "Duplicate-suppression IoU threshold")
      ->capture_default_str();
  sweep->add_option("--eval-iou", sw.eval_iou,
                    "Ground-truth matching IoU threshold")
      ->capture_default_str();
  sweep->add_option("--input-side", sw.input_side,
                    "Detector input side, pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep->add_option("--jobs", sw.jobs, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep->add_option("--max-failure-fraction", sw.max_failure_fraction,
                    "Tolerated share of failed frames")
      ->capture_default_str();
  add_backend_flags(sweep, sweep_backend);
  add_plan_flags(sweep, sweep_plan);
  sweep->callback([&] {
    fovea::PipelineConfig cfg;
    cfg.calibration = load_calibration(sw.config);
    cfg.frames = fovea::read_frame_log(sw.log);
    cfg.backend = make_backend(sweep_backend);
    cfg.crop = to_crop_config(sweep_plan);
    cfg.class_whitelist = to_whitelist(sw.classes);
    cfg.fusion_iou = sw.fusion_iou;
    cfg.eval_iou = sw.eval_iou;
    cfg.input_side = sw.input_side;
    cfg.jobs = sw.jobs;
    cfg.max_failure_fraction = sw.max_failure_fraction;
    const fovea::SweepReport report = fovea::sweep_crops(cfg, sw.counts);
    ensure_dir(sw.out);
    fovea::detail::write_text_file(
        (fs::path(sw.out) / "sweep.json").string(),
        fovea::sweep_report_to_json_text(report));
    for (std::size_t i = 0; i < report.rows.size(); ++i)
      fovea::write_pr_csv(
          (fs::path(sw.out) / ("pr_crops_" +
                               std::to_string(report.rows[i].crops) + ".csv"))
              .string(),
          report.curves[i]);
    std::cout << fovea::render_sweep_table(report);
    int failed = 0;
    for (const fovea::SweepRow& r : report.rows) failed += r.failed_frames;
    if (!cfg.frames.empty() && !report.rows.empty()) {
      const double fraction =
          static_cast<double>(failed) /
          (cfg.frames.size() * report.rows.size());
      if (fraction > sw.max_failure_fraction)
        throw TooManyFrameFailures(std::to_string(failed) +
                                   " frame runs failed");
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // normalize usage errors to the config-error code
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const TooManyFrameFailures& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
