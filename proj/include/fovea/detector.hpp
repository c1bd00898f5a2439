#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fovea/box.hpp"
#include "fovea/crop_planner.hpp"
#include "fovea/frame.hpp"

namespace fovea {

struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutOfCropError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One detection. Backends emit region-local coordinates; after
/// to_full_image the box is in full-image pixels and source records
/// where it came from (0 = whole image, j >= 1 = crop j).
struct Detection {
  std::string class_label;
  double score = 0.0;
  Box2D box;
  int source = 0;
};

/// Aspect-preserving resize of a region onto the detector's square
/// input, with symmetric padding. Records enough to map points both ways.
struct ResizeMeta {
  double scale = 1.0;
  double pad_u = 0.0;
  double pad_v = 0.0;

  PixelPoint to_input(const PixelPoint& region_local) const {
    return {region_local.u * scale + pad_u, region_local.v * scale + pad_v};
  }
  PixelPoint to_region(const PixelPoint& input) const {
    return {(input.u - pad_u) / scale, (input.v - pad_v) / scale};
  }
};

inline ResizeMeta letterbox(int region_w, int region_h, int input_side) {
  if (region_w < 1 || region_h < 1 || input_side < 1)
    throw std::invalid_argument("letterbox dimensions must be >= 1");
  const double scale =
      std::min(static_cast<double>(input_side) / region_w,
               static_cast<double>(input_side) / region_h);
  return {scale, (input_side - region_w * scale) / 2.0,
          (input_side - region_h * scale) / 2.0};
}

/// One detection request: a region of a frame plus the detector input
/// resolution the region would be resized to.
struct DetectorInput {
  const FrameRecord* frame = nullptr;
  CropSpec region;
  int input_side = 608;
};

/// Uniform backend contract. detect() returns detections with boxes in
/// region-local coordinates (relative to the region before resize).
class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual std::vector<Detection> detect(const DetectorInput& input) const = 0;
  /// Whether detect() may be called from several threads at once.
  virtual bool concurrency_safe() const = 0;
  virtual std::string name() const = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

}  // namespace detail

struct SyntheticConfig {
  double min_box_height_px = 20.0;  // detectability threshold after resize
  double noise_sigma_px = 1.5;      // corner jitter; 0 disables all noise
  std::uint64_t seed = 0;
};

/// Geometry-driven stand-in for a real detector. A ground-truth box is
/// reported iff at least half of its area lies inside the region and its
/// letterboxed height clears min_box_height_px. The emitted box is the
/// ground-truth box intersected with the region, in local coordinates.
/// With noise_sigma_px = 0 the output is exact; otherwise corners are
/// jittered by N(0, sigma) and the score by N(0, sigma / 30), all drawn
/// from an RNG seeded by (seed, frame_id, source).
class SyntheticBackend : public DetectorBackend {
 public:
  explicit SyntheticBackend(SyntheticConfig cfg) : cfg_(cfg) {
    if (!(cfg.min_box_height_px > 0.0))
      throw std::invalid_argument("min box height must be > 0");
    if (cfg.noise_sigma_px < 0.0)
      throw std::invalid_argument("noise sigma must be >= 0");
  }

  std::vector<Detection> detect(const DetectorInput& input) const override {
    if (input.frame == nullptr) throw BackendError("detector input has no frame");
    const CropSpec& region = input.region;
    const Box2D region_rect = region.rect();
    const ResizeMeta meta = letterbox(region.w, region.h, input.input_side);

    std::mt19937_64 rng(detail::mix_seed(
        cfg_.seed, static_cast<std::uint64_t>(input.frame->frame_id),
        static_cast<std::uint64_t>(region.j)));
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Detection> out;
    for (const LabeledBox& gt : input.frame->gt) {
      const auto inter = intersect(gt.box, region_rect);
      if (!inter) continue;
      if (inter->area() < 0.5 * gt.box.area()) continue;
      Box2D local{inter->x - region.u, inter->y - region.v, inter->w,
                  inter->h};
      const double resized_height = local.h * meta.scale;
      if (resized_height < cfg_.min_box_height_px) continue;

      double score =
          std::min(1.0, resized_height / (3.0 * cfg_.min_box_height_px));
      if (cfg_.noise_sigma_px > 0.0) {
        score = std::clamp(
            score + gauss(rng) * cfg_.noise_sigma_px / 30.0, 0.0, 1.0);
        double x0 = local.x + gauss(rng) * cfg_.noise_sigma_px;
        double y0 = local.y + gauss(rng) * cfg_.noise_sigma_px;
        double x1 = local.right() + gauss(rng) * cfg_.noise_sigma_px;
        double y1 = local.bottom() + gauss(rng) * cfg_.noise_sigma_px;
        x0 = std::clamp(x0, 0.0, static_cast<double>(region.w));
        y0 = std::clamp(y0, 0.0, static_cast<double>(region.h));
        x1 = std::clamp(x1, 0.0, static_cast<double>(region.w));
        y1 = std::clamp(y1, 0.0, static_cast<double>(region.h));
        if (x1 <= x0 || y1 <= y0) continue;
        local = {x0, y0, x1 - x0, y1 - y0};
      }
      out.push_back({gt.class_label, score, local, region.j});
    }
    return out;
  }

  bool concurrency_safe() const override { return true; }
  std::string name() const override { return "synthetic"; }

 private:
  SyntheticConfig cfg_;
};

/// Recorded detections keyed by (frame_id, source), region-local.
struct ReplayStore {
  std::map<std::pair<std::int64_t, int>, std::vector<Detection>> entries;
};

/// Replays a recorded detection set. Unknown (frame, source) pairs are
/// empty, matching a detector that saw nothing there.
class ReplayBackend : public DetectorBackend {
 public:
  explicit ReplayBackend(ReplayStore store) : store_(std::move(store)) {}

  std::vector<Detection> detect(const DetectorInput& input) const override {
    if (input.frame == nullptr) throw BackendError("detector input has no frame");
    const auto it =
        store_.entries.find({input.frame->frame_id, input.region.j});
    if (it == store_.entries.end()) return {};
    std::vector<Detection> out = it->second;
    for (Detection& d : out) d.source = input.region.j;
    return out;
  }

  bool concurrency_safe() const override { return true; }
  std::string name() const override { return "replay"; }

 private:
  ReplayStore store_;
};

/// Translates a region-local detection into full-image coordinates.
inline Detection to_full_image(const Detection& local, const CropSpec& crop) {
  constexpr double tol = 1e-9;
  if (local.box.x < -tol || local.box.y < -tol ||
      local.box.right() > crop.w + tol || local.box.bottom() > crop.h + tol)
    throw OutOfCropError("detection box lies outside its crop");
  Detection d = local;
  d.box.x += crop.u;
  d.box.y += crop.v;
  d.source = crop.j;
  return d;
}

/// Inverse of to_full_image.
inline Detection to_local(const Detection& full, const CropSpec& crop) {
  constexpr double tol = 1e-9;
  const Box2D r = crop.rect();
  if (full.box.x < r.x - tol || full.box.y < r.y - tol ||
      full.box.right() > r.right() + tol || full.box.bottom() > r.bottom() + tol)
    throw OutOfCropError("detection box lies outside the crop");
  Detection d = full;
  d.box.x -= crop.u;
  d.box.y -= crop.v;
  return d;
}

/// Order-preserving class whitelist filter.
inline std::vector<Detection> class_filter(
    const std::vector<Detection>& detections,
    const std::set<std::string>& whitelist = {"car"}) {
  std::vector<Detection> out;
  for (const Detection& d : detections)
    if (whitelist.count(d.class_label)) out.push_back(d);
  return out;
}

}  // namespace fovea
