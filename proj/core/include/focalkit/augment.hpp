#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "focalkit/dataset_io.hpp"

namespace focalkit {

// Axis-aligned crop window in source pixel indices.
struct CropWindow {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

// round(k*m) x round(k*n) window centered on the principal point (snapped to
// the pixel grid, kept inside the image). Throws ArgumentError for k outside
// (0, 1] or an empty window.
CropWindow center_crop_window(int height, int width, const CameraIntrinsics& cam, double k);

// Ratio actually realised by the rounded crop, crop_h / m. Geometry uses
// this rather than the nominal k so intrinsics stay exact under rounding.
double realized_k(const CropWindow& window, int height);

// Crops rgb, depth and mask identically; shifts the principal point by the
// crop offset and leaves fx, fy unchanged.
RgbdSample center_crop(const RgbdSample& sample, double k);

enum class RgbInterpolation { kNearest, kBilinear };

// Center crop by k, nearest-neighbour upsample back to m x n, depth values
// untouched. The result is the scene as seen by a camera with focal f / k.
RgbdSample augment_focal_change(const RgbdSample& sample, double k,
                                RgbInterpolation rgb_interp = RgbInterpolation::kNearest);

// Center crop by k, nearest-neighbour upsample, depth multiplied by k. The
// result is a k-times smaller scene seen with the original focal f.
RgbdSample augment_depth_rescale(const RgbdSample& sample, double k,
                                 RgbInterpolation rgb_interp = RgbInterpolation::kNearest);

struct AugmentationRecipe {
  double k = 1.0;
  AugmentationMode mode = AugmentationMode::kFocalChange;
  std::uint64_t seed = 0;
};

RgbdSample apply_recipe(const RgbdSample& sample, const AugmentationRecipe& recipe,
                        RgbInterpolation rgb_interp = RgbInterpolation::kNearest);

struct MixPolicy {
  double focal_change_fraction = 0.6;
  double depth_rescale_fraction = 0.4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct KRange {
  double min = 0.7;
  double max = 1.0;

  void validate() const;
};

// Stratified, seed-determined mode assignment: exactly round(n * fc_fraction)
// entries are FocalChange, the rest DepthRescale, in a seeded shuffled order.
std::vector<AugmentationMode> assign_modes(std::size_t n, const MixPolicy& policy);

// Per-record recipe; record index selects an independent random stream so
// results do not depend on processing order.
std::vector<AugmentationRecipe> plan_recipes(std::size_t n, const MixPolicy& policy, const KRange& k_range);

struct AugmentOptions {
  MixPolicy policy;
  KRange k_range;
  bool keep_original = false;
  RgbInterpolation rgb_interp = RgbInterpolation::kNearest;
  int jobs = 1;
};

struct AugmentFailure {
  std::string source_id;
  std::string message;
};

struct AugmentReport {
  Manifest manifest;  // successfully written records, input order
  std::vector<AugmentFailure> failures;
  std::size_t clamped_pixels = 0;
  std::size_t focal_change_count = 0;
  std::size_t depth_rescale_count = 0;
};

// Augments every record and writes samples plus manifest.jsonl into out_dir.
// Per-sample errors are collected in the report; the batch continues.
AugmentReport augment_dataset(const Manifest& manifest, const AugmentOptions& options,
                              const std::filesystem::path& out_dir);

}  // namespace focalkit
