#include "focalkit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <optional>
#include <thread>

#include "focalkit/error.hpp"
#include "focalkit/numerics/random.hpp"
#include "focalkit/numerics/resample.hpp"

namespace focalkit {

namespace fs = std::filesystem;

CropWindow center_crop_window(int height, int width, const CameraIntrinsics& cam, double k) {
  if (!(k > 0.0 && k <= 1.0)) throw ArgumentError("crop factor k must lie in (0, 1], got " + std::to_string(k));
  const long ch = std::lround(k * height);
  const long cw = std::lround(k * width);
  if (ch < 1 || cw < 1) {
    throw ArgumentError("crop factor k=" + std::to_string(k) + " yields an empty crop of a " +
                        std::to_string(height) + "x" + std::to_string(width) + " image");
  }
  const long top = std::lround(cam.cy - (ch - 1) / 2.0);
  const long left = std::lround(cam.cx - (cw - 1) / 2.0);
  CropWindow w;
  w.height = static_cast<int>(ch);
  w.width = static_cast<int>(cw);
  w.top = static_cast<int>(std::clamp<long>(top, 0, height - ch));
  w.left = static_cast<int>(std::clamp<long>(left, 0, width - cw));
  return w;
}

double realized_k(const CropWindow& window, int height) { return static_cast<double>(window.height) / height; }

namespace {

RgbdSample crop(const RgbdSample& s, const CropWindow& w) {
  RgbdSample out;
  out.rgb = RgbImage(w.height, w.width);
  out.depth = Plane2D(w.height, w.width);
  out.valid_mask = Plane2D(w.height, w.width);
  for (int v = 0; v < w.height; ++v) {
    for (int u = 0; u < w.width; ++u) {
      for (int c = 0; c < 3; ++c) out.rgb(v, u, c) = s.rgb(v + w.top, u + w.left, c);
      out.depth(v, u) = s.depth(v + w.top, u + w.left);
      out.valid_mask(v, u) = s.valid_mask(v + w.top, u + w.left);
    }
  }
  out.intrinsics = s.intrinsics;
  out.intrinsics.cx -= w.left;
  out.intrinsics.cy -= w.top;
  out.source_id = s.source_id;
  out.augmentation = s.augmentation;
  return out;
}

void check_sample(const RgbdSample& s) {
  if (s.rgb.height() != s.depth.height() || s.rgb.width() != s.depth.width() || !s.depth.same_shape(s.valid_mask)) {
    throw DimensionError("sample '" + s.source_id + "': rgb, depth and mask must share dimensions");
  }
  if (s.depth.empty()) throw DimensionError("sample '" + s.source_id + "' is empty");
}

// Crop by k, then resample back to the input size. Depth and mask always use
// nearest-neighbour; rgb optionally bilinear. fx/fy are scaled by the
// realised magnification when `rescale_focal` is set.
RgbdSample crop_and_upsample(const RgbdSample& s, double k, RgbInterpolation rgb_interp, bool rescale_focal) {
  check_sample(s);
  const int m = s.height();
  const int n = s.width();
  const CropWindow w = center_crop_window(m, n, s.intrinsics, k);
  if (w.height == m && w.width == n) return s;

  const RgbdSample c = crop(s, w);
  RgbdSample out;
  out.depth = resample_nearest(c.depth, m, n);
  out.valid_mask = resample_nearest(c.valid_mask, m, n);
  if (rgb_interp == RgbInterpolation::kNearest) {
    out.rgb = RgbImage(m, n);
    std::vector<int> rows(static_cast<std::size_t>(m));
    std::vector<int> cols(static_cast<std::size_t>(n));
    for (int i = 0; i < m; ++i) rows[i] = nearest_source_index(i, w.height, m);
    for (int j = 0; j < n; ++j) cols[j] = nearest_source_index(j, w.width, n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int ch = 0; ch < 3; ++ch) out.rgb(i, j, ch) = c.rgb(rows[i], cols[j], ch);
      }
    }
  } else {
    out.rgb = RgbImage(m, n);
    for (int ch = 0; ch < 3; ++ch) {
      Plane2D src(w.height, w.width);
      for (int v = 0; v < w.height; ++v) {
        for (int u = 0; u < w.width; ++u) src(v, u) = c.rgb(v, u, ch);
      }
      const Plane2D up = resample_bilinear(src, m, n);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          out.rgb(i, j, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(up(i, j)), 0L, 255L));
        }
      }
    }
  }

  const double sx = static_cast<double>(n) / w.width;
  const double sy = static_cast<double>(m) / w.height;
  out.intrinsics = c.intrinsics;
  // Pixel centers map as (x + 0.5) * s - 0.5 under the resampling convention.
  out.intrinsics.cx = (c.intrinsics.cx + 0.5) * sx - 0.5;
  out.intrinsics.cy = (c.intrinsics.cy + 0.5) * sy - 0.5;
  if (rescale_focal) {
    out.intrinsics.fx = c.intrinsics.fx * sx;
    out.intrinsics.fy = c.intrinsics.fy * sy;
  }
  out.source_id = s.source_id;
  return out;
}

}  // namespace

RgbdSample center_crop(const RgbdSample& sample, double k) {
  check_sample(sample);
  const CropWindow w = center_crop_window(sample.height(), sample.width(), sample.intrinsics, k);
  if (w.height == sample.height() && w.width == sample.width()) return sample;
  return crop(sample, w);
}

RgbdSample augment_focal_change(const RgbdSample& sample, double k, RgbInterpolation rgb_interp) {
  RgbdSample out = crop_and_upsample(sample, k, rgb_interp, true);
  out.augmentation = AugmentationTag::focal_change(k);
  return out;
}

RgbdSample augment_depth_rescale(const RgbdSample& sample, double k, RgbInterpolation rgb_interp) {
  RgbdSample out = crop_and_upsample(sample, k, rgb_interp, false);
  const CropWindow w = center_crop_window(sample.height(), sample.width(), sample.intrinsics, k);
  const double kk = realized_k(w, sample.height());
  if (kk != 1.0) out.depth *= kk;
  out.augmentation = AugmentationTag::depth_rescale(k);
  return out;
}

RgbdSample apply_recipe(const RgbdSample& sample, const AugmentationRecipe& recipe, RgbInterpolation rgb_interp) {
  switch (recipe.mode) {
    case AugmentationMode::kFocalChange: return augment_focal_change(sample, recipe.k, rgb_interp);
    case AugmentationMode::kDepthRescale: return augment_depth_rescale(sample, recipe.k, rgb_interp);
    case AugmentationMode::kOriginal: return sample;
  }
  return sample;
}

void MixPolicy::validate() const {
  if (focal_change_fraction < 0.0 || depth_rescale_fraction < 0.0) {
    throw ArgumentError("mix fractions must be non-negative");
  }
  if (std::abs(focal_change_fraction + depth_rescale_fraction - 1.0) > 1e-9) {
    throw ArgumentError("mix fractions must sum to 1");
  }
}

void KRange::validate() const {
  if (!(min > 0.0 && min <= max && max <= 1.0)) {
    throw ArgumentError("k range must satisfy 0 < k_min <= k_max <= 1");
  }
}

std::vector<AugmentationMode> assign_modes(std::size_t n, const MixPolicy& policy) {
  policy.validate();
  const auto n_fc = static_cast<std::size_t>(std::llround(static_cast<double>(n) * policy.focal_change_fraction));
  std::vector<AugmentationMode> modes(n, AugmentationMode::kDepthRescale);
  std::fill_n(modes.begin(), std::min(n_fc, n), AugmentationMode::kFocalChange);
  Rng rng(mix_seed(policy.seed, 0x6d6f6465ULL));
  rng.shuffle(modes);
  return modes;
}

std::vector<AugmentationRecipe> plan_recipes(std::size_t n, const MixPolicy& policy, const KRange& k_range) {
  k_range.validate();
  const auto modes = assign_modes(n, policy);
  std::vector<AugmentationRecipe> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seed = mix_seed(policy.seed, i + 1);
    Rng rng(seed);
    out[i].k = k_range.min == k_range.max ? k_range.min : rng.uniform(k_range.min, k_range.max);
    out[i].mode = modes[i];
    out[i].seed = seed;
  }
  return out;
}

AugmentReport augment_dataset(const Manifest& manifest, const AugmentOptions& options, const fs::path& out_dir) {
  options.policy.validate();
  options.k_range.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir.string(), "cannot create output directory: " + ec.message());

  const std::size_t n = manifest.records.size();
  const auto recipes = plan_recipes(n, options.policy, options.k_range);

  struct Slot {
    std::vector<ManifestRecord> records;
    std::size_t clamped = 0;
    std::optional<AugmentFailure> failure;
  };
  std::vector<Slot> slots(n);

  const auto work = [&](std::size_t i) {
    const ManifestRecord& rec = manifest.records[i];
    Slot& slot = slots[i];
    try {
      const RgbdSample src = load_sample(rec, manifest.base_dir);
      if (options.keep_original) {
        auto written = write_sample(src, out_dir, rec.depth_scale);
        slot.clamped += written.clamped_pixels;
        slot.records.push_back(std::move(written.record));
      }
      RgbdSample aug = apply_recipe(src, recipes[i], options.rgb_interp);
      if (options.keep_original) aug.source_id += "_aug";
      auto written = write_sample(aug, out_dir, rec.depth_scale);
      slot.clamped += written.clamped_pixels;
      slot.records.push_back(std::move(written.record));
    } catch (const Error& e) {
      slot.records.clear();
      slot.failure = AugmentFailure{rec.source_id, e.what()};
    }
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
    }
  }

  AugmentReport report;
  report.manifest.base_dir = out_dir;
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i].failure) {
      report.failures.push_back(*slots[i].failure);
      continue;
    }
    report.clamped_pixels += slots[i].clamped;
    for (auto& r : slots[i].records) {
      if (r.augmentation.mode == AugmentationMode::kFocalChange) ++report.focal_change_count;
      if (r.augmentation.mode == AugmentationMode::kDepthRescale) ++report.depth_rescale_count;
      report.manifest.records.push_back(std::move(r));
    }
  }
  write_manifest(report.manifest, out_dir / "manifest.jsonl");
  return report;
}

}  // namespace focalkit
