#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "focalkit/camera.hpp"
#include "focalkit/numerics/plane.hpp"

namespace focalkit {

// Interleaved 8-bit RGB image.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int height, int width, std::uint8_t fill = 0);
  RgbImage(int height, int width, std::vector<std::uint8_t> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::uint8_t operator()(int v, int u, int c) const noexcept { return data_[index(v, u, c)]; }
  std::uint8_t& operator()(int v, int u, int c) noexcept { return data_[index(v, u, c)]; }
  const std::vector<std::uint8_t>& bytes() const noexcept { return data_; }

  // Channel c as a plane scaled to [0, 1].
  Plane2D channel(int c) const;

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t index(int v, int u, int c) const noexcept {
    return (static_cast<std::size_t>(v) * width_ + u) * 3 + c;
  }
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

enum class AugmentationMode { kOriginal, kFocalChange, kDepthRescale };

// Provenance of a sample: which augmentation produced it, with which k.
struct AugmentationTag {
  AugmentationMode mode = AugmentationMode::kOriginal;
  double k = 1.0;

  static AugmentationTag original() { return {}; }
  static AugmentationTag focal_change(double k) { return {AugmentationMode::kFocalChange, k}; }
  static AugmentationTag depth_rescale(double k) { return {AugmentationMode::kDepthRescale, k}; }

  // "original", "focal_change(0.8)", "depth_rescale(0.75)"; k printed so it round-trips.
  std::string to_string() const;
  static AugmentationTag parse(const std::string& text);

  friend bool operator==(const AugmentationTag&, const AugmentationTag&) = default;
};

const char* mode_name(AugmentationMode mode) noexcept;

struct RgbdSample {
  RgbImage rgb;
  Plane2D depth;       // meters, along the optical axis
  Plane2D valid_mask;  // 1 where depth is valid, else 0
  CameraIntrinsics intrinsics;
  std::string source_id;
  AugmentationTag augmentation;

  int height() const noexcept { return depth.height(); }
  int width() const noexcept { return depth.width(); }

  // Shapes agree, mask is {0,1}, depth > 0 wherever the mask is set.
  void validate() const;
};

struct ManifestRecord {
  std::string rgb_path;
  std::string depth_path;
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double depth_scale = 1000.0;  // raw units per meter
  std::string source_id;
  AugmentationTag augmentation;

  CameraIntrinsics intrinsics() const { return {fx, fy, cx, cy}; }
  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

// JSON Lines manifest. Paths in records resolve relative to base_dir, the
// directory holding the manifest file.
struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestRecord> records;

  std::filesystem::path resolve(const std::string& p) const;
};

inline constexpr double kDefaultDepthScale = 1000.0;

// Parses one record; unknown fields are ignored.
ManifestRecord parse_manifest_line(const std::string& line);
std::string format_manifest_line(const ManifestRecord& record);

// Order-preserving; rejects duplicate source_id values and non-positive depth_scale.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

// depth = raw / depth_scale, valid where raw > 0. Throws MissingFileError,
// DimensionError (rgb vs depth size) or BitDepthError as appropriate.
RgbdSample load_sample(const ManifestRecord& record, const std::filesystem::path& base_dir);

struct WrittenSample {
  ManifestRecord record;
  std::size_t clamped_pixels = 0;  // valid depths outside [1, 65535] raw units
};

// Writes <id>_rgb.png (8-bit RGB) and <id>_depth.png (16-bit gray) into dir.
// Record paths are relative to dir.
WrittenSample write_sample(const RgbdSample& sample, const std::filesystem::path& dir,
                           double depth_scale = kDefaultDepthScale);

// File-name-safe form of a source id.
std::string sanitize_id(const std::string& id);

}  // namespace focalkit
