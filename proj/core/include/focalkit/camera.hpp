#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "focalkit/numerics/plane.hpp"

namespace focalkit {

// Pinhole intrinsics in pixels. Pixel (u, v) has its center at integer
// coordinates; (cx, cy) is the principal point in the same frame.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  // Throws ArgumentError unless fx, fy > 0 and, when bound to an image of
  // the given size, the principal point lies inside it.
  void validate() const;
  void validate(int height, int width) const;

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const WorldPoint&, const WorldPoint&) = default;
};

// Image-plane coordinates relative to the principal point.
struct PixelCoord {
  double x = 0.0;
  double y = 0.0;
};

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
};

// x_s = fx * x_w / z_w, y_s = fy * y_w / z_w. Throws BehindCameraError for z_w <= 0.
PixelCoord project(const WorldPoint& p, const CameraIntrinsics& cam);

// Inverse of project() for a known depth.
WorldPoint unproject(const PixelCoord& s, double depth, const CameraIntrinsics& cam);

// One point per pixel with mask != 0, in row-major order:
// x = (u - cx) z / fx, y = (v - cy) z / fy, z = depth(v, u).
std::vector<WorldPoint> backproject(const Plane2D& depth, const Plane2D& mask, const CameraIntrinsics& cam);

// ASCII PLY (format ascii 1.0). Colors, when given, must match the point count.
void export_ply(std::span<const WorldPoint> points, std::optional<std::span<const Rgb8>> colors,
                const std::filesystem::path& path);

// Median over corresponded points of |(x_b, y_b)| / |(x_a, y_a)|, the lateral
// stretch of cloud_b relative to cloud_a. Points with zero lateral extent in
// cloud_a are skipped; 1.0 when no point qualifies.
double deformation_ratio(std::span<const WorldPoint> cloud_a, std::span<const WorldPoint> cloud_b);

}  // namespace focalkit
