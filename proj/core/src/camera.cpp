#include "focalkit/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

#include "focalkit/error.hpp"

namespace focalkit {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw ArgumentError("focal lengths must be positive and finite (fx=" + std::to_string(fx) +
                        ", fy=" + std::to_string(fy) + ")");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw ArgumentError("principal point must be finite");
}

void CameraIntrinsics::validate(int height, int width) const {
  validate();
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
    throw ArgumentError("principal point (" + std::to_string(cx) + ", " + std::to_string(cy) +
                        ") outside a " + std::to_string(height) + "x" + std::to_string(width) + " image");
  }
}

PixelCoord project(const WorldPoint& p, const CameraIntrinsics& cam) {
  if (!(p.z > 0.0)) throw BehindCameraError("cannot project point with z_w = " + std::to_string(p.z));
  return {cam.fx * p.x / p.z, cam.fy * p.y / p.z};
}

WorldPoint unproject(const PixelCoord& s, double depth, const CameraIntrinsics& cam) {
  return {s.x * depth / cam.fx, s.y * depth / cam.fy, depth};
}

std::vector<WorldPoint> backproject(const Plane2D& depth, const Plane2D& mask, const CameraIntrinsics& cam) {
  if (!depth.same_shape(mask)) throw DimensionError("backproject: depth and mask shapes differ");
  cam.validate();
  std::vector<WorldPoint> points;
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (mask(v, u) == 0.0) continue;
      const double z = depth(v, u);
      points.push_back({(u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z});
    }
  }
  return points;
}

void export_ply(std::span<const WorldPoint> points, std::optional<std::span<const Rgb8>> colors,
                const std::filesystem::path& path) {
  if (colors && colors->size() != points.size()) {
    throw ArgumentError("export_ply: " + std::to_string(colors->size()) + " colors for " +
                        std::to_string(points.size()) + " points");
  }
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << points[i].x << ' ' << points[i].y << ' ' << points[i].z;
    if (colors) {
      const Rgb8& c = (*colors)[i];
      out << ' ' << int{c.r} << ' ' << int{c.g} << ' ' << int{c.b};
    }
    out << '\n';
  }
  if (!out) throw IoError(path.string(), "write failed");
}

double deformation_ratio(std::span<const WorldPoint> cloud_a, std::span<const WorldPoint> cloud_b) {
  if (cloud_a.empty() || cloud_b.empty()) throw ArgumentError("deformation_ratio: empty point cloud");
  if (cloud_a.size() != cloud_b.size()) {
    throw ArgumentError("deformation_ratio: clouds have " + std::to_string(cloud_a.size()) + " and " +
                        std::to_string(cloud_b.size()) + " points");
  }
  std::vector<double> ratios;
  ratios.reserve(cloud_a.size());
  for (std::size_t i = 0; i < cloud_a.size(); ++i) {
    const double ra = std::hypot(cloud_a[i].x, cloud_a[i].y);
    if (ra == 0.0) continue;
    ratios.push_back(std::hypot(cloud_b[i].x, cloud_b[i].y) / ra);
  }
  if (ratios.empty()) return 1.0;
  const std::size_t mid = ratios.size() / 2;
  std::nth_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(mid), ratios.end());
  double median = ratios[mid];
  if (ratios.size() % 2 == 0) {
    const double below = *std::max_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + below);
  }
  return median;
}

}  // namespace focalkit
