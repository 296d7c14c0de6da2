#include "focalkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "focalkit/error.hpp"

namespace focalkit::synth {

double Plane::luminance(double x, double y) const noexcept {
  const double s = x * std::cos(orientation) + y * std::sin(orientation);
  return 0.5 + amplitude * std::sin(2.0 * std::numbers::pi * s / period + phase);
}

void SceneConfig::validate() const {
  if (height < 1 || width < 1) throw ArgumentError("scene size must be positive");
  if (!(panel_z_min > 0.0 && panel_z_min < wall_z_min && wall_z_min <= wall_z_max)) {
    throw ArgumentError("scene depths must satisfy 0 < panel_z_min < wall_z_min <= wall_z_max");
  }
  if (max_panels < 0) throw ArgumentError("max_panels must be non-negative");
  if (!(texture_period > 0.0)) throw ArgumentError("texture_period must be positive");
  if (!(amplitude >= 0.0 && amplitude + tint <= 0.5)) throw ArgumentError("amplitude + tint must stay within 0.5");
}

namespace {

void texture(Rng& rng, const SceneConfig& cfg, Plane& p) {
  p.period = cfg.texture_period;
  p.amplitude = cfg.amplitude;
  p.orientation = rng.uniform(0.0, std::numbers::pi);
  p.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double a = rng.uniform(-cfg.tint, cfg.tint);
  const double b = rng.uniform(-cfg.tint, cfg.tint);
  p.tint[0] = a;
  p.tint[1] = b;
  p.tint[2] = -a - b;
}

}  // namespace

Scene random_scene(Rng& rng, const SceneConfig& cfg, const CameraIntrinsics& cam) {
  cfg.validate();
  Scene scene;
  Plane wall;
  wall.bounded = false;
  wall.z = rng.uniform(cfg.wall_z_min, cfg.wall_z_max);
  texture(rng, cfg, wall);
  scene.planes.push_back(wall);
  const int panels = static_cast<int>(rng.index(static_cast<std::uint64_t>(cfg.max_panels) + 1));
  for (int i = 0; i < panels; ++i) {
    Plane p;
    p.z = rng.uniform(cfg.panel_z_min, wall.z - 0.5 * (wall.z - cfg.panel_z_min));
    const double w = rng.uniform(0.2, 0.5) * cfg.width;
    const double h = rng.uniform(0.2, 0.5) * cfg.height;
    const double u0 = rng.uniform(-0.1 * cfg.width, cfg.width - 0.9 * w);
    const double v0 = rng.uniform(-0.1 * cfg.height, cfg.height - 0.9 * h);
    p.x0 = (u0 - cam.cx) * p.z / cam.fx;
    p.x1 = (u0 + w - cam.cx) * p.z / cam.fx;
    p.y0 = (v0 - cam.cy) * p.z / cam.fy;
    p.y1 = (v0 + h - cam.cy) * p.z / cam.fy;
    texture(rng, cfg, p);
    scene.planes.push_back(p);
  }
  return scene;
}

RgbdSample render(const Scene& scene, const CameraIntrinsics& cam, int height, int width, std::string source_id) {
  cam.validate(height, width);
  if (scene.planes.empty()) throw ArgumentError("scene has no planes");
  RgbdSample s;
  s.rgb = RgbImage(height, width);
  s.depth = Plane2D(height, width);
  s.valid_mask = Plane2D(height, width, 1.0);
  s.intrinsics = cam;
  s.source_id = std::move(source_id);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const double rx = (u - cam.cx) / cam.fx;
      const double ry = (v - cam.cy) / cam.fy;
      const Plane* hit = nullptr;
      for (const auto& p : scene.planes) {
        if (p.contains(rx * p.z, ry * p.z) && (hit == nullptr || p.z < hit->z)) hit = &p;
      }
      if (hit == nullptr) throw ArgumentError("scene leaves pixels uncovered; the first plane must be unbounded");
      const double lum = hit->luminance(rx * hit->z, ry * hit->z);
      for (int c = 0; c < 3; ++c) {
        const double value = std::clamp(lum + hit->tint[c], 0.0, 1.0);
        s.rgb(v, u, c) = static_cast<std::uint8_t>(std::lround(value * 255.0));
      }
      s.depth(v, u) = hit->z;
    }
  }
  return s;
}

CameraIntrinsics centered_camera(double f, int height, int width) {
  CameraIntrinsics cam{f, f, (width - 1) / 2.0, (height - 1) / 2.0};
  cam.validate();
  return cam;
}

std::vector<RgbdSample> make_dataset(std::size_t n, double f, std::uint64_t seed, const SceneConfig& cfg,
                                     const std::string& id_prefix) {
  const CameraIntrinsics cam = centered_camera(f, cfg.height, cfg.width);
  std::vector<RgbdSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, i));
    const Scene scene = random_scene(rng, cfg, cam);
    out.push_back(render(scene, cam, cfg.height, cfg.width, id_prefix + std::to_string(i)));
  }
  return out;
}

}  // namespace focalkit::synth
