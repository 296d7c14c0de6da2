#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "focalkit/camera.hpp"
#include "focalkit/dataset_io.hpp"
#include "focalkit/numerics/random.hpp"

namespace focalkit::synth {

// A fronto-parallel textured rectangle at depth z. Unbounded when
// `bounded` is false (the back wall).
struct Plane {
  double z = 1.0;
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
  bool bounded = true;
  // Sinusoidal grating in world units.
  double period = 0.5;  // m
  double orientation = 0.0;  // rad
  double phase = 0.0;  // rad
  double amplitude = 0.35;
  double tint[3] = {0.0, 0.0, 0.0};

  bool contains(double x, double y) const noexcept {
    return !bounded || (x >= x0 && x < x1 && y >= y0 && y < y1);
  }
  double luminance(double x, double y) const noexcept;
};

struct Scene {
  std::vector<Plane> planes;  // the first is the back wall
};

struct SceneConfig {
  int height = 48;
  int width = 64;
  double wall_z_min = 2.5;
  double wall_z_max = 7.0;
  double panel_z_min = 1.0;
  int max_panels = 2;
  double texture_period = 0.5;
  double amplitude = 0.35;
  double tint = 0.05;

  void validate() const;
};

// Panels are placed in image space for the given focal, so their image
// footprint does not depend on f; texture period is fixed in world units.
Scene random_scene(Rng& rng, const SceneConfig& cfg, const CameraIntrinsics& cam);

// Point-sampled pinhole rendering at pixel centers. Depth is the z of the
// nearest plane hit; every pixel is valid.
RgbdSample render(const Scene& scene, const CameraIntrinsics& cam, int height, int width, std::string source_id);

// Centered camera with fx = fy = f.
CameraIntrinsics centered_camera(double f, int height, int width);

// n independent scenes rendered at focal f; scene i draws from stream i.
std::vector<RgbdSample> make_dataset(std::size_t n, double f, std::uint64_t seed, const SceneConfig& cfg,
                                     const std::string& id_prefix);

}  // namespace focalkit::synth
