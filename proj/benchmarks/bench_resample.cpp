#include <benchmark/benchmark.h>

#include "focalkit/augment.hpp"
#include "focalkit/numerics/random.hpp"
#include "focalkit/numerics/resample.hpp"
#include "focalkit/synth.hpp"

using namespace focalkit;

namespace {

Plane2D noise(int h, int w) {
  Rng rng(1);
  Plane2D p(h, w);
  for (double& v : p.data()) v = rng.uniform();
  return p;
}

void BM_ResampleNearest(benchmark::State& state) {
  const Plane2D src = noise(336, 448);
  for (auto _ : state) benchmark::DoNotOptimize(resample_nearest(src, 480, 640));
}
BENCHMARK(BM_ResampleNearest);

void BM_ResampleBilinear(benchmark::State& state) {
  const Plane2D src = noise(336, 448);
  for (auto _ : state) benchmark::DoNotOptimize(resample_bilinear(src, 480, 640));
}
BENCHMARK(BM_ResampleBilinear);

void BM_ResampleArea(benchmark::State& state) {
  const Plane2D src = noise(480, 640);
  for (auto _ : state) benchmark::DoNotOptimize(resample_area(src, 15, 20));
}
BENCHMARK(BM_ResampleArea);

void BM_FocalChange(benchmark::State& state) {
  synth::SceneConfig cfg;
  cfg.height = 480;
  cfg.width = 640;
  const RgbdSample s = synth::make_dataset(1, 520.0, 1, cfg, "b")[0];
  for (auto _ : state) benchmark::DoNotOptimize(augment_focal_change(s, 0.8));
}
BENCHMARK(BM_FocalChange)->Unit(benchmark::kMillisecond);

}  // namespace
