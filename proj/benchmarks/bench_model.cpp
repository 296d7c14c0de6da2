#include <benchmark/benchmark.h>

#include "focalkit/focal_net/model.hpp"
#include "focalkit/focal_net/trainer.hpp"
#include "focalkit/synth.hpp"

using namespace focalkit;

namespace {

net::TrainExample example(const net::ModelConfig& cfg) {
  return net::make_example(synth::make_dataset(1, 52.0, 3, synth::SceneConfig{}, "m")[0], cfg);
}

void BM_Forward(benchmark::State& state) {
  net::ModelConfig cfg;
  const auto params = net::init_parameters(cfg, 1);
  const auto ex = example(cfg);
  for (auto _ : state) {
    ad::Tape t;
    const auto vars = net::bind_parameters(t, params, [](const std::string&) { return false; });
    benchmark::DoNotOptimize(net::model_forward(t, vars, cfg, ex.inputs, ex.focal).head.depth);
  }
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMicrosecond);

void BM_ForwardBackward(benchmark::State& state) {
  net::ModelConfig cfg;
  const auto params = net::init_parameters(cfg, 1);
  const auto ex = example(cfg);
  const auto all = [](const std::string&) { return true; };
  for (auto _ : state) benchmark::DoNotOptimize(net::loss_and_grad(ex, params, cfg, {}, all));
}
BENCHMARK(BM_ForwardBackward)->Unit(benchmark::kMicrosecond);

void BM_FocalPyramid(benchmark::State& state) {
  const auto m = net::FocalEncodingMatrix::random(1, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(net::make_focal_pyramid(520.0, m, 480, 640));
}
BENCHMARK(BM_FocalPyramid)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
