#include <benchmark/benchmark.h>

#include "focalkit/metrics.hpp"
#include "focalkit/numerics/random.hpp"

using namespace focalkit;

namespace {

void BM_Evaluate(benchmark::State& state) {
  Rng rng(2);
  const int h = static_cast<int>(state.range(0));
  const int w = h * 4 / 3;
  Plane2D pred(h, w), gt(h, w);
  for (double& v : pred.data()) v = rng.uniform(0.5, 9.0);
  for (double& v : gt.data()) v = rng.uniform(0.5, 9.0);
  const Plane2D mask(h, w, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(pred, gt, mask));
  state.SetItemsProcessed(state.iterations() * h * w);
}
BENCHMARK(BM_Evaluate)->Arg(48)->Arg(480);

}  // namespace
