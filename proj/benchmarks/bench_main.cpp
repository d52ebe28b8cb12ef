#include <benchmark/benchmark.h>

#include "iadet/geometry.hpp"
#include "iadet/metrics.hpp"
#include "iadet/random.hpp"
#include "iadet/simulator.hpp"

namespace {

using namespace iadet;

Box random_box(DeterministicStream& rng) {
  const double x = rng.uniform(0, 400);
  const double y = rng.uniform(0, 300);
  return Box(x, y, x + rng.uniform(10, 100), y + rng.uniform(10, 75));
}

void BM_Iou(benchmark::State& state) {
  DeterministicStream rng(1);
  const Box a = random_box(rng);
  const Box b = random_box(rng);
  for (auto _ : state) benchmark::DoNotOptimize(iou(a, b));
}
BENCHMARK(BM_Iou);

void BM_Match(benchmark::State& state) {
  DeterministicStream rng(2);
  std::vector<ScoredBox> preds;
  std::vector<Box> gts;
  for (int i = 0; i < state.range(0); ++i) {
    preds.emplace_back(random_box(rng), rng.uniform());
    gts.push_back(random_box(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(match_detections(preds, gts));
}
BENCHMARK(BM_Match)->Arg(4)->Arg(16)->Arg(64);

void BM_AveragePrecision(benchmark::State& state) {
  DeterministicStream rng(3);
  std::vector<EvalSample> samples;
  for (int i = 0; i < state.range(0); ++i) {
    EvalSample s;
    s.image_id = "im" + std::to_string(i);
    for (int k = 0; k < 3; ++k) {
      s.ground_truths.push_back(random_box(rng));
      s.predictions.emplace_back(s.ground_truths.back().translated(rng.uniform(-5, 5), 0), rng.uniform());
      s.predictions.emplace_back(random_box(rng), rng.uniform());
    }
    samples.push_back(std::move(s));
  }
  for (auto _ : state) benchmark::DoNotOptimize(average_precision(samples));
}
BENCHMARK(BM_AveragePrecision)->Arg(100)->Arg(1000);

void BM_Simulate(benchmark::State& state) {
  SyntheticDatasetConfig dc;
  dc.images = static_cast<std::size_t>(state.range(0));
  const auto data = make_synthetic_dataset(dc);
  const SimulationConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(data, config).t_assisted);
}
BENCHMARK(BM_Simulate)->Arg(420)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
