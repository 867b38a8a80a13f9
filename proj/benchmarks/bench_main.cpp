#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "abf/dsp.hpp"
#include "abf/metrics.hpp"
#include "abf/pendulum.hpp"
#include "abf/session.hpp"
#include "abf/synth.hpp"

namespace {

std::vector<abf::SwayPoint> random_points(std::size_t n, double spread) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(0.0, spread);
  std::vector<abf::SwayPoint> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {0.02 * static_cast<double>(i), d(rng), d(rng)};
  return pts;
}

void BM_Classify(benchmark::State& state) {
  const auto pts = random_points(4096, 2.0);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(abf::classify(pts[i++ & 4095]));
  }
}
BENCHMARK(BM_Classify);

void BM_ControlStep(benchmark::State& state) {
  const auto pts = random_points(4096, 2.0);
  const abf::Baseline baseline{0.3, -0.2, 5.0, 250};
  const abf::RenderConfig render;
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& p = pts[i++ & 4095];
    benchmark::DoNotOptimize(abf::control_step(abf::RawSample{p.t, p.x, p.y}, baseline, true, render));
  }
}
BENCHMARK(BM_ControlStep);

void BM_RenderBlock(benchmark::State& state) {
  const abf::RenderConfig cfg;
  abf::Synth synth(cfg);
  const auto frames = static_cast<std::size_t>(state.range(0));
  abf::StereoBuffer buf;
  buf.resize(frames);
  const auto pts = random_points(64, 2.0);
  std::size_t i = 0;
  for (auto _ : state) {
    synth.set_params(abf::map_params(pts[i++ & 63], cfg));
    synth.render(buf.left, buf.right);
    benchmark::DoNotOptimize(buf.left.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frames));
}
BENCHMARK(BM_RenderBlock)->Arg(64)->Arg(256)->Arg(1024);

void BM_BandPassDesign(benchmark::State& state) {
  abf::dsp::BandPass filter;
  double f = 256.0;
  for (auto _ : state) {
    filter.design(f, f + 800.0, 48000.0);
    f = f > 4000.0 ? 256.0 : f * 1.01;
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_BandPassDesign);

void BM_TrialMetrics(benchmark::State& state) {
  const auto pts = random_points(3000, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(abf::trial_metrics(pts));
}
BENCHMARK(BM_TrialMetrics);

void BM_SimulateTrial(benchmark::State& state) {
  abf::SimConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(abf::run_virtual_subject(cfg, {abf::Eyes::Closed, abf::Surface::Foam}, true));
  }
}
BENCHMARK(BM_SimulateTrial);

}  // namespace

BENCHMARK_MAIN();
