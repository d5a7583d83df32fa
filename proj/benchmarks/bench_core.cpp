#include <benchmark/benchmark.h>

#include "ucspd/analysis.hpp"
#include "ucspd/response.hpp"
#include "ucspd/simulate.hpp"
#include "ucspd/timebin.hpp"

namespace {

ucspd::SampledWaveform pulse(std::size_t n) {
  const double dt = 1.0;
  const double t0 = -0.5 * static_cast<double>(n - 1) * dt;
  return ucspd::gaussian_waveform({240.0, 0.0, 1.0}, t0, dt, n);
}

ucspd::SampledWaveform resolution(double dt) {
  const ucspd::PulseSpec pump{200.0, 0.0, 1.0};
  const ucspd::CrystalSpec crystal{2.0, 204.3, "", {}, {}};
  return ucspd::resolution_function(
      pump, crystal, ucspd::Grid::centered(ucspd::resolution_half_span(pump, crystal), dt));
}

void BM_ConvolveDirect(benchmark::State& state) {
  const auto a = pulse(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ucspd::convolve_direct(a, a));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConvolveDirect)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_ConvolveTransform(benchmark::State& state) {
  const auto a = pulse(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ucspd::convolve_transform(a, a));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConvolveTransform)->RangeMultiplier(4)->Range(64, 65536)->Complexity();

void BM_ResolutionFunction(benchmark::State& state) {
  const double dt = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(resolution(dt));
}
BENCHMARK(BM_ResolutionFunction)->Arg(1)->Arg(4);

void BM_Deconvolve(benchmark::State& state) {
  const double dt = 10.0;
  const auto t = resolution(dt);
  const auto grid = ucspd::Grid{-1500.0, dt, 461};
  const auto s = ucspd::synthesize_waveform(ucspd::cascade(0.0, 0.0, 800.0), 240.0, grid);
  const auto measured = ucspd::convolve_same(s, t.area_normalized());
  const ucspd::DeconvolutionSettings settings{"richardson-lucy",
                                              static_cast<int>(state.range(0)), 1e-300};
  for (auto _ : state) benchmark::DoNotOptimize(ucspd::deconvolve(measured, t, settings));
}
BENCHMARK(BM_Deconvolve)->Arg(100)->Arg(500);

void BM_RunScan(benchmark::State& state) {
  ucspd::ScanConfig cfg;
  cfg.coordinates = ucspd::linear_coordinates(-1500.0, 1500.0, 0.1);
  cfg.seed = 1;
  const ucspd::OverlapKernel overlap(pulse(2001), resolution(1.0));
  const ucspd::RateParameters p{0.1, 0.0331, 76.3e6, 800.0};
  const auto rate = [&](double d) { return ucspd::expected_rate(overlap, d, p); };
  const unsigned threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ucspd::run_scan(cfg, rate, {threads}));
}
BENCHMARK(BM_RunScan)->Arg(1)->Arg(4)->UseRealTime();

void BM_FitErfGate(benchmark::State& state) {
  ucspd::ScanConfig cfg;
  cfg.coordinates = ucspd::linear_coordinates(-1500.0, 1500.0, 10.0);
  cfg.seed = 3;
  const ucspd::OverlapKernel overlap(pulse(2001), resolution(1.0));
  const auto scan = ucspd::run_scan(cfg, [&](double d) { return 1e5 * overlap(d) + 800.0; });
  for (auto _ : state) benchmark::DoNotOptimize(ucspd::fit_erf_gate(scan, 200.0, 240.0));
}
BENCHMARK(BM_FitErfGate);

}  // namespace

BENCHMARK_MAIN();
