#include <benchmark/benchmark.h>

#include <cmath>

#include "pressem/capture.hpp"
#include "pressem/compensation.hpp"
#include "pressem/fixtures.hpp"
#include "pressem/renderer.hpp"
#include "pressem/trajectory.hpp"

using namespace pressem;

namespace {

void BM_LookupForce(benchmark::State& state) {
  const auto m = tactile_model();
  double d = 0.0, v = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lookup_force(m, d, v, Direction::press));
    d = std::fmod(d + 0.013, 4.0);
    v = v >= 140.0 ? 1.0 : v + 0.7;
  }
}
BENCHMARK(BM_LookupForce);

void BM_TableLookup(benchmark::State& state) {
  const auto m = tactile_model();
  const auto t = constant_table(m.grid, m.bins, 0.3);
  double d = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(t.lookup(d, 60.0, Direction::release));
    d = std::fmod(d + 0.013, 4.0);
  }
}
BENCHMARK(BM_TableLookup);

// One renderer tick; the budget at 1 kHz is 1 ms.
void BM_RendererTick(benchmark::State& state) {
  const auto m = tactile_model();
  Renderer r({}, constant_table(m.grid, m.bins, 0.3), m.vibrations);
  const auto script = generate_trajectory({4.0, 60.0, 50.0, 20.0}, 1000.0).displacement_mm;
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(r.tick(script[k]));
    k = (k + 1) % script.size();
  }
}
BENCHMARK(BM_RendererTick);

void BM_CompensateCaptured(benchmark::State& state) {
  const auto m = captured_tactile_model();
  CompensationConfig cfg;
  cfg.threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(compensate(default_fixture_plant(), m, cfg));
}
BENCHMARK(BM_CompensateCaptured)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_FitModel(benchmark::State& state) {
  const auto m = tactile_model();
  std::vector<PressTrace> traces;
  for (std::size_t b = 0; b < m.bins.size(); ++b) {
    const auto traj = generate_ramp_trajectory({4.0, m.bins[b].center_mm_s, 50.0, 20.0}, 10000.0);
    traces.push_back(synth_trace_from_model(m, traj, 1.0, b));
  }
  CaptureConfig cfg;
  cfg.bins = m.bins;
  cfg.grid = m.grid;
  for (auto _ : state) benchmark::DoNotOptimize(fit_model(traces, cfg));
}
BENCHMARK(BM_FitModel)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
