#include "pressem/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "pressem/capture.hpp"
#include "pressem/rng.hpp"
#include "pressem/trajectory.hpp"

namespace pressem {

namespace {

double bump(double d, double at, double width) {
  const double z = (d - at) / width;
  return std::exp(-z * z);
}

double bottom_out(double d, double travel) {
  const double start = travel - 0.6;
  if (d <= start) return 0.0;
  const double z = (d - start) / 0.6;
  return z * z;
}

std::vector<double> click_waveform() {
  // 30 ms decaying 220 Hz ring at 8 kHz.
  std::vector<double> w(240);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double t = static_cast<double>(i) / 8000.0;
    w[i] = std::exp(-t / 0.006) * std::cos(2.0 * 3.14159265358979323846 * 220.0 * t);
  }
  return w;
}

}  // namespace

std::vector<VelocityBin> tactile_bins() { return {{0.0, 30.0, 15.0}, {30.0, 70.0, 50.0}, {70.0, 150.0, 100.0}}; }

FDVVModel tactile_model(double travel_mm) {
  const DisplacementGrid grid{travel_mm, kDefaultGridStepMm};
  const auto bins = tactile_bins();
  const double scale = travel_mm / 4.0;
  auto m = make_model("tactile", grid, bins, [&](Direction dir, std::size_t b, double d) {
    const double v = bins[b].center_mm_s;
    const double base = 28.0 + 9.0 * d;
    const double click = 30.0 * (1.0 + 0.004 * v) * bump(d, 1.2 * scale, 0.35 * scale) -
                         10.0 * bump(d, 2.1 * scale, 0.4 * scale);
    const double floor = 70.0 * bottom_out(d, travel_mm);
    if (dir == Direction::press) return base + click + floor + 0.12 * v;
    return 0.7 * base + 0.4 * click + 0.8 * floor - 0.06 * v;
  });
  m.vibrations.push_back({1.4 * scale, Direction::press, 8000.0, click_waveform()});
  return m;
}

FDVVModel linear_model(double travel_mm) {
  const auto bins = tactile_bins();
  return make_model("linear", DisplacementGrid{travel_mm, kDefaultGridStepMm}, bins,
                    [&](Direction dir, std::size_t b, double d) {
                      const double v = bins[b].center_mm_s;
                      const double f = 30.0 + 12.0 * d + 60.0 * bottom_out(d, travel_mm);
                      return dir == Direction::press ? f + 0.1 * v : 0.75 * f - 0.05 * v;
                    });
}

FDVVModel captured_tactile_model(std::uint64_t seed) {
  const auto source = tactile_model();
  std::vector<PressTrace> traces;
  std::uint64_t k = 0;
  for (const auto& bin : source.bins) {
    // Each bin is represented by strokes peaking near its center.
    for (double f : {0.9, 1.0, 1.1}) {
      for (int rep = 0; rep < 2; ++rep) {
        StrokeSpec s;
        s.travel_mm = source.grid.travel_mm;
        s.peak_velocity_mm_s = bin.center_mm_s * f;
        s.dwell_ms = 60.0;
        const auto traj = generate_trajectory(s, 1000.0);
        traces.push_back(synth_trace_from_model(source, traj, 0.5, derive_seed(seed, {k++})));
        traces.back().source = "fixture-" + std::to_string(k);
      }
    }
  }
  CaptureConfig cfg;
  cfg.bins = source.bins;
  cfg.grid = source.grid;
  cfg.model_name = "tactile-captured";
  return fit_model(traces, cfg);
}

FDVVModel fd_baseline(const FDVVModel& model) {
  FDVVModel fd;
  fd.name = model.name + "-fd";
  fd.grid = model.grid;
  fd.bins = {{0.0, model.bins.back().hi_mm_s, model.bins.front().center_mm_s}};
  for (Direction dir : kDirections) fd.curves.emplace(CurveKey{dir, 0}, model.curve(dir, 0));
  return fd;
}

std::vector<NamedPlant> plant_catalogue() {
  return {{"default", default_fixture_plant()}, {"ideal", static_linear_plant(300.0)}};
}

}  // namespace pressem
