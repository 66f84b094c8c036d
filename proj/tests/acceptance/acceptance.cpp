// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fail.
// Usage: pressem_acceptance [path-to-pressem-cli]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "pressem/capture.hpp"
#include "pressem/compensation.hpp"
#include "pressem/fixtures.hpp"
#include "pressem/plant.hpp"
#include "pressem/renderer.hpp"
#include "pressem/rng.hpp"
#include "pressem/trajectory.hpp"
#include "process.hpp"
#include "test_support.hpp"

using namespace pressem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::size_t count(const std::vector<TickOutput>& ticks, EventKind kind, bool bursts_only = false,
                  bool profiles_only = false) {
  std::size_t n = 0;
  for (const auto& t : ticks) {
    for (const auto& e : t.events) {
      if (e.kind != kind) continue;
      if (bursts_only && e.tag != kBurstTag) continue;
      if (profiles_only && e.tag < 0) continue;
      ++n;
    }
  }
  return n;
}

std::vector<double> stroke(double travel, double peak, double dwell_ms) {
  return generate_trajectory({travel, peak, dwell_ms, 20.0}, 1000.0).displacement_mm;
}

Outcome compensation_convergence() {
  const auto reference = captured_tactile_model();
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = compensate(default_fixture_plant(), reference, CompensationConfig{});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = 0.0;
  for (const auto& b : res.report.bins) worst = std::max(worst, b.final_mean_abs_error_cN());
  const double mean = res.report.final_mean_abs_error_cN();
  const auto iters = res.report.max_iterations_used();
  return {mean <= 2.5 && iters <= 10 && secs < 10.0,
          fmt("mean %.3f cN (worst bin %.3f), %zu iterations max, %.2f s; limits 2.5 cN, 10 iterations, 10 s", mean,
              worst, iters, secs)};
}

Outcome analytic_inverse() {
  const double g = 300.0;
  const auto reference = tactile_model();
  CompensationConfig cfg;
  cfg.learning_rate = 1.0;
  cfg.nominal_gain_cN = g;
  cfg.smoothing_window = 1;
  const auto res = compensate(static_linear_plant(g), reference, cfg);
  const double q = 1.0 / max_code(cfg.quantization_bits);
  double worst = 0.0;
  const auto grid = reference.grid.points();
  for (const auto& [key, duty] : res.table.duties) {
    const double speed = reference.bins[key.bin].center_mm_s;
    for (std::size_t i = 0; i < duty.size(); ++i) {
      const double expected = lookup_force(reference, grid[i], speed, key.direction) / g;
      worst = std::max(worst, std::abs(duty[i] - expected));
    }
  }
  bool one = true;
  for (const auto& b : res.report.bins) one = one && b.iterations_used == 1 && b.converged;
  return {one && worst <= q, fmt("max |duty - ref/g| %.3g (step %.3g), exactly 1 iteration in every bin: %s", worst, q,
                                 one ? "yes" : "no")};
}

Outcome contraction_law() {
  const auto reference = make_model("affine", DisplacementGrid{4.0, 0.01}, {{0, 40, 20}, {40, 100, 60}},
                                    [](Direction dir, std::size_t b, double d) {
                                      return (dir == Direction::press ? 50.0 : 30.0) + 20.0 * d + 10.0 * b;
                                    });
  const double g = 300.0;
  double worst = 0.0;
  std::string per;
  for (double alpha : {0.25, 0.5, 1.0}) {
    CompensationConfig cfg;
    cfg.learning_rate = alpha;
    cfg.nominal_gain_cN = g;
    cfg.smoothing_window = 1;
    cfg.epsilon_cN = 1e-9;
    cfg.max_iterations = 6;
    const auto res = compensate(static_linear_plant(g), reference, cfg);
    const double rho = contraction_factor(g, g, alpha);
    double dev = 0.0;
    for (const auto& b : res.report.bins) {
      double prev = b.initial_mean_abs_error_cN;
      for (double e : b.mean_abs_error_cN) {
        if (prev < 1e-3) break;  // below this the ratio is rounding noise
        dev = std::max(dev, std::abs(e / prev - rho));
        prev = e;
      }
    }
    worst = std::max(worst, dev);
    per += fmt(" alpha %.2f: rho %.3f dev %.2g;", alpha, rho, dev);
  }
  return {worst <= 1e-6, "max ratio deviation" + fmt(" %.3g (limit 1e-6);", worst) + per};
}

Outcome capture_round_trip() {
  Rng rng(5);
  const auto m = make_model("three-bin", DisplacementGrid{4.0, 0.05}, tactile_bins(),
                            [&](Direction dir, std::size_t b, double d) {
                              return 20.0 + 10.0 * d + 5.0 * b + (dir == Direction::press ? 8.0 : 0.0) +
                                     4.0 * rng.uniform();
                            });
  CaptureConfig cfg;
  cfg.bins = m.bins;
  cfg.grid = m.grid;
  auto traces = [&](double noise, std::size_t reps) {
    std::vector<PressTrace> out;
    for (std::size_t r = 0; r < reps; ++r) {
      for (std::size_t b = 0; b < m.bins.size(); ++b) {
        const auto traj = generate_ramp_trajectory({m.grid.travel_mm, m.bins[b].center_mm_s, 50.0, 20.0}, 30000.0);
        out.push_back(synth_trace_from_model(m, traj, noise, derive_seed(77, {r, b})));
      }
    }
    return out;
  };
  auto diff = [&](const FDVVModel& fit, std::size_t skip) {
    double worst = 0.0;
    for (const auto& [key, curve] : m.curves) {
      const auto& got = fit.curves.at(key).force_cN;
      for (std::size_t i = skip; i + skip < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - curve.force_cN[i]));
    }
    return worst;
  };
  const double exact = diff(fit_model(traces(0.0, 1), cfg), 0);
  const double sigma = 2.0;
  const double bound = 3.0 * sigma / std::sqrt(20.0);
  const double noisy = diff(fit_model(traces(sigma, 20), cfg), 1);
  return {exact <= 1e-6 && noisy <= bound,
          fmt("noise-free max error %.3g cN (limit 1e-6); sigma 2, 20 presses/bin: interior max %.3f cN (limit %.3f)",
              exact, noisy, bound)};
}

Outcome fd_vs_fdvv() {
  const auto reference = tactile_model();
  const auto plant = default_fixture_plant();
  const auto fdvv = compensate(plant, reference, {});
  const auto fd = compensate(plant, fd_baseline(reference), {});
  auto err = [&](const ActuationTable& table, double peak) {
    Renderer r({}, table, reference.vibrations);
    const auto traj = generate_trajectory({4.0, peak, 100.0, 20.0}, 1000.0);
    return render_error(reference, traj, run_session(r, plant, traj).trace).mean_abs_cN;
  };
  bool ok = true;
  std::string detail;
  for (double peak : {3.0 * reference.bins.front().center_mm_s, 100.0}) {
    const double a = err(fd.table, peak), b = err(fdvv.table, peak);
    ok = ok && a > b;
    detail += fmt("peak %.0f mm/s: FD %.2f cN vs FDVV %.2f cN; ", peak, a, b);
  }
  return {ok, detail};
}

Outcome renderer_determinism() {
  const auto reference = tactile_model();
  const auto table = constant_table(reference.grid, reference.bins, 0.2);
  FingerTrajectory traj;
  traj.displacement_mm = stroke(4.0, 60.0, 500.0);
  traj.displacement_mm.resize(1000, 0.0);
  auto run = [&] {
    Renderer r({}, table, reference.vibrations);
    return run_session(r, default_fixture_plant(), traj);
  };
  const auto a = run();
  const auto b = run();
  bool indices = true;
  for (std::size_t k = 0; k < a.ticks.size(); ++k) indices = indices && a.ticks[k].tick == k;
  const bool same = a.ticks == b.ticks && a.trace == b.trace && format_session_log(a.ticks) == format_session_log(b.ticks);
  return {a.ticks.size() == 1000 && indices && same,
          fmt("%zu ticks for 1 s at 1 kHz, bit-identical reruns: %s", a.ticks.size(), same ? "yes" : "no")};
}

Outcome vibration_trigger() {
  const auto reference = edit_set_vibration_trigger(tactile_model(), 0, 2.0);
  const auto table = constant_table(reference.grid, reference.bins, 0.2);
  Renderer deep({}, table, reference.vibrations);
  const auto crossing = count(run_script(deep, stroke(4.0, 50.0, 100.0)), EventKind::vibration_started, false, true);
  Renderer shallow({}, table, reference.vibrations);
  const auto stopping = count(run_script(shallow, stroke(1.9, 50.0, 100.0)), EventKind::vibration_started, false, true);
  return {crossing == 1 && stopping == 0,
          fmt("stroke through 2.0 mm: %zu event(s); stroke stopping at 1.9 mm: %zu", crossing, stopping)};
}

Outcome behaviors() {
  const auto reference = tactile_model();
  const auto table = constant_table(reference.grid, reference.bins, 0.2);

  RendererConfig tap;
  tap.behavior.kind = BehaviorKind::fast_tap;
  Renderer rt(tap, table);
  std::vector<double> script;
  for (int i = 0; i < 200; ++i) script.push_back(2.5 * i / 200.0);
  const std::size_t start = script.size();
  const double seconds = 2.0;
  for (int k = 0; k < 2000; ++k) script.push_back(3.25 - 0.75 * std::cos(2.0 * std::numbers::pi * 6.0 * k / 1000.0));
  const auto tap_out = run_script(rt, script);
  std::size_t taps = 0;
  for (std::size_t k = start; k < tap_out.size(); ++k) taps += tap_out[k].events.count(EventKind::press_registered);
  const double rate = static_cast<double>(taps) / seconds;

  RendererConfig cool;
  cool.behavior.kind = BehaviorKind::cooldown;
  cool.behavior.return_delay_ms = {500.0};
  Renderer rc(cool, table);
  auto two = stroke(4.0, 80.0, 30.0);
  const auto second = two;
  two.insert(two.end(), 200, 0.0);
  two.insert(two.end(), second.begin(), second.end());
  const auto cool_presses = count(run_script(rc, two), EventKind::press_registered);

  RendererConfig ticks;
  ticks.behavior.kind = BehaviorKind::vibration_ticks;
  ticks.behavior.period_ms = 100.0;
  Renderer rv(ticks, table);
  const auto bursts = count(run_script(rv, stroke(4.0, 100.0, 1000.0)), EventKind::vibration_started, true);

  const bool ok = rate > 4.0 && cool_presses == 1 && bursts >= 9 && bursts <= 11;
  return {ok, fmt("fast_tap at 6 Hz: %.1f presses/s (> 4); cooldown 500 ms, second stroke 200 ms later: %zu press(es) "
                  "(1); vibration_ticks 100 ms over 1 s hold: %zu bursts (10 +/- 1)",
                  rate, cool_presses, bursts)};
}

Outcome cli_determinism(const std::string& cli) {
  if (cli.empty()) return {false, "CLI path not given (build with PRESSEM_BUILD_TOOLS=ON)"};
  const std::vector<std::string> steps = {
      "fixture --model tactile --out ref.json",
      "fixture --model tactile-captured --seed 7 --out cap.json",
      "fixture --plant default --out plant.json",
      "synth --model ref.json --trajectory 4:20 --trajectory 4:60 --trajectory 4:100 --noise 1.5 --seed 9 --out s.csv",
      "fit s.csv --out fit.json",
      "compensate --model cap.json --plant plant.json --seed 5 --threads 2 --out t.json --report r.json --report-csv "
      "r.csv",
      "render --table t.json --model ref.json --trajectory 4:100 --seed 5 --out rt.csv --log rl.csv --metrics rm.json",
      "render --table t.json --model ref.json --script s.csv --log sl.csv",
      "report r.json",
      "validate fit.json",
  };
  testing::TempDir a("acc-a"), b("acc-b");
  std::size_t files = 0, mismatched = 0;
  for (const auto& step : steps) {
    const auto ra = testing::run_cli(cli, step, a.path());
    const auto rb = testing::run_cli(cli, step, b.path());
    if (ra.code != 0) return {false, "'" + step + "' exited " + std::to_string(ra.code) + ": " + ra.err};
    if (ra.code != rb.code || ra.out != rb.out) ++mismatched;
  }
  for (const auto& e : std::filesystem::directory_iterator(a.path())) {
    ++files;
    const auto other = b.path() / e.path().filename();
    if (!std::filesystem::exists(other) || testing::slurp(e.path()) != testing::slurp(other)) ++mismatched;
  }
  return {mismatched == 0 && files > 0,
          fmt("%zu subcommand runs, %zu artifacts compared, %zu mismatch(es)", steps.size(), files, mismatched)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? std::filesystem::absolute(argv[1]).string() : "";
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"compensation-convergence", compensation_convergence},
      {"analytic-inverse", analytic_inverse},
      {"contraction-law", contraction_law},
      {"capture-round-trip", capture_round_trip},
      {"fdvv-vs-fd-ordering", fd_vs_fdvv},
      {"renderer-determinism-rate", renderer_determinism},
      {"vibration-triggering", vibration_trigger},
      {"behaviors", behaviors},
      {"cli-byte-determinism", [&] { return cli_determinism(cli); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
