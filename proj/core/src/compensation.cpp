#include "pressem/compensation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "pressem/errors.hpp"
#include "pressem/resample.hpp"
#include "pressem/rng.hpp"
#include "pressem/trajectory.hpp"

namespace pressem {

const std::vector<double>& ActuationTable::duty_curve(Direction direction, std::size_t bin) const {
  const auto it = duties.find(CurveKey{direction, bin});
  if (it == duties.end()) {
    throw DomainError("table has no duty curve for " + std::string(to_string(direction)) + " bin " +
                      std::to_string(bin));
  }
  return it->second;
}

double ActuationTable::lookup(double displacement_mm, double speed_mm_s, Direction direction) const {
  const double d = std::clamp(displacement_mm, 0.0, grid.travel_mm);
  const auto blend = blend_bins(bins, std::max(0.0, speed_mm_s));
  const double lo = interpolate_on_grid(grid, duty_curve(direction, blend.lower), d);
  double duty = lo;
  if (blend.upper != blend.lower && blend.t > 0.0) {
    const double hi = interpolate_on_grid(grid, duty_curve(direction, blend.upper), d);
    duty = lo + (hi - lo) * blend.t;
  }
  return std::clamp(duty, 0.0, 1.0);
}

ActuationTable constant_table(const DisplacementGrid& grid, std::vector<VelocityBin> bins, double duty) {
  if (!(duty >= 0.0 && duty <= 1.0)) throw DomainError("duty outside [0, 1]");
  ActuationTable t;
  t.grid = grid;
  t.bins = std::move(bins);
  const std::size_t n = grid.point_count();
  for (Direction dir : kDirections) {
    for (std::size_t b = 0; b < t.bins.size(); ++b) t.duties.emplace(CurveKey{dir, b}, std::vector<double>(n, duty));
  }
  return t;
}

std::vector<Violation> validate_table(const ActuationTable& table) {
  std::vector<Violation> out;
  if (table.schema_version != kTableSchemaVersion) out.push_back({"schema_version", "unsupported version"});
  if (!table.grid.is_valid()) {
    out.push_back({"grid", "travel_mm / step_mm must be a positive integer"});
    return out;
  }
  if (table.quantization_bits < 1 || table.quantization_bits > 31) {
    out.push_back({"quantization_bits", "must be in [1, 31]"});
  }
  auto bins = validate_bins(table.bins);
  out.insert(out.end(), bins.begin(), bins.end());
  const std::size_t n = table.grid.point_count();
  for (Direction dir : kDirections) {
    for (std::size_t b = 0; b < table.bins.size(); ++b) {
      const std::string field = "duties[" + std::string(to_string(dir)) + "," + std::to_string(b) + "]";
      const auto it = table.duties.find(CurveKey{dir, b});
      if (it == table.duties.end()) {
        out.push_back({field, "missing"});
        continue;
      }
      if (it->second.size() != n) out.push_back({field, "length must equal grid point count"});
      if (!std::all_of(it->second.begin(), it->second.end(), [](double u) { return u >= 0.0 && u <= 1.0; })) {
        out.push_back({field, "duty outside [0, 1]"});
      }
    }
  }
  if (table.duties.size() != 2 * table.bins.size()) {
    out.push_back({"duties", "curves must exist exactly for every (direction, bin)"});
  }
  return out;
}

std::uint32_t max_code(unsigned bits) {
  if (bits < 1 || bits > 31) throw DomainError("quantization_bits must be in [1, 31]");
  return (std::uint32_t{1} << bits) - 1;
}

ActuationTable quantize(ActuationTable table, unsigned bits) {
  const double top = static_cast<double>(max_code(bits));
  for (auto& [key, curve] : table.duties) {
    for (double& u : curve) u = std::round(std::clamp(u, 0.0, 1.0) * top) / top;
  }
  table.quantization_bits = bits;
  return table;
}

std::vector<Violation> validate_compensation_config(const CompensationConfig& c) {
  std::vector<Violation> out;
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    out.push_back({"learning_rate", "must be finite and >= 0"});
  }
  if (!(c.nominal_gain_cN > 0.0) || !std::isfinite(c.nominal_gain_cN)) {
    out.push_back({"nominal_gain_cN", "must be > 0"});
  }
  if (c.max_iterations < 1) out.push_back({"max_iterations", "must be >= 1"});
  if (!(c.epsilon_cN > 0.0)) out.push_back({"epsilon_cN", "must be > 0"});
  if (c.smoothing_window == 0 || c.smoothing_window % 2 == 0) {
    out.push_back({"smoothing_window", "must be odd and >= 1"});
  }
  if (c.quantization_bits < 1 || c.quantization_bits > 31) {
    out.push_back({"quantization_bits", "must be in [1, 31]"});
  }
  if (!(c.tick_rate_hz > 0.0)) out.push_back({"tick_rate_hz", "must be > 0"});
  if (!(c.rest_ms >= 0.0)) out.push_back({"rest_ms", "must be >= 0"});
  if (!(c.dwell_ms >= 0.0)) out.push_back({"dwell_ms", "must be >= 0"});
  if (c.segmentation.filter_window == 0 || c.segmentation.filter_window % 2 == 0) {
    out.push_back({"segmentation.filter_window", "must be odd and >= 1"});
  }
  if (!(c.segmentation.velocity_deadband_mm_s >= 0.0)) {
    out.push_back({"segmentation.velocity_deadband_mm_s", "must be >= 0"});
  }
  if (c.threads < 1) out.push_back({"threads", "must be >= 1"});
  return out;
}

double BinReport::final_mean_abs_error_cN() const {
  return mean_abs_error_cN.empty() ? initial_mean_abs_error_cN : mean_abs_error_cN.back();
}

double BinReport::final_max_error_cN() const {
  return max_error_cN.empty() ? initial_max_error_cN : max_error_cN.back();
}

bool ConvergenceReport::converged() const {
  return std::all_of(bins.begin(), bins.end(), [](const BinReport& b) { return b.converged; });
}

double ConvergenceReport::final_mean_abs_error_cN() const {
  if (bins.empty()) return 0.0;
  double s = 0.0;
  for (const auto& b : bins) s += b.final_mean_abs_error_cN();
  return s / static_cast<double>(bins.size());
}

std::size_t ConvergenceReport::max_iterations_used() const {
  std::size_t m = 0;
  for (const auto& b : bins) m = std::max(m, b.iterations_used);
  return m;
}

std::size_t ErrorProfile::covered_count() const {
  return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), true));
}

double ErrorProfile::mean_abs() const {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < error_cN.size(); ++i) {
    if (covered[i]) s += std::abs(error_cN[i]), ++n;
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

double ErrorProfile::max_abs() const {
  double m = 0.0;
  for (std::size_t i = 0; i < error_cN.size(); ++i) {
    if (covered[i]) m = std::max(m, std::abs(error_cN[i]));
  }
  return m;
}

double ErrorProfile::mean_signed() const {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < error_cN.size(); ++i) {
    if (covered[i]) s += error_cN[i], ++n;
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

ErrorProfile error_profile(std::span<const double> reference, const PressTrace& trace, const DisplacementGrid& grid,
                           Direction direction, const SegmentationConfig& segmentation) {
  const std::size_t npts = grid.point_count();
  if (reference.size() != npts) throw DomainError("reference length does not match grid");
  if (segmentation.filter_window > trace.size()) throw DomainError("trace shorter than the filter window");

  PressTrace filtered = trace;
  filtered.displacement_mm = moving_average(trace.displacement_mm, segmentation.filter_window);
  std::vector<double> sum(npts, 0.0);
  std::vector<std::size_t> count(npts, 0);
  bool any = false;
  for (const auto& seg : segment_presses(filtered, segmentation)) {
    if (seg.phase != direction) continue;
    any = true;
    const auto samples = extract_phase_samples(trace, seg);
    if (samples.displacement_mm.empty()) continue;
    const auto est = interpolate_to_grid(grid, samples.displacement_mm, samples.force_cN);
    for (std::size_t i = 0; i < npts; ++i) {
      if (est.covered[i]) sum[i] += est.value[i], ++count[i];
    }
  }
  if (!any) throw DomainError("trace has no " + std::string(to_string(direction)) + " segment");

  ErrorProfile out;
  out.error_cN.assign(npts, 0.0);
  out.covered.assign(npts, false);
  for (std::size_t i = 0; i < npts; ++i) {
    if (count[i] == 0) continue;
    out.error_cN[i] = reference[i] - sum[i] / static_cast<double>(count[i]);
    out.covered[i] = true;
  }
  return out;
}

ErrorProfile error_profile(const FDVVModel& reference, double speed_mm_s, const PressTrace& trace,
                           Direction direction, const SegmentationConfig& segmentation) {
  const auto ref = sample_curve(reference, speed_mm_s, direction);
  return error_profile(ref, trace, reference.grid, direction, segmentation);
}

double contraction_factor(double plant_gain_cN, double nominal_gain_cN, double alpha) {
  if (!(plant_gain_cN > 0.0) || !(nominal_gain_cN > 0.0)) throw DomainError("gains must be > 0");
  return std::abs(1.0 - alpha * plant_gain_cN / nominal_gain_cN);
}

namespace {

struct Task {
  Direction direction;
  std::size_t bin;
};

std::uint64_t direction_index(Direction d) { return d == Direction::press ? 0 : 1; }

// Fills uncovered points from the nearest covered neighbour so the stroke
// ends still receive updates.
std::vector<double> extend_edges(const ErrorProfile& p) {
  std::vector<double> e = p.error_cN;
  const std::size_t n = e.size();
  std::size_t first = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (p.covered[i]) {
      first = i;
      break;
    }
  }
  if (first == n) return std::vector<double>(n, 0.0);
  for (std::size_t i = 0; i < first; ++i) e[i] = e[first];
  for (std::size_t i = first + 1; i < n; ++i) {
    if (!p.covered[i]) e[i] = e[i - 1];
  }
  return e;
}

class Compensator {
 public:
  Compensator(const PlantConfig& plant, const FDVVModel& reference, const CompensationConfig& config,
              const ProgressCallback& progress)
      : plant_(plant), ref_(reference), cfg_(config), progress_(progress) {}

  std::pair<std::vector<double>, BinReport> run(const Task& task) {
    const auto& bin = ref_.bins[task.bin];
    const auto& grid = ref_.grid;
    const std::size_t npts = grid.point_count();
    const auto& ref = ref_.curve(task.direction, task.bin).force_cN;

    StrokeSpec stroke;
    stroke.travel_mm = grid.travel_mm;
    stroke.peak_velocity_mm_s = bin.center_mm_s;
    stroke.dwell_ms = cfg_.dwell_ms;
    stroke.rest_ms = cfg_.rest_ms;
    const auto trajectory = with_derivatives(generate_trajectory(stroke, cfg_.tick_rate_hz));

    std::vector<double> duty(npts, 0.0);
    if (cfg_.init_mode == InitMode::random) {
      Rng rng(derive_seed(cfg_.seed, {direction_index(task.direction), task.bin}));
      std::fill(duty.begin(), duty.end(), rng.uniform());
    }

    BinReport report;
    report.direction = task.direction;
    report.bin = task.bin;
    report.center_mm_s = bin.center_mm_s;
    for (std::size_t i = 0; i < npts; ++i) {
      const double d = grid.point(i);
      if (ref[i] > max_static_force(plant_, d) || ref[i] < min_static_force(plant_, d)) {
        report.saturated_points.push_back(i);
      }
    }

    auto trial = [&](std::size_t iteration) {
      PlantConfig p = plant_;
      p.rng_seed = derive_seed(plant_.rng_seed, {cfg_.seed, direction_index(task.direction), task.bin, iteration});
      GridDutyController controller(grid, duty);
      const auto trace = simulate_press(p, trajectory, controller, cfg_.tick_rate_hz);
      return error_profile(ref, trace, grid, task.direction, cfg_.segmentation);
    };
    auto notify = [&](std::size_t iteration, const ErrorProfile& e) {
      if (!progress_) return;
      std::lock_guard lock(progress_mutex_);
      progress_({task.direction, task.bin, iteration, e.mean_abs(), e.max_abs()});
    };

    ErrorProfile err = trial(0);
    report.initial_mean_abs_error_cN = err.mean_abs();
    report.initial_max_error_cN = err.max_abs();
    notify(0, err);
    report.converged = report.initial_mean_abs_error_cN <= cfg_.epsilon_cN;

    const double step = cfg_.learning_rate / cfg_.nominal_gain_cN;
    for (std::size_t k = 1; !report.converged && k <= cfg_.max_iterations; ++k) {
      const auto e = extend_edges(err);
      for (std::size_t i = 0; i < npts; ++i) duty[i] = std::clamp(duty[i] + step * e[i], 0.0, 1.0);
      if (cfg_.smoothing_window > 1) {
        duty = moving_average(duty, cfg_.smoothing_window);
        for (double& u : duty) u = std::clamp(u, 0.0, 1.0);
      }
      err = trial(k);
      report.mean_abs_error_cN.push_back(err.mean_abs());
      report.max_error_cN.push_back(err.max_abs());
      report.mean_signed_error_cN.push_back(err.mean_signed());
      report.iterations_used = k;
      report.converged = err.mean_abs() <= cfg_.epsilon_cN;
      notify(k, err);
    }
    return {std::move(duty), std::move(report)};
  }

 private:
  const PlantConfig& plant_;
  const FDVVModel& ref_;
  const CompensationConfig& cfg_;
  const ProgressCallback& progress_;
  std::mutex progress_mutex_;
};

}  // namespace

CompensationResult compensate(const PlantConfig& plant, const FDVVModel& reference, const CompensationConfig& config,
                              const ProgressCallback& progress) {
  if (const auto v = validate_model(reference); !v.empty()) {
    throw DomainError("reference model invalid (" + v.front().field + ": " + v.front().rule + ")");
  }
  if (const auto v = validate_plant(plant); !v.empty()) {
    throw DomainError("plant invalid (" + v.front().field + ": " + v.front().rule + ")");
  }
  if (const auto v = validate_compensation_config(config); !v.empty()) {
    throw DomainError("compensation config invalid (" + v.front().field + ": " + v.front().rule + ")");
  }
  for (const auto& b : reference.bins) {
    if (!(b.center_mm_s > 0.0)) throw DomainError("compensation needs bin centers > 0");
  }

  std::vector<Task> tasks;
  for (Direction dir : kDirections) {
    for (std::size_t b = 0; b < reference.bins.size(); ++b) tasks.push_back({dir, b});
  }
  std::vector<std::pair<std::vector<double>, BinReport>> results(tasks.size());
  Compensator worker(plant, reference, config, progress);

  const std::size_t nthreads = std::min(config.threads, tasks.size());
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = worker.run(tasks[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
          try {
            results[i] = worker.run(tasks[i]);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  CompensationResult out;
  out.table.grid = reference.grid;
  out.table.bins = reference.bins;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    out.table.duties.emplace(CurveKey{tasks[i].direction, tasks[i].bin}, std::move(results[i].first));
    out.report.bins.push_back(std::move(results[i].second));
  }
  out.table = quantize(std::move(out.table), config.quantization_bits);
  return out;
}

}  // namespace pressem
