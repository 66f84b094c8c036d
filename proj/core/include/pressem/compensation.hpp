#pragma once

// Iterative compensation: press the simulated plant, compare the sensed
// force with the reference at every grid point and adjust the duty curve
// until the error falls below a threshold.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pressem/capture.hpp"
#include "pressem/fdvv.hpp"
#include "pressem/plant.hpp"
#include "pressem/trace.hpp"

namespace pressem {

inline constexpr int kTableSchemaVersion = 1;

struct ActuationTable {
  DisplacementGrid grid;
  std::vector<VelocityBin> bins;
  std::map<CurveKey, std::vector<double>> duties;  // one duty per grid point
  unsigned quantization_bits = 12;
  int schema_version = kTableSchemaVersion;

  // Throws DomainError if the curve is missing.
  const std::vector<double>& duty_curve(Direction direction, std::size_t bin) const;

  // Bilinear in displacement and speed (bin centers), clamped to [0, 1].
  // Displacement is clamped to the grid.
  double lookup(double displacement_mm, double speed_mm_s, Direction direction) const;

  friend bool operator==(const ActuationTable&, const ActuationTable&) = default;
};

ActuationTable constant_table(const DisplacementGrid& grid, std::vector<VelocityBin> bins, double duty);
std::vector<Violation> validate_table(const ActuationTable& table);

// Largest code of a `bits`-wide PWM register.
std::uint32_t max_code(unsigned bits);
// Rounds every duty to k / (2^bits - 1).
ActuationTable quantize(ActuationTable table, unsigned bits);

enum class InitMode { zero, random };

struct CompensationConfig {
  double learning_rate = 0.8;
  double nominal_gain_cN = 300.0;
  std::size_t max_iterations = 10;
  double epsilon_cN = 2.0;
  InitMode init_mode = InitMode::zero;
  std::uint64_t seed = 0;
  std::size_t smoothing_window = 5;
  unsigned quantization_bits = 12;
  double tick_rate_hz = 1000.0;
  double rest_ms = 20.0;
  double dwell_ms = 100.0;
  SegmentationConfig segmentation;
  std::size_t threads = 1;
};

std::vector<Violation> validate_compensation_config(const CompensationConfig& config);

// Per-iteration statistics for one (direction, bin). The arrays hold one
// entry per update; the trial before the first update is kept separately.
struct BinReport {
  Direction direction = Direction::press;
  std::size_t bin = 0;
  double center_mm_s = 0.0;
  double initial_mean_abs_error_cN = 0.0;
  double initial_max_error_cN = 0.0;
  std::vector<double> mean_abs_error_cN;
  std::vector<double> max_error_cN;
  std::vector<double> mean_signed_error_cN;
  bool converged = false;
  std::size_t iterations_used = 0;
  // Grid points where the reference lies outside what the plant can deliver.
  std::vector<std::size_t> saturated_points;

  double final_mean_abs_error_cN() const;
  double final_max_error_cN() const;

  friend bool operator==(const BinReport&, const BinReport&) = default;
};

struct ConvergenceReport {
  std::vector<BinReport> bins;  // press bins first, then release, ascending bin

  bool converged() const;
  // Mean over entries of each entry's final mean absolute error.
  double final_mean_abs_error_cN() const;
  std::size_t max_iterations_used() const;

  friend bool operator==(const ConvergenceReport&, const ConvergenceReport&) = default;
};

struct CompensationResult {
  ActuationTable table;
  ConvergenceReport report;
};

struct ProgressSnapshot {
  Direction direction = Direction::press;
  std::size_t bin = 0;
  std::size_t iteration = 0;  // 0 is the initial trial
  double mean_abs_error_cN = 0.0;
  double max_error_cN = 0.0;
};

// Called from worker threads, one call at a time.
using ProgressCallback = std::function<void(const ProgressSnapshot&)>;

// Throws DomainError for an invalid reference, plant or configuration.
// Non-convergence is reported, not thrown.
CompensationResult compensate(const PlantConfig& plant, const FDVVModel& reference, const CompensationConfig& config,
                              const ProgressCallback& progress = {});

// Reference minus sensed force at each grid point, from the trace's segments
// in `direction`. Sensed force is resampled by linear interpolation in
// displacement. Points no segment reaches are not covered.
struct ErrorProfile {
  std::vector<double> error_cN;
  std::vector<bool> covered;

  std::size_t covered_count() const;
  double mean_abs() const;
  double max_abs() const;
  double mean_signed() const;
};

// Throws DomainError when the trace has no segment in `direction`.
ErrorProfile error_profile(std::span<const double> reference_on_grid, const PressTrace& trace,
                           const DisplacementGrid& grid, Direction direction,
                           const SegmentationConfig& segmentation = {});
ErrorProfile error_profile(const FDVVModel& reference, double speed_mm_s, const PressTrace& trace,
                           Direction direction, const SegmentationConfig& segmentation = {});

// |1 - alpha * g / g_hat|: the per-iteration error contraction on a static
// linear plant. Throws DomainError unless both gains are > 0.
double contraction_factor(double plant_gain_cN, double nominal_gain_cN, double alpha);

}  // namespace pressem
