#pragma once

// Turning recorded presses into FDVV models: smoothing, velocity
// estimation, press/release segmentation, per-bin curve fitting and
// vibration extraction.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pressem/fdvv.hpp"
#include "pressem/trace.hpp"

namespace pressem {

// Centered moving average with edge replication. `window` must be odd,
// >= 1 and <= signal length; otherwise DomainError.
std::vector<double> moving_average(std::span<const double> signal, std::size_t window);

// Central differences inside, second-order one-sided differences at the
// ends (first-order for two samples). Output in mm/s.
std::vector<double> estimate_velocity(std::span<const double> displacement_mm, double sample_rate_hz);

struct SegmentationConfig {
  std::size_t filter_window = 5;
  double min_travel_mm = 0.5;
  double velocity_deadband_mm_s = 1.0;
};

struct PressSegment {
  std::size_t begin = 0;  // first sample
  std::size_t end = 0;    // one past the last sample
  Direction phase = Direction::press;
  double mean_velocity_mm_s = 0.0;  // signed
  double peak_velocity_mm_s = 0.0;  // signed, largest magnitude

  friend bool operator==(const PressSegment&, const PressSegment&) = default;
};

// Expects an already filtered trace. Samples whose speed lies inside the
// deadband are dwell and belong to neither phase; same-phase runs separated
// only by dwell or by discarded short reversals are merged.
std::vector<PressSegment> segment_presses(const PressTrace& trace, const SegmentationConfig& config);

enum class CurveAggregation { mean, median };

struct CaptureConfig {
  SegmentationConfig segmentation;
  std::vector<VelocityBin> bins;
  DisplacementGrid grid;
  CurveAggregation aggregation = CurveAggregation::mean;
  double vibration_onset_threshold = 8.0;  // energy ratio over baseline
  double vibration_window_ms = 30.0;
  double vibration_energy_window_ms = 1.0;
  std::string model_name = "captured";
};

// Problems with the configuration itself (window parity, bin layout, grid).
std::vector<Violation> validate_capture_config(const CaptureConfig& config);

// Samples of one segment usable for curve fitting: the displacement must be
// moving in the segment's direction at the sample and extend the running
// extreme (strictly), which drops dwell, jitter and reversal samples. The
// segment is first widened over adjacent samples that still move in its
// direction, so a clean stroke covers its full displacement range.
struct PhaseSamples {
  std::vector<double> displacement_mm;
  std::vector<double> force_cN;
};
PhaseSamples extract_phase_samples(const PressTrace& trace, const PressSegment& segment);

std::optional<VibrationProfile> extract_vibration(const PressTrace& trace, const PressSegment& segment,
                                                  const CaptureConfig& config);

// Index of the bin containing |peak velocity|, if any.
std::optional<std::size_t> assign_bin(std::span<const VelocityBin> bins, const PressSegment& segment);

// Throws FitError when some (direction, bin) receives no segment, and
// DomainError for invalid configuration or traces.
FDVVModel fit_model(std::span<const PressTrace> traces, const CaptureConfig& config);

}  // namespace pressem
