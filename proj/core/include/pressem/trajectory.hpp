#pragma once

// Prescribed keycap motion. Finger motion drives the simulation; the plant
// reports the reaction force.

#include <span>
#include <string_view>
#include <vector>

namespace pressem {

struct FingerTrajectory {
  double sample_rate_hz = 1000.0;
  std::vector<double> displacement_mm;
  // Truth derivatives. Generators fill them analytically; when empty they
  // are derived by finite differences (see with_derivatives).
  std::vector<double> velocity_mm_s;
  std::vector<double> acceleration_mm_s2;

  std::size_t size() const { return displacement_mm.size(); }
  double duration_s() const { return static_cast<double>(size()) / sample_rate_hz; }
};

// Copy with velocity/acceleration columns populated.
FingerTrajectory with_derivatives(FingerTrajectory trajectory);

struct StrokeSpec {
  double travel_mm = 4.0;
  double peak_velocity_mm_s = 50.0;
  double dwell_ms = 100.0;  // hold at the bottom
  double rest_ms = 20.0;    // at rest before and after the stroke
};

// Parses `travel:peak_velocity[:dwell_ms]`. Throws DomainError.
StrokeSpec parse_stroke_spec(std::string_view text);

// Rest, minimum-jerk descent, dwell, minimum-jerk ascent, rest. The peak
// descent speed equals peak_velocity_mm_s. Throws DomainError when
// arguments are not positive or a stroke would be shorter than one tick.
FingerTrajectory generate_trajectory(const StrokeSpec& spec, double tick_rate_hz);
FingerTrajectory generate_trajectory(double travel_mm, double peak_velocity_mm_s, double tick_rate_hz);

// Constant-speed stroke: rest, linear ramp down, dwell, linear ramp up, rest.
// The ramp sample count is rounded so both ends land exactly on 0 and
// travel; the realised speed is travel * rate / samples. Corner samples
// carry the adjacent ramp's velocity.
FingerTrajectory generate_ramp_trajectory(const StrokeSpec& spec, double sample_rate_hz);

// Joins trajectories sampled at the same rate.
FingerTrajectory concatenate(std::span<const FingerTrajectory> parts);

}  // namespace pressem
