#pragma once

// Simulated button plant: an actuator with its own transfer function
// (gain, duty nonlinearity, latency, first-order lag) pushing against a
// keycap whose mechanics are a spring-mass-damper, read by a noisy
// displacement sensor.

#include <cstdint>
#include <span>
#include <vector>

#include "pressem/fdvv.hpp"
#include "pressem/trace.hpp"
#include "pressem/trajectory.hpp"

namespace pressem {

struct PlantConfig {
  double mass_g = 5.0;
  double spring_cN_per_mm = 2.0;
  double damping_cN_per_mm_s = 0.05;
  double actuator_gain_cN = 300.0;  // force at duty 1.0
  double actuator_tau_ms = 5.0;     // 0 = instantaneous
  double duty_nonlinearity_exponent = 1.2;
  double sensor_noise_sigma_mm = 0.002;
  std::uint32_t actuation_latency_ticks = 0;
  std::uint64_t rng_seed = 1;

  friend bool operator==(const PlantConfig&, const PlantConfig&) = default;
};

// Desk-scale fixture, not a measured device: gain 300 cN, tau 5 ms, gamma 1.2.
PlantConfig default_fixture_plant();
// gamma 1, no lag, latency, mechanics or noise: force == gain * duty.
PlantConfig static_linear_plant(double gain_cN);

std::vector<Violation> validate_plant(const PlantConfig& config);

// Gain, nonlinearity and latency followed by an exactly discretised
// first-order lag (zero-order-hold input).
class Actuator {
 public:
  Actuator(const PlantConfig& config, double tick_rate_hz);

  // Throws DomainError for duty outside [0, 1].
  double step(double duty);

 private:
  double gain_;
  double gamma_;
  double blend_;  // 1 - exp(-dt / tau)
  std::vector<double> delay_;  // ring of pending duty commands
  std::size_t head_ = 0;
  double output_ = 0.0;
};

std::vector<double> actuator_response(std::span<const double> duty, const PlantConfig& config,
                                      double tick_rate_hz = 1000.0);

// Maximum and minimum force the plant can present at displacement d when
// the keycap is at rest.
double max_static_force(const PlantConfig& config, double displacement_mm);
double min_static_force(const PlantConfig& config, double displacement_mm);

struct ControlOutput {
  double duty = 0.0;
  double vibration = 0.0;
};

// Anything that turns a displacement reading into an actuator command once
// per tick.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual ControlOutput step(double sensed_displacement_mm) = 0;
};

class FixedDutyController final : public Controller {
 public:
  explicit FixedDutyController(double duty) : duty_(duty) {}
  ControlOutput step(double) override { return {duty_, 0.0}; }

 private:
  double duty_;
};

// Duty looked up on a displacement grid by the sensed reading (linear
// interpolation, readings clamped to the grid).
class GridDutyController final : public Controller {
 public:
  GridDutyController(DisplacementGrid grid, std::span<const double> duties);
  ControlOutput step(double sensed_displacement_mm) override;

 private:
  DisplacementGrid grid_;
  std::vector<double> duties_;
};

// Runs one trajectory through the plant. Throws DomainError when the
// trajectory rate differs from tick_rate_hz. The trace's displacement column
// holds the noisy sensor readings.
PressTrace simulate_press(const PlantConfig& config, const FingerTrajectory& trajectory, Controller& controller,
                          double tick_rate_hz = 1000.0);
PressTrace simulate_press(const PlantConfig& config, const FingerTrajectory& trajectory, double fixed_duty,
                          double tick_rate_hz = 1000.0);

// The trace an ideal button described by `model` would produce along the
// trajectory: force = lookup_force(d, |v|, sign of v) plus Gaussian noise,
// vibration profiles played from their trigger crossings.
PressTrace synth_trace_from_model(const FDVVModel& model, const FingerTrajectory& trajectory, double noise_sigma_cN,
                                  std::uint64_t seed);

}  // namespace pressem
