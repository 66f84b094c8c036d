#include "pressem/plant.hpp"

#include <algorithm>
#include <cmath>

#include "pressem/errors.hpp"
#include "pressem/rng.hpp"
#include "pressem/vibration.hpp"

namespace pressem {

namespace {
// g * mm/s^2 -> cN
constexpr double kMassForceScale = 1e-4;
}  // namespace

PlantConfig default_fixture_plant() { return PlantConfig{}; }

PlantConfig static_linear_plant(double gain_cN) {
  PlantConfig p;
  p.mass_g = 0.0;
  p.spring_cN_per_mm = 0.0;
  p.damping_cN_per_mm_s = 0.0;
  p.actuator_gain_cN = gain_cN;
  p.actuator_tau_ms = 0.0;
  p.duty_nonlinearity_exponent = 1.0;
  p.sensor_noise_sigma_mm = 0.0;
  p.actuation_latency_ticks = 0;
  return p;
}

std::vector<Violation> validate_plant(const PlantConfig& c) {
  std::vector<Violation> out;
  auto finite_nonneg = [&](double v, const char* field) {
    if (!std::isfinite(v) || v < 0.0) out.push_back({field, "must be finite and >= 0"});
  };
  finite_nonneg(c.mass_g, "mass_g");
  finite_nonneg(c.spring_cN_per_mm, "spring_cN_per_mm");
  finite_nonneg(c.damping_cN_per_mm_s, "damping_cN_per_mm_s");
  finite_nonneg(c.actuator_gain_cN, "actuator_gain_cN");
  finite_nonneg(c.actuator_tau_ms, "actuator_tau_ms");
  finite_nonneg(c.sensor_noise_sigma_mm, "sensor_noise_sigma_mm");
  if (!std::isfinite(c.duty_nonlinearity_exponent) || !(c.duty_nonlinearity_exponent > 0.0)) {
    out.push_back({"duty_nonlinearity_exponent", "must be > 0"});
  }
  return out;
}

Actuator::Actuator(const PlantConfig& config, double tick_rate_hz)
    : gain_(config.actuator_gain_cN),
      gamma_(config.duty_nonlinearity_exponent),
      blend_(config.actuator_tau_ms > 0.0 ? -std::expm1(-1000.0 / (tick_rate_hz * config.actuator_tau_ms)) : 1.0),
      delay_(config.actuation_latency_ticks, 0.0) {
  if (!(tick_rate_hz > 0.0)) throw DomainError("tick rate must be > 0");
  const auto v = validate_plant(config);
  if (!v.empty()) throw DomainError("plant: " + v.front().field + " " + v.front().rule);
}

double Actuator::step(double duty) {
  if (!(duty >= 0.0 && duty <= 1.0)) throw DomainError("duty outside [0, 1]");
  double applied = duty;
  if (!delay_.empty()) {
    applied = delay_[head_];
    delay_[head_] = duty;
    head_ = (head_ + 1) % delay_.size();
  }
  const double target = gamma_ == 1.0 ? gain_ * applied : gain_ * std::pow(applied, gamma_);
  output_ = blend_ == 1.0 ? target : output_ + (target - output_) * blend_;
  return output_;
}

std::vector<double> actuator_response(std::span<const double> duty, const PlantConfig& config,
                                      double tick_rate_hz) {
  Actuator a(config, tick_rate_hz);
  std::vector<double> out;
  out.reserve(duty.size());
  for (double u : duty) out.push_back(a.step(u));
  return out;
}

double max_static_force(const PlantConfig& c, double d) { return c.actuator_gain_cN + c.spring_cN_per_mm * d; }
double min_static_force(const PlantConfig& c, double d) { return c.spring_cN_per_mm * d; }

GridDutyController::GridDutyController(DisplacementGrid grid, std::span<const double> duties)
    : grid_(grid), duties_(duties.begin(), duties.end()) {
  if (duties_.size() != grid_.point_count()) throw DomainError("duty curve does not match grid");
}

ControlOutput GridDutyController::step(double sensed) {
  const double d = std::clamp(sensed, 0.0, grid_.travel_mm);
  return {std::clamp(interpolate_on_grid(grid_, duties_, d), 0.0, 1.0), 0.0};
}

PressTrace simulate_press(const PlantConfig& config, const FingerTrajectory& trajectory0, Controller& controller,
                          double tick_rate_hz) {
  if (trajectory0.sample_rate_hz != tick_rate_hz) {
    throw DomainError("trajectory sample rate does not match the tick rate");
  }
  const auto trajectory = with_derivatives(trajectory0);
  Actuator actuator(config, tick_rate_hz);
  Rng rng(config.rng_seed);

  PressTrace trace;
  trace.sample_rate_hz = tick_rate_hz;
  trace.source = "simulated";
  const std::size_t n = trajectory.size();
  trace.displacement_mm.resize(n);
  trace.force_cN.resize(n);
  trace.vibration.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = trajectory.displacement_mm[k];
    const double sensed = x + rng.normal(config.sensor_noise_sigma_mm);
    const ControlOutput cmd = controller.step(sensed);
    const double actuator_force = actuator.step(cmd.duty);
    const double passive = config.spring_cN_per_mm * x + config.damping_cN_per_mm_s * trajectory.velocity_mm_s[k] +
                           config.mass_g * trajectory.acceleration_mm_s2[k] * kMassForceScale;
    trace.displacement_mm[k] = sensed;
    trace.force_cN[k] = actuator_force + passive;
    trace.vibration[k] = cmd.vibration;
  }
  return trace;
}

PressTrace simulate_press(const PlantConfig& config, const FingerTrajectory& trajectory, double fixed_duty,
                          double tick_rate_hz) {
  FixedDutyController c(fixed_duty);
  return simulate_press(config, trajectory, c, tick_rate_hz);
}

PressTrace synth_trace_from_model(const FDVVModel& model, const FingerTrajectory& trajectory0, double noise_sigma_cN,
                                  std::uint64_t seed) {
  const auto trajectory = with_derivatives(trajectory0);
  Rng rng(seed);
  VibrationMixer mixer(trajectory.sample_rate_hz, model.vibrations.size() + 1);

  PressTrace trace;
  trace.sample_rate_hz = trajectory.sample_rate_hz;
  trace.source = "synth:" + model.name;
  const std::size_t n = trajectory.size();
  trace.displacement_mm = trajectory.displacement_mm;
  trace.force_cN.resize(n);
  trace.vibration.resize(n);
  Direction dir = Direction::press;
  const double travel = model.grid.travel_mm;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = std::clamp(trajectory.displacement_mm[k], 0.0, travel);
    const double v = trajectory.velocity_mm_s[k];
    if (v > 0.0) dir = Direction::press;
    if (v < 0.0) dir = Direction::release;
    trace.force_cN[k] = lookup_force(model, d, std::abs(v), dir) + rng.normal(noise_sigma_cN);

    if (k > 0) {
      const double prev = std::clamp(trajectory.displacement_mm[k - 1], 0.0, travel);
      for (std::size_t i = 0; i < model.vibrations.size(); ++i) {
        const auto& vp = model.vibrations[i];
        const bool crossed = vp.direction == Direction::press
                                 ? (prev < vp.trigger_mm && d >= vp.trigger_mm) ||
                                       (vp.trigger_mm == 0.0 && prev == 0.0 && d > 0.0)
                                 : (prev > vp.trigger_mm && d <= vp.trigger_mm) ||
                                       (vp.trigger_mm == travel && prev == travel && d < travel);
        if (crossed) mixer.start(vp.samples, vp.sample_rate_hz, static_cast<int>(i));
      }
    }
    trace.vibration[k] = mixer.next();
  }
  return trace;
}

}  // namespace pressem
