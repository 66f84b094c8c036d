#include "pressem/trajectory.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "pressem/capture.hpp"
#include "pressem/errors.hpp"

namespace pressem {

FingerTrajectory with_derivatives(FingerTrajectory t) {
  if (t.size() < 2) throw DomainError("trajectory needs at least 2 samples");
  if (t.velocity_mm_s.size() != t.size()) t.velocity_mm_s = estimate_velocity(t.displacement_mm, t.sample_rate_hz);
  if (t.acceleration_mm_s2.size() != t.size()) {
    t.acceleration_mm_s2 = estimate_velocity(t.velocity_mm_s, t.sample_rate_hz);
  }
  return t;
}

StrokeSpec parse_stroke_spec(std::string_view text) {
  std::vector<double> parts;
  std::string_view rest = text;
  for (;;) {
    const auto colon = rest.find(':');
    const auto field = rest.substr(0, colon);
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
      throw DomainError("invalid trajectory spec '" + std::string(text) + "'");
    }
    parts.push_back(v);
    if (colon == std::string_view::npos) break;
    rest = rest.substr(colon + 1);
  }
  if (parts.size() < 2 || parts.size() > 3) {
    throw DomainError("trajectory spec must be travel:peak_velocity[:dwell_ms]");
  }
  StrokeSpec s;
  s.travel_mm = parts[0];
  s.peak_velocity_mm_s = parts[1];
  if (parts.size() == 3) s.dwell_ms = parts[2];
  if (!(s.travel_mm > 0.0) || !(s.peak_velocity_mm_s > 0.0) || !(s.dwell_ms >= 0.0)) {
    throw DomainError("trajectory spec values must be positive");
  }
  return s;
}

namespace {

struct MinJerk {
  double pos, vel, acc;  // normalized: s(tau), s'(tau), s''(tau)
};

MinJerk min_jerk(double tau) {
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  return {t3 * (10.0 - 15.0 * tau + 6.0 * t2), 30.0 * t2 * (1.0 - tau) * (1.0 - tau),
          60.0 * tau - 180.0 * t2 + 120.0 * t3};
}

void check_spec(const StrokeSpec& s, double rate) {
  if (!(s.travel_mm > 0.0) || !(s.peak_velocity_mm_s > 0.0) || !(rate > 0.0) || !(s.dwell_ms >= 0.0) ||
      !(s.rest_ms >= 0.0) || !std::isfinite(s.peak_velocity_mm_s) || !std::isfinite(s.travel_mm)) {
    throw DomainError("trajectory arguments must be positive and finite");
  }
}

}  // namespace

FingerTrajectory generate_trajectory(const StrokeSpec& spec, double tick_rate_hz) {
  check_spec(spec, tick_rate_hz);
  // Peak of s'(tau) is 30/16 at tau = 1/2.
  const double stroke_s = 1.875 * spec.travel_mm / spec.peak_velocity_mm_s;
  if (stroke_s < 1.0 / tick_rate_hz) throw DomainError("stroke too fast to fit one tick");
  const double rest = spec.rest_ms / 1000.0;
  const double dwell = spec.dwell_ms / 1000.0;
  const double t_down = rest;
  const double t_bottom = t_down + stroke_s;
  const double t_up = t_bottom + dwell;
  const double t_end = t_up + stroke_s;
  const double total = t_end + rest;
  const auto n = static_cast<std::size_t>(std::ceil(total * tick_rate_hz - 1e-9)) + 1;

  FingerTrajectory out;
  out.sample_rate_hz = tick_rate_hz;
  out.displacement_mm.resize(n);
  out.velocity_mm_s.resize(n);
  out.acceleration_mm_s2.resize(n);
  const double D = spec.travel_mm;
  const double vs = D / stroke_s;
  const double as = D / (stroke_s * stroke_s);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / tick_rate_hz;
    double x = 0.0, v = 0.0, a = 0.0;
    if (t <= t_down || t >= t_end) {
      // rest
    } else if (t < t_bottom) {
      const auto m = min_jerk((t - t_down) / stroke_s);
      x = D * m.pos, v = vs * m.vel, a = as * m.acc;
    } else if (t <= t_up) {
      x = D;
    } else {
      const auto m = min_jerk((t - t_up) / stroke_s);
      x = D * (1.0 - m.pos), v = -vs * m.vel, a = -as * m.acc;
    }
    out.displacement_mm[k] = x;
    out.velocity_mm_s[k] = v;
    out.acceleration_mm_s2[k] = a;
  }
  return out;
}

FingerTrajectory generate_trajectory(double travel_mm, double peak_velocity_mm_s, double tick_rate_hz) {
  StrokeSpec s;
  s.travel_mm = travel_mm;
  s.peak_velocity_mm_s = peak_velocity_mm_s;
  return generate_trajectory(s, tick_rate_hz);
}

FingerTrajectory generate_ramp_trajectory(const StrokeSpec& spec, double rate) {
  check_spec(spec, rate);
  const auto ramp = static_cast<std::size_t>(std::llround(spec.travel_mm * rate / spec.peak_velocity_mm_s));
  if (ramp < 1) throw DomainError("ramp too fast to fit one sample");
  const double speed = spec.travel_mm * rate / static_cast<double>(ramp);
  const auto rest = static_cast<std::size_t>(std::llround(spec.rest_ms * rate / 1000.0));
  const auto dwell = static_cast<std::size_t>(std::llround(spec.dwell_ms * rate / 1000.0));

  FingerTrajectory out;
  out.sample_rate_hz = rate;
  auto push = [&](double x, double v) {
    out.displacement_mm.push_back(x);
    out.velocity_mm_s.push_back(v);
    out.acceleration_mm_s2.push_back(0.0);
  };
  const double D = spec.travel_mm;
  const double r = static_cast<double>(ramp);
  for (std::size_t i = 0; i < rest; ++i) push(0.0, 0.0);
  for (std::size_t k = 0; k <= ramp; ++k) push(D * static_cast<double>(k) / r, speed);
  for (std::size_t i = 0; i < dwell; ++i) push(D, 0.0);
  for (std::size_t k = 0; k <= ramp; ++k) push(D * static_cast<double>(ramp - k) / r, -speed);
  for (std::size_t i = 0; i < rest; ++i) push(0.0, 0.0);
  return out;
}

FingerTrajectory concatenate(std::span<const FingerTrajectory> parts) {
  if (parts.empty()) throw DomainError("nothing to concatenate");
  FingerTrajectory out;
  out.sample_rate_hz = parts.front().sample_rate_hz;
  for (const auto& p0 : parts) {
    if (p0.sample_rate_hz != out.sample_rate_hz) throw DomainError("trajectory rates differ");
    const auto p = with_derivatives(p0);
    out.displacement_mm.insert(out.displacement_mm.end(), p.displacement_mm.begin(), p.displacement_mm.end());
    out.velocity_mm_s.insert(out.velocity_mm_s.end(), p.velocity_mm_s.begin(), p.velocity_mm_s.end());
    out.acceleration_mm_s2.insert(out.acceleration_mm_s2.end(), p.acceleration_mm_s2.begin(),
                                  p.acceleration_mm_s2.end());
  }
  return out;
}

}  // namespace pressem
