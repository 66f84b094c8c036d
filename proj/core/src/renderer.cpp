#include "pressem/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pressem/errors.hpp"
#include "pressem/trace_io.hpp"

namespace pressem {

std::string_view to_string(BehaviorKind kind) {
  switch (kind) {
    case BehaviorKind::standard:
      return "standard";
    case BehaviorKind::fast_tap:
      return "fast_tap";
    case BehaviorKind::cooldown:
      return "cooldown";
    case BehaviorKind::vibration_ticks:
      return "vibration_ticks";
  }
  return "unknown";
}

BehaviorKind parse_behavior_kind(std::string_view text) {
  for (auto k : {BehaviorKind::standard, BehaviorKind::fast_tap, BehaviorKind::cooldown,
                 BehaviorKind::vibration_ticks}) {
    if (text == to_string(k)) return k;
  }
  throw DomainError("unknown behavior '" + std::string(text) + "'");
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::press_registered:
      return "press_registered";
    case EventKind::release_registered:
      return "release_registered";
    case EventKind::vibration_started:
      return "vibration_started";
    case EventKind::auto_return_started:
      return "auto_return_started";
    case EventKind::sensor_fault:
      return "sensor_fault";
  }
  return "unknown";
}

std::string format_event(const Event& e) {
  std::string s(to_string(e.kind));
  if (e.kind == EventKind::vibration_started) {
    s += e.tag == kBurstTag ? ":tick" : ":" + std::to_string(e.tag);
  }
  return s;
}

std::size_t EventList::count(EventKind kind) const {
  return static_cast<std::size_t>(std::count_if(begin(), end(), [kind](const Event& e) { return e.kind == kind; }));
}

std::vector<Violation> validate_renderer_config(const RendererConfig& c, const ActuationTable& table) {
  std::vector<Violation> out;
  if (!(c.tick_rate_hz > 0.0) || !std::isfinite(c.tick_rate_hz)) out.push_back({"tick_rate_hz", "must be > 0"});
  if (c.filter_window == 0 || c.filter_window % 2 == 0) out.push_back({"filter_window", "must be odd and >= 1"});
  if (c.velocity_span_ticks < 2) out.push_back({"velocity_span_ticks", "must be >= 2"});
  if (!(c.direction_deadband_mm_s >= 0.0)) out.push_back({"direction_deadband_mm_s", "must be >= 0"});
  const double travel = table.grid.travel_mm;
  if (c.travel_range_mm > travel) out.push_back({"travel_range_mm", "must not exceed the table travel"});
  if (!(c.press_threshold_fraction > 0.0 && c.press_threshold_fraction <= 1.0)) {
    out.push_back({"press_threshold_fraction", "must be in (0, 1]"});
  }
  if (!(c.release_threshold_fraction >= 0.0 && c.release_threshold_fraction < c.press_threshold_fraction)) {
    out.push_back({"release_threshold_fraction", "must be in [0, press_threshold_fraction)"});
  }
  if (!(c.sensor_fault_margin_mm >= 0.0)) out.push_back({"sensor_fault_margin_mm", "must be >= 0"});
  const auto& b = c.behavior;
  switch (b.kind) {
    case BehaviorKind::standard:
      break;
    case BehaviorKind::fast_tap:
      if (!(b.return_threshold_mm > 0.0)) out.push_back({"behavior.return_threshold_mm", "must be > 0"});
      if (!(b.drop_ms > 0.0)) out.push_back({"behavior.drop_ms", "must be > 0"});
      break;
    case BehaviorKind::cooldown:
      if (b.return_delay_ms.empty() ||
          !std::all_of(b.return_delay_ms.begin(), b.return_delay_ms.end(), [](double v) { return v > 0.0; })) {
        out.push_back({"behavior.return_delay_ms", "must be a non-empty list of positive delays"});
      }
      break;
    case BehaviorKind::vibration_ticks:
      if (!(b.period_ms > 0.0)) out.push_back({"behavior.period_ms", "must be > 0"});
      if (!(b.burst_ms > 0.0)) out.push_back({"behavior.burst_ms", "must be > 0"});
      if (!(b.hold_mm >= 0.0)) out.push_back({"behavior.hold_mm", "must be >= 0"});
      break;
  }
  return out;
}

Renderer::Renderer(RendererConfig config, ActuationTable table, std::vector<VibrationProfile> vibrations)
    : config_(std::move(config)),
      table_(std::move(table)),
      vibrations_(std::move(vibrations)),
      mixer_(config_.tick_rate_hz > 0.0 ? config_.tick_rate_hz : 1.0, vibrations_.size() + 2) {
  if (const auto v = validate_table(table_); !v.empty()) {
    throw DomainError("actuation table invalid (" + v.front().field + ": " + v.front().rule + ")");
  }
  if (const auto v = validate_renderer_config(config_, table_); !v.empty()) {
    throw DomainError("renderer config invalid (" + v.front().field + ": " + v.front().rule + ")");
  }
  for (const auto& vp : vibrations_) {
    if (!(vp.sample_rate_hz > 0.0)) throw DomainError("vibration sample rate must be > 0");
  }
  travel_limit_ = config_.travel_range_mm > 0.0 ? config_.travel_range_mm : table_.grid.travel_mm;
  raw_.assign(config_.filter_window, 0.0);
  filt_.assign(config_.velocity_span_ticks, 0.0);
  vib_armed_.assign(vibrations_.size(), 1);
  commands_.reserve(4);

  // Short Hann-windowed 250 Hz tick.
  const std::size_t n = std::max<std::size_t>(1, ms_to_ticks(config_.behavior.burst_ms));
  burst_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / config_.tick_rate_hz;
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    burst_[i] = w * std::cos(2.0 * std::numbers::pi * 250.0 * t);
  }
}

std::size_t Renderer::ms_to_ticks(double ms) const {
  return static_cast<std::size_t>(std::llround(ms * config_.tick_rate_hz / 1000.0));
}

void Renderer::set_travel_range(double target_mm) {
  if (!(target_mm > 0.0) || !(target_mm <= table_.grid.travel_mm)) {
    throw DomainError("travel range must be in (0, " + format_number(table_.grid.travel_mm) + "] mm");
  }
  std::lock_guard lock(command_mutex_);
  commands_.push_back(target_mm);
}

void Renderer::apply_commands(TickOutput& out) {
  {
    std::lock_guard lock(command_mutex_);
    for (double target : commands_) {
      const double current = pending_travel_.value_or(travel_limit_);
      if (target == current) continue;
      out.servo_target_mm = target;
      if (target == travel_limit_) {
        pending_travel_.reset();
        settle_remaining_ = 0;
      } else {
        pending_travel_ = target;
        settle_remaining_ = config_.servo_settle_ticks;
      }
    }
    commands_.clear();
  }
  if (pending_travel_) {
    if (settle_remaining_ == 0) {
      travel_limit_ = *pending_travel_;
      pending_travel_.reset();
    } else {
      --settle_remaining_;
    }
  }
}

double Renderer::slope_per_tick() const {
  const std::size_t span = filt_.size();
  const std::size_t k = std::min(filt_count_, span);
  if (k < 2) return 0.0;
  // Oldest of the last k values sits at index (filt_count_ - k) % span.
  const double mean_i = static_cast<double>(k - 1) / 2.0;
  double mean_y = 0.0;
  for (std::size_t j = 0; j < k; ++j) mean_y += filt_[(filt_count_ - k + j) % span];
  mean_y /= static_cast<double>(k);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double di = static_cast<double>(j) - mean_i;
    sxy += di * (filt_[(filt_count_ - k + j) % span] - mean_y);
    sxx += di * di;
  }
  return sxy / sxx;
}

void Renderer::update_vibration(double estimate, TickOutput& out) {
  if (!have_estimate_) return;
  for (std::size_t i = 0; i < vibrations_.size(); ++i) {
    const auto& vp = vibrations_[i];
    if (!vib_armed_[i] || vp.direction != direction_) continue;
    const bool crossed = vp.direction == Direction::press ? last_estimate_ < vp.trigger_mm && estimate >= vp.trigger_mm
                                                          : last_estimate_ > vp.trigger_mm && estimate <= vp.trigger_mm;
    if (!crossed) continue;
    vib_armed_[i] = 0;
    mixer_.start(vp.samples, vp.sample_rate_hz, static_cast<int>(i));
    out.events.push({EventKind::vibration_started, static_cast<int>(i)});
  }
}

double Renderer::update_behavior(double duty, double d, TickOutput& out) {
  const auto& b = config_.behavior;
  const double press_thr = config_.press_threshold_fraction * travel_limit_;
  const double release_thr =
      b.kind == BehaviorKind::fast_tap ? b.return_threshold_mm : config_.release_threshold_fraction * travel_limit_;

  if (cooldown_remaining_ > 0) --cooldown_remaining_;

  if (armed_ && d >= press_thr) {
    armed_ = false;
    if (cooldown_remaining_ == 0) {
      pressed_ = true;
      ++presses_;
      out.events.push({EventKind::press_registered});
      if (b.kind == BehaviorKind::fast_tap) {
        out.events.push({EventKind::auto_return_started});
        tap_phase_ = TapPhase::drop;
        tap_remaining_ = std::max<std::size_t>(1, ms_to_ticks(b.drop_ms));
      }
    }
  } else if (!armed_ && d <= release_thr) {
    armed_ = true;
    tap_phase_ = TapPhase::idle;
    if (pressed_) {
      pressed_ = false;
      out.events.push({EventKind::release_registered});
      if (b.kind == BehaviorKind::cooldown) {
        const auto& sched = b.return_delay_ms;
        cooldown_remaining_ = ms_to_ticks(sched[std::min(cooldown_index_, sched.size() - 1)]);
        ++cooldown_index_;
      }
    }
  }

  if (b.kind == BehaviorKind::vibration_ticks) {
    const double hold_thr = b.hold_mm > 0.0 ? b.hold_mm : press_thr;
    if (pressed_ && d >= hold_thr) {
      if (!holding_) {
        holding_ = true;
        burst_countdown_ = 0;
      }
      if (burst_countdown_ == 0) {
        mixer_.start(burst_, config_.tick_rate_hz, kBurstTag);
        out.events.push({EventKind::vibration_started, kBurstTag});
        burst_countdown_ = std::max<std::size_t>(1, ms_to_ticks(b.period_ms));
      }
      --burst_countdown_;
    } else {
      holding_ = false;
    }
  }

  switch (tap_phase_) {
    case TapPhase::idle:
      break;
    case TapPhase::drop:
      duty = 0.0;
      if (--tap_remaining_ == 0) tap_phase_ = TapPhase::push_back;
      break;
    case TapPhase::push_back:
      duty = 1.0;
      break;
  }
  if (b.kind == BehaviorKind::cooldown && cooldown_remaining_ > 0) duty = 0.0;
  return duty;
}

TickOutput Renderer::tick(double reading) {
  TickOutput out;
  out.tick = tick_++;
  out.raw_mm = reading;
  apply_commands(out);

  const double margin = config_.sensor_fault_margin_mm;
  if (!std::isfinite(reading) || reading < -margin || reading > travel_limit_ + margin) {
    out.events.push({EventKind::sensor_fault});
    out.duty = last_duty_;
    out.direction = direction_;
    out.filtered_mm = filt_count_ ? filt_[(filt_count_ - 1) % filt_.size()] : 0.0;
    out.vibration = mixer_.next();
    return out;
  }

  const double x = std::clamp(reading, 0.0, travel_limit_);
  const std::size_t w = raw_.size();
  raw_[raw_count_ % w] = x;
  ++raw_count_;
  const std::size_t kw = std::min(raw_count_, w);
  double sum = 0.0;
  for (std::size_t j = 0; j < kw; ++j) sum += raw_[(raw_count_ - 1 - j) % w];
  const double filtered = sum / static_cast<double>(kw);
  filt_[filt_count_ % filt_.size()] = filtered;
  ++filt_count_;

  const double slope = slope_per_tick();
  const double velocity = slope * config_.tick_rate_hz;
  const double db = config_.direction_deadband_mm_s;
  Direction dir = direction_;
  if (velocity > db) dir = Direction::press;
  if (velocity < -db) dir = Direction::release;
  if (dir != direction_) {
    // A stroke ends at a reversal: stop its playback and re-arm triggers.
    for (std::size_t i = 0; i < vibrations_.size(); ++i) {
      mixer_.stop(static_cast<int>(i));
      vib_armed_[i] = 1;
    }
    direction_ = dir;
  }

  double estimate = filtered;
  if (config_.lag_compensation) estimate += slope * static_cast<double>(kw - 1) / 2.0;
  estimate = std::clamp(estimate, 0.0, travel_limit_);

  update_vibration(estimate, out);
  double duty = table_.lookup(estimate, std::abs(velocity), direction_);
  duty = std::clamp(update_behavior(duty, estimate, out), 0.0, 1.0);

  last_estimate_ = estimate;
  have_estimate_ = true;
  last_duty_ = duty;
  out.filtered_mm = filtered;
  out.velocity_mm_s = velocity;
  out.direction = direction_;
  out.duty = duty;
  out.vibration = mixer_.next();
  return out;
}

std::vector<TickOutput> run_script(Renderer& renderer, std::span<const double> readings) {
  std::vector<TickOutput> out;
  out.reserve(readings.size());
  for (double r : readings) out.push_back(renderer.tick(r));
  return out;
}

namespace {

class RecordingController final : public Controller {
 public:
  RecordingController(Renderer& r, std::vector<TickOutput>& log) : renderer_(r), log_(log) {}
  ControlOutput step(double sensed) override {
    log_.push_back(renderer_.tick(sensed));
    return {log_.back().duty, log_.back().vibration};
  }

 private:
  Renderer& renderer_;
  std::vector<TickOutput>& log_;
};

}  // namespace

SessionResult run_session(Renderer& renderer, const PlantConfig& plant, const FingerTrajectory& trajectory) {
  if (trajectory.sample_rate_hz != renderer.config().tick_rate_hz) {
    throw DomainError("trajectory rate does not match the renderer tick rate");
  }
  SessionResult out;
  out.ticks.reserve(trajectory.size());
  RecordingController controller(renderer, out.ticks);
  out.trace = simulate_press(plant, trajectory, controller, trajectory.sample_rate_hz);
  out.trace.source = "rendered";
  return out;
}

std::string format_session_log(std::span<const TickOutput> ticks) {
  std::string s(kSessionLogHeader);
  s += '\n';
  for (const auto& t : ticks) {
    s += std::to_string(t.tick);
    for (double v : {t.raw_mm, t.filtered_mm, t.velocity_mm_s, t.duty, t.vibration}) {
      s += ',';
      s += format_number(v);
    }
    s += ',';
    bool first = true;
    for (const auto& e : t.events) {
      if (!first) s += '|';
      s += format_event(e);
      first = false;
    }
    if (t.servo_target_mm) {
      if (!first) s += '|';
      s += "servo_target_mm=" + format_number(*t.servo_target_mm);
    }
    s += '\n';
  }
  return s;
}

RenderError render_error(const FDVVModel& reference, const FingerTrajectory& trajectory0, const PressTrace& rendered) {
  const auto trajectory = with_derivatives(trajectory0);
  if (rendered.size() != trajectory.size()) throw DomainError("trace and trajectory lengths differ");
  RenderError out;
  Direction dir = Direction::press;
  double sum = 0.0;
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    const double v = trajectory.velocity_mm_s[k];
    if (v > 0.0) dir = Direction::press;
    if (v < 0.0) dir = Direction::release;
    if (v == 0.0) continue;
    const double d = std::clamp(trajectory.displacement_mm[k], 0.0, reference.grid.travel_mm);
    const double e = std::abs(lookup_force(reference, d, std::abs(v), dir) - rendered.force_cN[k]);
    sum += e;
    out.max_abs_cN = std::max(out.max_abs_cN, e);
    ++out.samples;
  }
  out.mean_abs_cN = out.samples ? sum / static_cast<double>(out.samples) : 0.0;
  return out;
}

}  // namespace pressem
