#pragma once

// Software version of the button's real-time loop: one call to tick() per
// sensor reading at a fixed rate (1 kHz by default).

#include <algorithm>
#include <array>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pressem/compensation.hpp"
#include "pressem/fdvv.hpp"
#include "pressem/plant.hpp"
#include "pressem/trace.hpp"
#include "pressem/trajectory.hpp"
#include "pressem/vibration.hpp"

namespace pressem {

enum class BehaviorKind { standard, fast_tap, cooldown, vibration_ticks };

std::string_view to_string(BehaviorKind kind);
BehaviorKind parse_behavior_kind(std::string_view text);

struct ButtonBehavior {
  BehaviorKind kind = BehaviorKind::standard;
  // fast_tap: after a press the key is let go (duty 0) for drop_ms, then
  // pushed back (duty 1) until the reading falls to return_threshold_mm,
  // where presses re-arm.
  double return_threshold_mm = 3.0;
  double drop_ms = 20.0;
  // cooldown: after each release, presses are ignored (and the key is not
  // pushed back) for the next delay in the schedule. The last entry repeats.
  std::vector<double> return_delay_ms = {500.0};
  // vibration_ticks: while pressed at or beyond hold_mm, a burst every
  // period_ms. hold_mm <= 0 means the press threshold.
  double period_ms = 100.0;
  double hold_mm = 0.0;
  double burst_ms = 8.0;

  friend bool operator==(const ButtonBehavior&, const ButtonBehavior&) = default;
};

struct RendererConfig {
  double tick_rate_hz = 1000.0;
  std::size_t filter_window = 5;  // odd
  std::size_t velocity_span_ticks = 5;
  double direction_deadband_mm_s = 2.0;
  // Extrapolate the filtered displacement over the filter's group delay.
  bool lag_compensation = true;
  // <= 0 means the table's grid travel.
  double travel_range_mm = 0.0;
  std::size_t servo_settle_ticks = 0;
  double press_threshold_fraction = 0.9;
  double release_threshold_fraction = 0.5;
  double sensor_fault_margin_mm = 0.1;
  ButtonBehavior behavior;

  friend bool operator==(const RendererConfig&, const RendererConfig&) = default;
};

std::vector<Violation> validate_renderer_config(const RendererConfig& config, const ActuationTable& table);

enum class EventKind {
  press_registered,
  release_registered,
  vibration_started,
  auto_return_started,
  sensor_fault,
};

std::string_view to_string(EventKind kind);

inline constexpr int kBurstTag = -2;

struct Event {
  EventKind kind = EventKind::press_registered;
  int tag = -1;  // vibration_started: profile index or kBurstTag

  friend bool operator==(const Event&, const Event&) = default;
};

// "press_registered", "vibration_started:0", "vibration_started:tick", ...
std::string format_event(const Event& event);

// Fixed-capacity list so ticks never allocate.
class EventList {
 public:
  static constexpr std::size_t kCapacity = 8;
  void push(Event e) {
    if (size_ < kCapacity) items_[size_++] = e;
  }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  const Event* begin() const { return items_.data(); }
  const Event* end() const { return items_.data() + size_; }
  std::size_t count(EventKind kind) const;

  friend bool operator==(const EventList& a, const EventList& b) {
    return a.size_ == b.size_ && std::equal(a.begin(), a.end(), b.begin());
  }

 private:
  std::array<Event, kCapacity> items_{};
  std::size_t size_ = 0;
};

struct TickOutput {
  std::uint64_t tick = 0;
  double raw_mm = 0.0;
  double filtered_mm = 0.0;
  double velocity_mm_s = 0.0;
  Direction direction = Direction::release;
  double duty = 0.0;
  double vibration = 0.0;
  EventList events;
  std::optional<double> servo_target_mm;

  friend bool operator==(const TickOutput&, const TickOutput&) = default;
};

class Renderer {
 public:
  // Vibration profiles are copied. Throws DomainError for invalid config or
  // table.
  Renderer(RendererConfig config, ActuationTable table, std::vector<VibrationProfile> vibrations = {});

  TickOutput tick(double sensor_displacement_mm);

  // Queues a travel-range change, applied at the start of the next tick.
  // Safe to call from another thread. Throws DomainError unless
  // 0 < target <= table travel.
  void set_travel_range(double target_mm);

  double travel_limit_mm() const { return travel_limit_; }
  std::uint64_t ticks() const { return tick_; }
  std::size_t presses() const { return presses_; }
  const RendererConfig& config() const { return config_; }

 private:
  enum class TapPhase { idle, drop, push_back };

  void apply_commands(TickOutput& out);
  double slope_per_tick() const;
  void update_vibration(double estimate, TickOutput& out);
  double update_behavior(double duty, double estimate, TickOutput& out);
  std::size_t ms_to_ticks(double ms) const;

  RendererConfig config_;
  ActuationTable table_;
  std::vector<VibrationProfile> vibrations_;
  std::vector<double> burst_;
  VibrationMixer mixer_;

  std::vector<double> raw_;    // ring, filter_window
  std::vector<double> filt_;   // ring, velocity_span_ticks
  std::size_t raw_count_ = 0;
  std::size_t filt_count_ = 0;

  std::uint64_t tick_ = 0;
  Direction direction_ = Direction::release;
  double last_duty_ = 0.0;
  double last_estimate_ = 0.0;
  bool have_estimate_ = false;
  std::vector<char> vib_armed_;

  double travel_limit_ = 0.0;
  std::optional<double> pending_travel_;
  std::size_t settle_remaining_ = 0;

  bool armed_ = true;
  bool pressed_ = false;
  std::size_t presses_ = 0;
  TapPhase tap_phase_ = TapPhase::idle;
  std::size_t tap_remaining_ = 0;
  std::size_t cooldown_remaining_ = 0;
  std::size_t cooldown_index_ = 0;
  bool holding_ = false;
  std::size_t burst_countdown_ = 0;

  std::mutex command_mutex_;
  std::vector<double> commands_;
};

// Reading script through a fresh tick loop.
std::vector<TickOutput> run_script(Renderer& renderer, std::span<const double> readings);

struct SessionResult {
  PressTrace trace;
  std::vector<TickOutput> ticks;
};

// Couples the renderer with the plant tick by tick. Throws DomainError when
// the trajectory rate differs from the renderer's tick rate.
SessionResult run_session(Renderer& renderer, const PlantConfig& plant, const FingerTrajectory& trajectory);

// CSV `tick,disp_raw_mm,disp_filt_mm,vel_mm_s,duty,vib,events`, events
// joined by '|'.
inline constexpr std::string_view kSessionLogHeader = "tick,disp_raw_mm,disp_filt_mm,vel_mm_s,duty,vib,events";
std::string format_session_log(std::span<const TickOutput> ticks);

// Mean |reference - rendered| force over ticks where the finger moves. The
// reference is looked up at the true displacement and speed, with the
// direction of motion (held through stops).
struct RenderError {
  double mean_abs_cN = 0.0;
  double max_abs_cN = 0.0;
  std::size_t samples = 0;
};
RenderError render_error(const FDVVModel& reference, const FingerTrajectory& trajectory, const PressTrace& rendered);

}  // namespace pressem
