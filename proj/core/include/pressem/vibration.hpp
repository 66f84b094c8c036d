#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pressem {

// Plays stored waveforms on a tick clock. Simultaneous playbacks are summed
// and the mix clamped to [-1, 1]. Profiles play at their own sample rate
// (nearest-previous sample per tick).
class VibrationMixer {
 public:
  explicit VibrationMixer(double tick_rate_hz, std::size_t capacity = 8);

  // The waveform must outlive its playback.
  void start(std::span<const double> samples, double sample_rate_hz, int tag = -1);
  // Stops playbacks started with `tag`.
  void stop(int tag);
  void stop_all();

  // Mixed sample for the current tick; advances every playback by one tick.
  double next();
  std::size_t active() const { return voices_.size(); }

 private:
  struct Voice {
    std::span<const double> samples;
    double ratio;  // waveform samples per tick
    std::size_t elapsed_ticks;
    int tag;
  };
  double tick_rate_hz_;
  std::vector<Voice> voices_;
};

}  // namespace pressem
