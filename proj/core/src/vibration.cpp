#include "pressem/vibration.hpp"

#include <algorithm>
#include <cmath>

#include "pressem/errors.hpp"

namespace pressem {

VibrationMixer::VibrationMixer(double tick_rate_hz, std::size_t capacity) : tick_rate_hz_(tick_rate_hz) {
  if (!(tick_rate_hz > 0.0)) throw DomainError("tick rate must be > 0");
  voices_.reserve(capacity);
}

void VibrationMixer::start(std::span<const double> samples, double sample_rate_hz, int tag) {
  if (samples.empty()) return;
  if (!(sample_rate_hz > 0.0)) throw DomainError("vibration sample rate must be > 0");
  voices_.push_back({samples, sample_rate_hz / tick_rate_hz_, 0, tag});
}

void VibrationMixer::stop(int tag) {
  std::erase_if(voices_, [tag](const Voice& v) { return v.tag == tag; });
}

void VibrationMixer::stop_all() { voices_.clear(); }

double VibrationMixer::next() {
  double mix = 0.0;
  for (auto& v : voices_) {
    const auto idx = static_cast<std::size_t>(std::floor(static_cast<double>(v.elapsed_ticks) * v.ratio));
    if (idx < v.samples.size()) mix += v.samples[idx];
    ++v.elapsed_ticks;
  }
  std::erase_if(voices_, [](const Voice& v) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(v.elapsed_ticks) * v.ratio)) >= v.samples.size();
  });
  return std::clamp(mix, -1.0, 1.0);
}

}  // namespace pressem
