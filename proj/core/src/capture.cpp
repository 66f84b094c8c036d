#include "pressem/capture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pressem/errors.hpp"
#include "pressem/resample.hpp"

namespace pressem {

std::vector<std::string> check_trace(const PressTrace& trace, std::optional<double> travel_mm,
                                     double tolerance_mm) {
  std::vector<std::string> out;
  if (!(trace.sample_rate_hz > 0.0) || !std::isfinite(trace.sample_rate_hz)) {
    out.push_back("sample_rate_hz must be > 0");
  }
  const std::size_t n = trace.displacement_mm.size();
  if (trace.force_cN.size() != n || trace.vibration.size() != n) {
    out.push_back("columns differ in length");
    return out;
  }
  if (n < 2) out.push_back("trace needs at least 2 samples");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(trace.displacement_mm[i]) || !std::isfinite(trace.force_cN[i]) ||
        !std::isfinite(trace.vibration[i])) {
      out.push_back("non-finite value at sample " + std::to_string(i));
      break;
    }
    if (travel_mm && (trace.displacement_mm[i] < -tolerance_mm ||
                      trace.displacement_mm[i] > *travel_mm + tolerance_mm)) {
      out.push_back("displacement outside travel at sample " + std::to_string(i));
      break;
    }
  }
  return out;
}

std::vector<double> moving_average(std::span<const double> signal, std::size_t window) {
  if (window == 0 || window % 2 == 0) throw DomainError("moving average window must be odd and >= 1");
  if (window > signal.size()) throw DomainError("moving average window exceeds signal length");
  const std::size_t n = signal.size();
  if (window == 1) return {signal.begin(), signal.end()};
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  auto at = [&](std::ptrdiff_t i) { return signal[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, last))]; };

  std::vector<double> out(n);
  // Running sum, recomputed exactly every block to bound drift.
  constexpr std::size_t kRefresh = 1024;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::ptrdiff_t>(i);
    if (i % kRefresh == 0) {
      sum = 0.0;
      for (std::ptrdiff_t j = c - half; j <= c + half; ++j) sum += at(j);
    } else {
      sum += at(c + half) - at(c - half - 1);
    }
    out[i] = sum / static_cast<double>(window);
  }
  // A window of identical values must reproduce them exactly.
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::ptrdiff_t>(i);
    const double lo = std::min(at(c - half), at(c + half));
    const double hi = std::max(at(c - half), at(c + half));
    if (lo == hi) {
      bool flat = true;
      for (std::ptrdiff_t j = c - half; j <= c + half && flat; ++j) flat = at(j) == lo;
      if (flat) out[i] = lo;
    }
  }
  return out;
}

std::vector<double> estimate_velocity(std::span<const double> d, double sample_rate_hz) {
  const std::size_t n = d.size();
  if (n < 2) throw DomainError("velocity estimate needs at least 2 samples");
  if (!(sample_rate_hz > 0.0)) throw DomainError("sample rate must be > 0");
  std::vector<double> v(n);
  if (n == 2) {
    v[0] = v[1] = (d[1] - d[0]) * sample_rate_hz;
    return v;
  }
  const double half_rate = 0.5 * sample_rate_hz;
  for (std::size_t i = 1; i + 1 < n; ++i) v[i] = (d[i + 1] - d[i - 1]) * half_rate;
  v[0] = (-3.0 * d[0] + 4.0 * d[1] - d[2]) * half_rate;
  v[n - 1] = (3.0 * d[n - 1] - 4.0 * d[n - 2] + d[n - 3]) * half_rate;
  return v;
}

namespace {

int phase_sign(Direction d) { return d == Direction::press ? 1 : -1; }

struct Run {
  std::size_t begin, end;
  int sign;
};

double net_travel(std::span<const double> d, const Run& r) {
  return (d[r.end - 1] - d[r.begin]) * r.sign;
}

std::vector<Run> merge_same_sign(const std::vector<Run>& runs) {
  std::vector<Run> out;
  for (const auto& r : runs) {
    if (!out.empty() && out.back().sign == r.sign) {
      out.back().end = r.end;
    } else {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<PressSegment> segment_with_velocity(std::span<const double> d, std::span<const double> v,
                                                const SegmentationConfig& config) {
  const double db = config.velocity_deadband_mm_s;
  std::vector<Run> runs;
  for (std::size_t i = 0; i < d.size();) {
    const int s = v[i] > db ? 1 : (v[i] < -db ? -1 : 0);
    if (s == 0) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < d.size() && (s > 0 ? v[j] > db : v[j] < -db)) ++j;
    runs.push_back({i, j, s});
    i = j;
  }

  runs = merge_same_sign(runs);
  for (;;) {
    std::vector<Run> kept;
    for (const auto& r : runs) {
      if (net_travel(d, r) >= config.min_travel_mm) kept.push_back(r);
    }
    auto merged = merge_same_sign(kept);
    const bool stable = merged.size() == runs.size();
    runs = std::move(merged);
    if (stable) break;
  }

  std::vector<PressSegment> out;
  out.reserve(runs.size());
  for (const auto& r : runs) {
    PressSegment seg;
    seg.begin = r.begin;
    seg.end = r.end;
    seg.phase = r.sign > 0 ? Direction::press : Direction::release;
    double sum = 0.0, peak = 0.0;
    std::size_t count = 0;
    for (std::size_t i = r.begin; i < r.end; ++i) {
      if (v[i] * r.sign > db) {
        sum += v[i];
        ++count;
        if (std::abs(v[i]) > std::abs(peak)) peak = v[i];
      }
    }
    seg.mean_velocity_mm_s = count ? sum / static_cast<double>(count) : 0.0;
    seg.peak_velocity_mm_s = peak;
    out.push_back(seg);
  }
  return out;
}

}  // namespace

std::vector<PressSegment> segment_presses(const PressTrace& trace, const SegmentationConfig& config) {
  const auto& d = trace.displacement_mm;
  if (d.size() < 2) return {};
  const auto v = estimate_velocity(d, trace.sample_rate_hz);
  return segment_with_velocity(d, v, config);
}

std::vector<Violation> validate_capture_config(const CaptureConfig& config) {
  std::vector<Violation> out;
  const auto& s = config.segmentation;
  if (s.filter_window == 0 || s.filter_window % 2 == 0) {
    out.push_back({"filter_window", "must be odd and >= 1"});
  }
  if (!(s.velocity_deadband_mm_s >= 0.0)) out.push_back({"segment_velocity_deadband_mm_s", "must be >= 0"});
  if (!(s.min_travel_mm >= 0.0)) out.push_back({"segment_min_travel_mm", "must be >= 0"});
  if (!config.grid.is_valid()) out.push_back({"grid", "travel_mm / step_mm must be a positive integer"});
  auto bins = validate_bins(config.bins);
  out.insert(out.end(), bins.begin(), bins.end());
  if (!(config.vibration_onset_threshold > 0.0)) {
    out.push_back({"vibration_onset_threshold", "must be > 0"});
  }
  if (!(config.vibration_window_ms > 0.0)) out.push_back({"vibration_window_ms", "must be > 0"});
  if (!(config.vibration_energy_window_ms > 0.0)) {
    out.push_back({"vibration_energy_window_ms", "must be > 0"});
  }
  return out;
}

PhaseSamples extract_phase_samples(const PressTrace& trace, const PressSegment& segment) {
  const auto& d = trace.displacement_mm;
  const int sign = phase_sign(segment.phase);
  const std::size_t n = d.size();
  PhaseSamples out;
  // The deadband trims the slow start and end of a stroke; recover them while
  // the raw displacement keeps moving the same way.
  std::size_t begin = std::min(segment.begin, n);
  std::size_t end = std::min(segment.end, n);
  while (begin > 0 && begin < n && (d[begin] - d[begin - 1]) * sign > 0.0) --begin;
  while (end > 0 && end < n && (d[end] - d[end - 1]) * sign > 0.0) ++end;
  double extreme = -std::numeric_limits<double>::infinity();
  for (std::size_t i = begin; i < end; ++i) {
    const double prev = d[i == 0 ? 0 : i - 1];
    const double next = d[i + 1 < n ? i + 1 : i];
    if ((next - prev) * sign <= 0.0) continue;
    const double x = d[i] * sign;
    if (!(x > extreme)) continue;
    extreme = x;
    out.displacement_mm.push_back(d[i]);
    out.force_cN.push_back(trace.force_cN[i]);
  }
  return out;
}

std::optional<VibrationProfile> extract_vibration(const PressTrace& trace, const PressSegment& segment,
                                                  const CaptureConfig& config) {
  const auto& vib = trace.vibration;
  const std::size_t end = std::min(segment.end, vib.size());
  if (segment.begin >= end) return std::nullopt;
  const double fs = trace.sample_rate_hz;
  const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(config.vibration_energy_window_ms * fs / 1000.0)));

  // Trailing-window mean energy.
  std::vector<double> energy(end - segment.begin);
  double acc = 0.0;
  for (std::size_t i = segment.begin; i < end; ++i) {
    acc += vib[i] * vib[i];
    if (i >= segment.begin + w) acc -= vib[i - w] * vib[i - w];
    const std::size_t len = std::min(w, i - segment.begin + 1);
    energy[i - segment.begin] = std::max(0.0, acc) / static_cast<double>(len);
  }
  std::vector<double> sorted = energy;
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double cut = config.vibration_onset_threshold * *mid;

  std::optional<std::size_t> onset;
  for (std::size_t k = 0; k < energy.size(); ++k) {
    if (energy[k] > cut) {
      onset = segment.begin + k;
      break;
    }
  }
  if (!onset) return std::nullopt;

  const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(config.vibration_window_ms * fs / 1000.0)));
  const std::size_t stop = std::min(vib.size(), *onset + len);
  std::vector<double> samples(vib.begin() + static_cast<std::ptrdiff_t>(*onset),
                              vib.begin() + static_cast<std::ptrdiff_t>(stop));
  double peak = 0.0;
  for (double s : samples) peak = std::max(peak, std::abs(s));
  if (!(peak > 0.0)) return std::nullopt;
  for (double& s : samples) s = std::clamp(s / peak, -1.0, 1.0);

  VibrationProfile vp;
  vp.trigger_mm = std::max(0.0, trace.displacement_mm[*onset]);
  vp.direction = segment.phase;
  vp.sample_rate_hz = fs;
  vp.samples = std::move(samples);
  return vp;
}

std::optional<std::size_t> assign_bin(std::span<const VelocityBin> bins, const PressSegment& segment) {
  const double speed = std::abs(segment.peak_velocity_mm_s);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].contains(speed)) return i;
  }
  return std::nullopt;
}

namespace {

struct CurveAccumulator {
  std::vector<GridEstimate> members;
};

double aggregate(std::vector<double>& values, CurveAggregation mode) {
  if (mode == CurveAggregation::mean) {
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

std::string bin_label(const VelocityBin& b, std::size_t i) {
  return "bin " + std::to_string(i) + " [" + std::to_string(b.lo_mm_s) + ", " + std::to_string(b.hi_mm_s) +
         ") mm/s";
}

VibrationProfile average_profiles(const std::vector<VibrationProfile>& profiles) {
  VibrationProfile out = profiles.front();
  std::size_t len = out.samples.size();
  double trigger = 0.0;
  std::size_t used = 0;
  for (const auto& p : profiles) {
    if (p.sample_rate_hz != out.sample_rate_hz) continue;
    len = std::min(len, p.samples.size());
    trigger += p.trigger_mm;
    ++used;
  }
  out.trigger_mm = trigger / static_cast<double>(used);
  out.samples.assign(len, 0.0);
  for (const auto& p : profiles) {
    if (p.sample_rate_hz != out.sample_rate_hz) continue;
    for (std::size_t i = 0; i < len; ++i) out.samples[i] += p.samples[i] / static_cast<double>(used);
  }
  double peak = 0.0;
  for (double s : out.samples) peak = std::max(peak, std::abs(s));
  if (peak > 0.0) {
    for (double& s : out.samples) s = std::clamp(s / peak, -1.0, 1.0);
  }
  return out;
}

}  // namespace

FDVVModel fit_model(std::span<const PressTrace> traces, const CaptureConfig& config) {
  const auto problems = validate_capture_config(config);
  if (!problems.empty()) {
    throw DomainError("capture config: " + problems.front().field + " " + problems.front().rule);
  }
  if (traces.empty()) throw FitError("no traces");

  const std::size_t npts = config.grid.point_count();
  const std::size_t nbins = config.bins.size();
  std::vector<CurveAccumulator> acc(2 * nbins);
  auto slot = [&](Direction d, std::size_t b) -> CurveAccumulator& {
    return acc[(d == Direction::press ? 0 : nbins) + b];
  };
  std::vector<VibrationProfile> vib[2];
  std::size_t seg_count[2] = {0, 0};

  for (const auto& trace : traces) {
    const auto issues = check_trace(trace, config.grid.travel_mm);
    if (!issues.empty()) throw DomainError("trace '" + trace.source + "': " + issues.front());
    if (config.segmentation.filter_window > trace.size()) {
      throw DomainError("trace '" + trace.source + "' is shorter than the filter window");
    }
    PressTrace filtered = trace;
    filtered.displacement_mm = moving_average(trace.displacement_mm, config.segmentation.filter_window);
    for (const auto& seg : segment_presses(filtered, config.segmentation)) {
      const int di = seg.phase == Direction::press ? 0 : 1;
      ++seg_count[di];
      if (auto vp = extract_vibration(trace, seg, config)) {
        vp->trigger_mm = std::min(vp->trigger_mm, config.grid.travel_mm);
        vib[di].push_back(std::move(*vp));
      }
      const auto bin = assign_bin(config.bins, seg);
      if (!bin) continue;
      const auto samples = extract_phase_samples(trace, seg);
      auto est = fit_grid(config.grid, samples.displacement_mm, samples.force_cN);
      if (est.covered_count() > 0) slot(seg.phase, *bin).members.push_back(std::move(est));
    }
  }

  FDVVModel model;
  model.name = config.model_name;
  model.grid = config.grid;
  model.bins = config.bins;
  std::vector<double> column;
  for (Direction dir : kDirections) {
    for (std::size_t b = 0; b < nbins; ++b) {
      const auto& members = slot(dir, b).members;
      if (members.empty()) {
        throw FitError("no " + std::string(to_string(dir)) + " segments in " + bin_label(config.bins[b], b));
      }
      std::vector<double> force(npts, 0.0);
      std::vector<bool> covered(npts, false);
      for (std::size_t i = 0; i < npts; ++i) {
        column.clear();
        for (const auto& m : members) {
          if (m.covered[i]) column.push_back(m.value[i]);
        }
        if (column.empty()) continue;
        force[i] = std::max(0.0, aggregate(column, config.aggregation));
        covered[i] = true;
      }
      // Uncovered leading points take the first covered value; later gaps hold
      // the previous one.
      std::optional<std::size_t> last;
      for (std::size_t i = 0; i < npts; ++i) {
        if (covered[i]) {
          if (!last) std::fill(force.begin(), force.begin() + static_cast<std::ptrdiff_t>(i), force[i]);
          last = i;
        } else if (last) {
          force[i] = force[*last];
        }
      }
      if (!last) {
        throw FitError("segments in " + bin_label(config.bins[b], b) + " cover no grid point");
      }
      model.curves.emplace(CurveKey{dir, b}, FDCurve{dir, std::move(force)});
    }
  }

  for (int di = 0; di < 2; ++di) {
    // A direction gets a profile when at least half of its strokes vibrate.
    if (!vib[di].empty() && 2 * vib[di].size() >= seg_count[di]) {
      model.vibrations.push_back(average_profiles(vib[di]));
    }
  }
  return model;
}

}  // namespace pressem
