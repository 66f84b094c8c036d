#include "pressem/fdvv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pressem/errors.hpp"

namespace pressem {

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::press:
      return "press";
    case Direction::release:
      return "release";
  }
  return "unknown";
}

Direction parse_direction(std::string_view text) {
  if (text == "press") return Direction::press;
  if (text == "release") return Direction::release;
  throw DomainError("unknown direction '" + std::string(text) + "'");
}

namespace {

bool known_direction(Direction d) { return d == Direction::press || d == Direction::release; }

std::optional<std::size_t> integral_ratio(double travel, double step) {
  if (!(travel > 0.0) || !(step > 0.0) || !std::isfinite(travel) || !std::isfinite(step)) {
    return std::nullopt;
  }
  const double r = travel / step;
  const double n = std::round(r);
  if (std::abs(r - n) > kGridRatioTolerance) return std::nullopt;
  return static_cast<std::size_t>(n) + 1;
}

std::string curve_field(const CurveKey& key) {
  std::ostringstream os;
  os << "curves[" << to_string(key.direction) << "," << key.bin << "]";
  return os.str();
}

void require_valid(const FDVVModel& model, std::string_view op) {
  const auto v = validate_model(model);
  if (!v.empty()) {
    throw DomainError(std::string(op) + ": input model invalid (" + v.front().field + ": " +
                      v.front().rule + ")");
  }
}

}  // namespace

std::size_t DisplacementGrid::point_count() const {
  const auto n = integral_ratio(travel_mm, step_mm);
  if (!n) throw DomainError("grid travel is not an integral multiple of step");
  return *n;
}

std::vector<double> DisplacementGrid::points() const {
  const std::size_t n = point_count();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = point(i);
  return out;
}

bool DisplacementGrid::is_valid() const { return integral_ratio(travel_mm, step_mm).has_value(); }

const FDCurve& FDVVModel::curve(Direction direction, std::size_t bin) const {
  const auto it = curves.find(CurveKey{direction, bin});
  if (it == curves.end()) {
    throw DomainError("model has no curve for " + curve_field(CurveKey{direction, bin}));
  }
  return it->second;
}

double interpolate_on_grid(const DisplacementGrid& grid, std::span<const double> samples, double d) {
  const std::size_t n = samples.size();
  if (n == 0) throw DomainError("empty curve");
  if (n == 1) return samples[0];
  const double t = std::clamp(d, 0.0, grid.point(n - 1)) / grid.step_mm;
  const double nearest = std::round(t);
  if (std::abs(t - nearest) <= kGridRatioTolerance) {
    const auto i = std::min(static_cast<std::size_t>(nearest), n - 1);
    return samples[i];
  }
  const auto k = std::min(static_cast<std::size_t>(std::floor(t)), n - 2);
  const double frac = t - static_cast<double>(k);
  return samples[k] + frac * (samples[k + 1] - samples[k]);
}

BinBlend blend_bins(std::span<const VelocityBin> bins, double speed_mm_s) {
  if (bins.empty()) throw DomainError("no velocity bins");
  const std::size_t last = bins.size() - 1;
  if (speed_mm_s <= bins.front().center_mm_s) return {0, 0, 0.0};
  if (speed_mm_s >= bins.back().center_mm_s) return {last, last, 0.0};
  // First center strictly above the speed; its predecessor is <= speed.
  const auto it = std::upper_bound(bins.begin(), bins.end(), speed_mm_s,
                                   [](double s, const VelocityBin& b) { return s < b.center_mm_s; });
  const auto upper = static_cast<std::size_t>(it - bins.begin());
  const std::size_t lower = upper - 1;
  const double span = bins[upper].center_mm_s - bins[lower].center_mm_s;
  const double t = (speed_mm_s - bins[lower].center_mm_s) / span;
  if (t == 0.0) return {lower, lower, 0.0};
  return {lower, upper, t};
}

double lookup_force(const FDVVModel& model, double displacement_mm, double speed_mm_s,
                    Direction direction) {
  if (!known_direction(direction)) throw DomainError("unknown direction");
  const double travel = model.grid.travel_mm;
  if (!std::isfinite(displacement_mm) || displacement_mm < -kGridRatioTolerance ||
      displacement_mm > travel + kGridRatioTolerance) {
    throw DomainError("displacement outside [0, travel]");
  }
  if (!std::isfinite(speed_mm_s) || speed_mm_s < 0.0) {
    throw DomainError("speed must be a finite magnitude");
  }
  const BinBlend blend = blend_bins(model.bins, speed_mm_s);
  const double lo =
      interpolate_on_grid(model.grid, model.curve(direction, blend.lower).force_cN, displacement_mm);
  if (blend.t == 0.0) return lo;
  const double hi =
      interpolate_on_grid(model.grid, model.curve(direction, blend.upper).force_cN, displacement_mm);
  return lo + blend.t * (hi - lo);
}

std::vector<double> sample_curve(const FDVVModel& model, double speed_mm_s, Direction direction) {
  const auto pts = model.grid.points();
  std::vector<double> out;
  out.reserve(pts.size());
  for (double d : pts) out.push_back(lookup_force(model, d, speed_mm_s, direction));
  return out;
}

std::vector<Violation> validate_bins(std::span<const VelocityBin> bins, std::string_view prefix) {
  std::vector<Violation> out;
  const std::string p(prefix);
  if (bins.empty()) {
    out.push_back({p, "at least one velocity bin is required"});
    return out;
  }
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const auto& b = bins[i];
    const std::string f = p + "[" + std::to_string(i) + "]";
    if (!std::isfinite(b.lo_mm_s) || !std::isfinite(b.hi_mm_s) || !std::isfinite(b.center_mm_s)) {
      out.push_back({f, "bounds must be finite"});
      continue;
    }
    if (b.lo_mm_s < 0.0) out.push_back({f, "lo_mm_s must be >= 0"});
    if (!(b.lo_mm_s < b.hi_mm_s)) out.push_back({f, "lo_mm_s must be < hi_mm_s"});
    if (b.center_mm_s < b.lo_mm_s || b.center_mm_s > b.hi_mm_s) {
      out.push_back({f, "center_mm_s must lie within [lo_mm_s, hi_mm_s]"});
    }
    if (i > 0) {
      const auto& prev = bins[i - 1];
      if (b.lo_mm_s < prev.lo_mm_s) {
        out.push_back({f, "bins must be sorted ascending"});
      } else if (b.lo_mm_s < prev.hi_mm_s) {
        out.push_back({f, "bin overlaps " + p + "[" + std::to_string(i - 1) + "]"});
      }
    }
  }
  return out;
}

std::vector<Violation> validate_model(const FDVVModel& model) {
  std::vector<Violation> out;
  if (model.schema_version != kModelSchemaVersion) {
    out.push_back({"schema_version", "unsupported version " + std::to_string(model.schema_version)});
  }
  const auto& g = model.grid;
  std::optional<std::size_t> n;
  if (!(g.travel_mm > 0.0) || !std::isfinite(g.travel_mm)) {
    out.push_back({"travel_mm", "must be finite and > 0"});
  } else if (!(g.step_mm > 0.0) || !std::isfinite(g.step_mm)) {
    out.push_back({"step_mm", "must be finite and > 0"});
  } else {
    n = integral_ratio(g.travel_mm, g.step_mm);
    if (!n) out.push_back({"step_mm", "travel_mm / step_mm must be an integer"});
  }

  auto bin_v = validate_bins(model.bins);
  out.insert(out.end(), bin_v.begin(), bin_v.end());

  for (Direction dir : kDirections) {
    for (std::size_t b = 0; b < model.bins.size(); ++b) {
      if (!model.curves.contains(CurveKey{dir, b})) {
        out.push_back({curve_field({dir, b}), "missing curve"});
      }
    }
  }
  for (const auto& [key, curve] : model.curves) {
    const std::string f = curve_field(key);
    if (!known_direction(key.direction) || key.bin >= model.bins.size()) {
      out.push_back({f, "curve does not correspond to a (direction, bin) pair"});
      continue;
    }
    if (curve.direction != key.direction) out.push_back({f, "direction mismatch"});
    if (n && curve.force_cN.size() != *n) {
      out.push_back({f + ".force_cN", "length " + std::to_string(curve.force_cN.size()) +
                                          " does not match grid point count " + std::to_string(*n)});
    }
    for (std::size_t i = 0; i < curve.force_cN.size(); ++i) {
      const double v = curve.force_cN[i];
      if (!std::isfinite(v)) {
        out.push_back({f + ".force_cN[" + std::to_string(i) + "]", "must be finite"});
        break;
      }
      if (v < 0.0) {
        out.push_back({f + ".force_cN[" + std::to_string(i) + "]", "must be >= 0"});
        break;
      }
    }
  }

  for (std::size_t i = 0; i < model.vibrations.size(); ++i) {
    const auto& vp = model.vibrations[i];
    const std::string f = "vibrations[" + std::to_string(i) + "]";
    if (!known_direction(vp.direction)) out.push_back({f + ".direction", "unknown direction"});
    if (!std::isfinite(vp.trigger_mm) || vp.trigger_mm < 0.0 || vp.trigger_mm > g.travel_mm) {
      out.push_back({f + ".trigger_mm", "must lie within [0, travel_mm]"});
    }
    if (!(vp.sample_rate_hz > 0.0) || !std::isfinite(vp.sample_rate_hz)) {
      out.push_back({f + ".sample_rate_hz", "must be > 0"});
    }
    for (std::size_t k = 0; k < vp.samples.size(); ++k) {
      const double s = vp.samples[k];
      if (!std::isfinite(s) || s < -1.0 || s > 1.0) {
        out.push_back({f + ".samples[" + std::to_string(k) + "]", "must lie within [-1, 1]"});
        break;
      }
    }
  }
  return out;
}

FDVVModel edit_scale_force(const FDVVModel& model, double factor) {
  require_valid(model, "scale_force");
  if (!(factor > 0.0) || !std::isfinite(factor)) throw DomainError("scale factor must be > 0");
  FDVVModel out = model;
  for (auto& [key, curve] : out.curves) {
    for (double& f : curve.force_cN) f *= factor;
  }
  return out;
}

FDVVModel edit_shift_curve(const FDVVModel& model, Direction direction, std::size_t bin,
                           double delta_cN) {
  require_valid(model, "shift_curve");
  if (!std::isfinite(delta_cN)) throw DomainError("shift must be finite");
  FDVVModel out = model;
  const auto it = out.curves.find(CurveKey{direction, bin});
  if (it == out.curves.end()) throw DomainError("no curve for " + curve_field({direction, bin}));
  for (double& f : it->second.force_cN) f = std::max(0.0, f + delta_cN);
  return out;
}

FDVVModel edit_set_travel(const FDVVModel& model, double new_travel_mm) {
  require_valid(model, "set_travel");
  if (!(new_travel_mm > 0.0) || !std::isfinite(new_travel_mm)) {
    throw DomainError("travel must be > 0");
  }
  const DisplacementGrid grid{new_travel_mm, model.grid.step_mm};
  if (!grid.is_valid()) throw DomainError("new travel is not an integral number of grid steps");
  for (std::size_t i = 0; i < model.vibrations.size(); ++i) {
    if (model.vibrations[i].trigger_mm > new_travel_mm) {
      throw DomainError("vibration " + std::to_string(i) + " trigger lies beyond the new travel");
    }
  }
  FDVVModel out = model;
  out.grid = grid;
  const auto pts = grid.points();
  for (auto& [key, curve] : out.curves) {
    const auto& old = model.curves.at(key).force_cN;
    std::vector<double> resampled;
    resampled.reserve(pts.size());
    for (double d : pts) {
      // Beyond the old travel the last sample is held.
      resampled.push_back(interpolate_on_grid(model.grid, old, std::min(d, model.grid.travel_mm)));
    }
    curve.force_cN = std::move(resampled);
  }
  return out;
}

FDVVModel edit_set_vibration_trigger(const FDVVModel& model, std::size_t index, double trigger_mm) {
  require_valid(model, "set_vibration_trigger");
  if (index >= model.vibrations.size()) throw DomainError("no vibration profile at that index");
  if (!std::isfinite(trigger_mm) || trigger_mm < 0.0 || trigger_mm > model.grid.travel_mm) {
    throw DomainError("trigger must lie within [0, travel]");
  }
  FDVVModel out = model;
  out.vibrations[index].trigger_mm = trigger_mm;
  return out;
}

}  // namespace pressem
