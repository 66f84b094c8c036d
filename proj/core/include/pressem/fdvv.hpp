#pragma once

// FDVV button models: force curves over a displacement grid, one per
// (direction, velocity bin), plus vibration profiles keyed to trigger
// displacements. Units are mm, mm/s, cN and Hz throughout.

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pressem {

inline constexpr int kModelSchemaVersion = 1;
inline constexpr double kGridRatioTolerance = 1e-9;
inline constexpr double kDefaultGridStepMm = 0.01;

enum class Direction { press, release };

std::string_view to_string(Direction d);
// Throws DomainError for anything other than "press" / "release".
Direction parse_direction(std::string_view text);

inline constexpr Direction kDirections[] = {Direction::press, Direction::release};

struct DisplacementGrid {
  double travel_mm = 4.0;
  double step_mm = kDefaultGridStepMm;

  // travel/step + 1. Throws DomainError if the ratio is not integral.
  std::size_t point_count() const;
  double point(std::size_t i) const { return static_cast<double>(i) * step_mm; }
  std::vector<double> points() const;
  bool is_valid() const;

  friend bool operator==(const DisplacementGrid&, const DisplacementGrid&) = default;
};

struct VelocityBin {
  double lo_mm_s = 0.0;
  double hi_mm_s = 0.0;
  double center_mm_s = 0.0;

  bool contains(double speed_mm_s) const { return speed_mm_s >= lo_mm_s && speed_mm_s < hi_mm_s; }

  friend bool operator==(const VelocityBin&, const VelocityBin&) = default;
};

struct FDCurve {
  Direction direction = Direction::press;
  std::vector<double> force_cN;

  friend bool operator==(const FDCurve&, const FDCurve&) = default;
};

struct VibrationProfile {
  double trigger_mm = 0.0;
  Direction direction = Direction::press;
  double sample_rate_hz = 8000.0;
  std::vector<double> samples;

  friend bool operator==(const VibrationProfile&, const VibrationProfile&) = default;
};

struct CurveKey {
  Direction direction = Direction::press;
  std::size_t bin = 0;

  friend auto operator<=>(const CurveKey&, const CurveKey&) = default;
};

struct FDVVModel {
  std::string name;
  DisplacementGrid grid;
  std::vector<VelocityBin> bins;
  std::map<CurveKey, FDCurve> curves;
  std::vector<VibrationProfile> vibrations;
  int schema_version = kModelSchemaVersion;

  // Throws DomainError if the curve is missing.
  const FDCurve& curve(Direction direction, std::size_t bin) const;

  friend bool operator==(const FDVVModel&, const FDVVModel&) = default;
};

// Builds a model whose every curve is filled from `force(direction, bin, d)`.
template <typename ForceFn>
FDVVModel make_model(std::string name, DisplacementGrid grid, std::vector<VelocityBin> bins,
                     ForceFn&& force) {
  FDVVModel m;
  m.name = std::move(name);
  m.grid = grid;
  m.bins = std::move(bins);
  const auto pts = grid.points();
  for (Direction dir : kDirections) {
    for (std::size_t b = 0; b < m.bins.size(); ++b) {
      FDCurve c{dir, {}};
      c.force_cN.reserve(pts.size());
      for (double d : pts) c.force_cN.push_back(force(dir, b, d));
      m.curves.emplace(CurveKey{dir, b}, std::move(c));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Interpolation primitives shared by force and duty lookups.

// Linear interpolation of grid-sampled values at displacement d. Grid points
// (within 1e-9 of a step multiple) return the stored sample exactly.
double interpolate_on_grid(const DisplacementGrid& grid, std::span<const double> samples, double d);

// Two bins and a blend factor: value = (1 - t) * lower + t * upper.
struct BinBlend {
  std::size_t lower = 0;
  std::size_t upper = 0;
  double t = 0.0;
};

// Linear in speed between adjacent bin centers, clamped to the extreme bins.
BinBlend blend_bins(std::span<const VelocityBin> bins, double speed_mm_s);

// ---------------------------------------------------------------------------
// Operations

// Bilinear force lookup. Throws DomainError if displacement lies outside
// [0, travel], speed is negative or not finite, or direction is unknown.
double lookup_force(const FDVVModel& model, double displacement_mm, double speed_mm_s,
                    Direction direction);

// Samples the (direction, speed) slice of the model at every grid point.
std::vector<double> sample_curve(const FDVVModel& model, double speed_mm_s, Direction direction);

struct Violation {
  std::string field;
  std::string rule;

  friend bool operator==(const Violation&, const Violation&) = default;
};

std::vector<Violation> validate_bins(std::span<const VelocityBin> bins, std::string_view prefix = "bins");
std::vector<Violation> validate_model(const FDVVModel& model);

// Designer edits. Each returns a new model; inputs must validate, and the
// result is guaranteed to validate. Geometry errors throw DomainError.
FDVVModel edit_scale_force(const FDVVModel& model, double factor);
FDVVModel edit_shift_curve(const FDVVModel& model, Direction direction, std::size_t bin,
                           double delta_cN);
FDVVModel edit_set_travel(const FDVVModel& model, double new_travel_mm);
FDVVModel edit_set_vibration_trigger(const FDVVModel& model, std::size_t index, double trigger_mm);

}  // namespace pressem
