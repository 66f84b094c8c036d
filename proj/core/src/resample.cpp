#include "pressem/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pressem/errors.hpp"

namespace pressem {

namespace {

// Relative weight of the smoothness penalty against the data term.
constexpr double kPenaltyScale = 1e-10;
// Grid points whose data weight falls below this fraction of the mean are
// treated as unobserved.
constexpr double kObservedFraction = 1e-12;

// Solves a symmetric tridiagonal system in place (Thomas algorithm).
// diag/off/rhs are indexed over the active range; off[i] couples i and i+1.
void solve_tridiagonal(std::vector<double>& diag, std::vector<double>& off, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = off[i - 1] / diag[i - 1];
    diag[i] -= m * off[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    rhs[i] = (rhs[i] - off[i] * rhs[i + 1]) / diag[i];
  }
}

}  // namespace

std::size_t GridEstimate::covered_count() const {
  return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), true));
}

GridEstimate fit_grid_least_squares(const DisplacementGrid& grid, std::span<const double> displacement_mm,
                                    std::span<const double> value) {
  if (displacement_mm.size() != value.size()) throw DomainError("sample columns differ in length");
  const std::size_t n = grid.point_count();
  GridEstimate out{std::vector<double>(n, 0.0), std::vector<bool>(n, false)};
  if (displacement_mm.empty()) return out;

  std::vector<double> diag(n, 0.0), off(n, 0.0), rhs(n, 0.0);
  const double h = grid.step_mm;
  for (std::size_t s = 0; s < displacement_mm.size(); ++s) {
    const double x = std::clamp(displacement_mm[s], 0.0, grid.travel_mm) / h;
    const auto k = std::min(static_cast<std::size_t>(std::floor(x)), n - 2);
    const double t = std::clamp(x - static_cast<double>(k), 0.0, 1.0);
    const double wl = 1.0 - t;
    const double wr = t;
    diag[k] += wl * wl;
    diag[k + 1] += wr * wr;
    off[k] += wl * wr;
    rhs[k] += wl * value[s];
    rhs[k + 1] += wr * value[s];
  }

  const double total = std::accumulate(diag.begin(), diag.end(), 0.0);
  const double threshold = kObservedFraction * total / static_cast<double>(n);
  std::size_t lo = n, hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diag[i] > threshold) {
      lo = std::min(lo, i);
      hi = i;
    }
  }
  if (lo == n) return out;

  const double lambda = kPenaltyScale * total / static_cast<double>(hi - lo + 1);
  const std::size_t m = hi - lo + 1;
  std::vector<double> d(diag.begin() + lo, diag.begin() + hi + 1);
  std::vector<double> o(off.begin() + lo, off.begin() + hi + 1);
  std::vector<double> r(rhs.begin() + lo, rhs.begin() + hi + 1);
  o.back() = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    d[i] += lambda;
    d[i + 1] += lambda;
    o[i] -= lambda;
  }
  if (m == 1) d[0] += lambda;
  solve_tridiagonal(d, o, r);
  for (std::size_t i = 0; i < m; ++i) {
    out.value[lo + i] = r[i];
    out.covered[lo + i] = true;
  }
  return out;
}

GridEstimate interpolate_to_grid(const DisplacementGrid& grid, std::span<const double> displacement_mm,
                                 std::span<const double> value) {
  if (displacement_mm.size() != value.size()) throw DomainError("sample columns differ in length");
  const std::size_t n = grid.point_count();
  GridEstimate out{std::vector<double>(n, 0.0), std::vector<bool>(n, false)};
  if (displacement_mm.empty()) return out;

  std::vector<double> xs(displacement_mm.begin(), displacement_mm.end());
  std::vector<double> ys(value.begin(), value.end());
  if (xs.size() > 1 && xs.front() > xs.back()) {
    std::reverse(xs.begin(), xs.end());
    std::reverse(ys.begin(), ys.end());
  }
  const double eps = kGridRatioTolerance * grid.step_mm;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grid.point(i);
    if (g < xs.front() - eps || g > xs.back() + eps) continue;
    while (j + 1 < xs.size() && xs[j + 1] < g) ++j;
    if (j + 1 == xs.size() || std::abs(xs[j] - g) <= eps) {
      out.value[i] = ys[j];
    } else {
      const double span = xs[j + 1] - xs[j];
      const double t = span > 0.0 ? (g - xs[j]) / span : 0.0;
      out.value[i] = ys[j] + std::clamp(t, 0.0, 1.0) * (ys[j + 1] - ys[j]);
    }
    out.covered[i] = true;
  }
  return out;
}

GridEstimate fit_grid(const DisplacementGrid& grid, std::span<const double> displacement_mm,
                      std::span<const double> value) {
  if (displacement_mm.size() != value.size()) throw DomainError("sample columns differ in length");
  if (displacement_mm.empty()) return fit_grid_least_squares(grid, displacement_mm, value);
  const std::size_t n = grid.point_count();
  std::vector<std::size_t> per_interval(n - 1, 0);
  std::size_t lo = n, hi = 0;
  for (double d : displacement_mm) {
    const double x = std::clamp(d, 0.0, grid.travel_mm) / grid.step_mm;
    const auto k = std::min(static_cast<std::size_t>(std::floor(x)), n - 2);
    ++per_interval[k];
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  const bool dense = std::all_of(per_interval.begin() + static_cast<std::ptrdiff_t>(lo),
                                 per_interval.begin() + static_cast<std::ptrdiff_t>(hi) + 1,
                                 [](std::size_t c) { return c >= 2; });
  return dense ? fit_grid_least_squares(grid, displacement_mm, value)
               : interpolate_to_grid(grid, displacement_mm, value);
}

}  // namespace pressem
