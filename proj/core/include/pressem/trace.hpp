#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace pressem {

// Uniformly sampled press recording. Columns are parallel.
struct PressTrace {
  double sample_rate_hz = 1000.0;
  std::vector<double> displacement_mm;
  std::vector<double> force_cN;
  std::vector<double> vibration;
  std::string source;

  std::size_t size() const { return displacement_mm.size(); }
  double dt_s() const { return 1.0 / sample_rate_hz; }

  friend bool operator==(const PressTrace&, const PressTrace&) = default;
};

// Returns human-readable problems; empty when the trace is usable. When
// `travel_mm` is given, displacement must stay within [-tol, travel + tol].
std::vector<std::string> check_trace(const PressTrace& trace,
                                     std::optional<double> travel_mm = std::nullopt,
                                     double tolerance_mm = 0.1);

}  // namespace pressem
