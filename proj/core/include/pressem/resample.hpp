#pragma once

// Moving scattered (displacement, force) samples onto a displacement grid.

#include <span>
#include <vector>

#include "pressem/fdvv.hpp"

namespace pressem {

struct GridEstimate {
  std::vector<double> value;   // one per grid point; meaningless where !covered
  std::vector<bool> covered;

  std::size_t covered_count() const;
};

// Least-squares fit of a grid-piecewise-linear function (hat basis) to the
// samples. Data generated by linear interpolation on the same grid is
// reproduced exactly; noisy data is averaged over every sample in the
// support of each grid point. A vanishing first-difference penalty keeps
// sparsely sampled stretches well posed (they degrade to linear
// interpolation between neighbors).
GridEstimate fit_grid_least_squares(const DisplacementGrid& grid, std::span<const double> displacement_mm,
                                    std::span<const double> value);

// Plain linear interpolation between consecutive samples, which must be
// monotone in displacement (either direction). Grid points outside the
// sampled displacement range are left uncovered.
GridEstimate interpolate_to_grid(const DisplacementGrid& grid, std::span<const double> displacement_mm,
                                 std::span<const double> value);

// Least squares when every grid interval inside the sampled range holds at
// least two samples, linear interpolation otherwise (samples must then be
// monotone). Sparse samples leave the hat-basis fit underdetermined.
GridEstimate fit_grid(const DisplacementGrid& grid, std::span<const double> displacement_mm,
                      std::span<const double> value);

}  // namespace pressem
