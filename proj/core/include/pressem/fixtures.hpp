#pragma once

// Reference models and plants used by the CLI `fixture` command, the
// service's plant catalogue, tests and benchmarks. None of them describe a
// measured device.

#include <cstdint>
#include <string>
#include <vector>

#include "pressem/compensation.hpp"
#include "pressem/fdvv.hpp"
#include "pressem/plant.hpp"

namespace pressem {

// [0,30) c=15, [30,70) c=50, [70,150) c=100.
std::vector<VelocityBin> tactile_bins();

// Tactile switch with a click bump near 1.2 mm, bottom-out from 3.4 mm,
// lower release curves and a press-side click vibration at 1.4 mm. Forces
// grow with speed. Travel 4 mm unless given.
FDVVModel tactile_model(double travel_mm = 4.0);

// Linear (bump-free) switch with the same bins and no vibration.
FDVVModel linear_model(double travel_mm = 4.0);

// tactile_model run through the capture pipeline: strokes at several speeds
// per bin are synthesised with force noise and re-fitted.
FDVVModel captured_tactile_model(std::uint64_t seed = 7);

// Single-bin FD model built from `model`'s slowest bin, covering [0, top).
FDVVModel fd_baseline(const FDVVModel& model);

struct NamedPlant {
  std::string name;
  PlantConfig config;
};
// "default" (default_fixture_plant) and "ideal" (static_linear_plant(300)).
std::vector<NamedPlant> plant_catalogue();

}  // namespace pressem
