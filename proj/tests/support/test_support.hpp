#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pressem/fdvv.hpp"
#include "pressem/rng.hpp"

namespace pressem::testing {

inline DisplacementGrid grid_4mm() { return {4.0, 0.01}; }

inline FDVVModel constant_model(double force, std::size_t bins = 1) {
  std::vector<VelocityBin> b;
  for (std::size_t i = 0; i < bins; ++i) {
    const double lo = 20.0 * static_cast<double>(i);
    b.push_back({lo, lo + 20.0, lo + 10.0});
  }
  return make_model("constant", grid_4mm(), b, [&](Direction, std::size_t, double) { return force; });
}

// Random valid model. Curves are pointwise increasing in bin index when
// `ordered` so speed-monotonicity properties hold.
inline FDVVModel random_model(std::uint64_t seed, bool ordered = false) {
  Rng rng(seed);
  const std::size_t nbins = 1 + static_cast<std::size_t>(rng.uniform() * 4.0);
  const double step = 0.05;
  const double travel = step * static_cast<double>(20 + static_cast<int>(rng.uniform() * 60.0));
  std::vector<VelocityBin> bins;
  double lo = 0.0;
  for (std::size_t i = 0; i < nbins; ++i) {
    const double width = 5.0 + rng.uniform() * 40.0;
    bins.push_back({lo, lo + width, lo + rng.uniform() * width});
    lo += width + rng.uniform() * 5.0;
  }
  FDVVModel m;
  m.name = "random-" + std::to_string(seed);
  m.grid = {travel, step};
  m.bins = bins;
  const std::size_t n = m.grid.point_count();
  for (Direction dir : kDirections) {
    std::vector<double> prev(n, 0.0);
    for (std::size_t b = 0; b < nbins; ++b) {
      FDCurve c{dir, std::vector<double>(n)};
      for (std::size_t i = 0; i < n; ++i) {
        const double f = rng.uniform() * 100.0;
        c.force_cN[i] = ordered ? prev[i] + f : f;
      }
      prev = c.force_cN;
      m.curves.emplace(CurveKey{dir, b}, std::move(c));
    }
  }
  const std::size_t nvib = static_cast<std::size_t>(rng.uniform() * 3.0);
  for (std::size_t v = 0; v < nvib; ++v) {
    VibrationProfile vp;
    vp.direction = rng.uniform() < 0.5 ? Direction::press : Direction::release;
    vp.trigger_mm = rng.uniform() * travel;
    vp.sample_rate_hz = 1000.0 + std::floor(rng.uniform() * 8000.0);
    for (int k = 0; k < 16; ++k) vp.samples.push_back(rng.uniform() * 2.0 - 1.0);
    m.vibrations.push_back(std::move(vp));
  }
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("pressem-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace pressem::testing
