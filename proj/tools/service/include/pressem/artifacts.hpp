#pragma once

// Artifact producers shared by the CLI and the service, so both emit the
// same bytes for the same inputs.

#include <string>
#include <vector>

#include "pressem/compensation.hpp"
#include "pressem/fdvv.hpp"
#include "pressem/plant.hpp"
#include "pressem/renderer.hpp"
#include "pressem/trajectory.hpp"

namespace pressem::service {

// Strokes joined end to end.
FingerTrajectory build_trajectory(const std::vector<StrokeSpec>& strokes, double rate_hz);

struct RenderArtifacts {
  std::string trace_csv;
  std::string session_log;
  std::string metrics_json;
  RenderError error;
};

// Runs `table` through the renderer against the plant and scores the
// rendered force against `reference`. Vibrations come from the reference.
RenderArtifacts render_artifacts(const FDVVModel& reference, const ActuationTable& table, const PlantConfig& plant,
                                 const RendererConfig& config, const std::vector<StrokeSpec>& strokes);

}  // namespace pressem::service
