#include "pressem/artifacts.hpp"

#include <json.hpp>

#include "pressem/errors.hpp"
#include "pressem/trace_io.hpp"

namespace pressem::service {

FingerTrajectory build_trajectory(const std::vector<StrokeSpec>& strokes, double rate_hz) {
  if (strokes.empty()) throw DomainError("at least one trajectory stroke is required");
  std::vector<FingerTrajectory> parts;
  parts.reserve(strokes.size());
  for (const auto& s : strokes) parts.push_back(generate_trajectory(s, rate_hz));
  return concatenate(parts);
}

RenderArtifacts render_artifacts(const FDVVModel& reference, const ActuationTable& table, const PlantConfig& plant,
                                 const RendererConfig& config, const std::vector<StrokeSpec>& strokes) {
  if (const auto v = validate_model(reference); !v.empty()) {
    throw DomainError("reference model invalid (" + v.front().field + ": " + v.front().rule + ")");
  }
  Renderer renderer(config, table, reference.vibrations);
  const auto trajectory = build_trajectory(strokes, config.tick_rate_hz);
  const auto session = run_session(renderer, plant, trajectory);

  RenderArtifacts out;
  out.trace_csv = write_trace_csv(session.trace);
  out.session_log = format_session_log(session.ticks);
  out.error = render_error(reference, trajectory, session.trace);

  std::size_t vib = 0, faults = 0;
  for (const auto& t : session.ticks) {
    vib += t.events.count(EventKind::vibration_started);
    faults += t.events.count(EventKind::sensor_fault);
  }
  nlohmann::ordered_json m;
  m["ticks"] = session.ticks.size();
  m["mean_abs_error_cN"] = out.error.mean_abs_cN;
  m["max_abs_error_cN"] = out.error.max_abs_cN;
  m["scored_samples"] = out.error.samples;
  m["presses"] = renderer.presses();
  m["vibration_events"] = vib;
  m["sensor_faults"] = faults;
  out.metrics_json = m.dump(2) + "\n";
  return out;
}

}  // namespace pressem::service
