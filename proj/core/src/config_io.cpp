#include "pressem/config_io.hpp"

#include "json_util.hpp"

namespace pressem {

using detail::json;
using detail::ObjectReader;

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json segmentation_json(const SegmentationConfig& s) {
  return {{"filter_window", s.filter_window},
          {"min_travel_mm", s.min_travel_mm},
          {"velocity_deadband_mm_s", s.velocity_deadband_mm_s}};
}

SegmentationConfig parse_segmentation(const json& j, const std::string& ptr) {
  SegmentationConfig s;
  const ObjectReader r(j, ptr, {"filter_window", "min_travel_mm", "velocity_deadband_mm_s"});
  r.read("filter_window", s.filter_window);
  r.read("min_travel_mm", s.min_travel_mm);
  r.read("velocity_deadband_mm_s", s.velocity_deadband_mm_s);
  return s;
}

template <typename Enum, typename Parse>
void read_enum(const ObjectReader& r, std::string_view key, Enum& out, Parse parse) {
  std::string text;
  if (!r.get(key)) return;
  r.read(key, text);
  try {
    out = parse(text);
  } catch (const DomainError& e) {
    throw ParseError(r.at(key), e.what());
  }
}

}  // namespace

std::string serialize_plant(const PlantConfig& c) {
  return dump({{"mass_g", c.mass_g},
               {"spring_cN_per_mm", c.spring_cN_per_mm},
               {"damping_cN_per_mm_s", c.damping_cN_per_mm_s},
               {"actuator_gain_cN", c.actuator_gain_cN},
               {"actuator_tau_ms", c.actuator_tau_ms},
               {"duty_nonlinearity_exponent", c.duty_nonlinearity_exponent},
               {"sensor_noise_sigma_mm", c.sensor_noise_sigma_mm},
               {"actuation_latency_ticks", c.actuation_latency_ticks},
               {"rng_seed", c.rng_seed}});
}

PlantConfig parse_plant(std::string_view document) {
  const json doc = detail::parse_json(document);
  PlantConfig c;
  const ObjectReader r(doc, "",
                       {"mass_g", "spring_cN_per_mm", "damping_cN_per_mm_s", "actuator_gain_cN", "actuator_tau_ms",
                        "duty_nonlinearity_exponent", "sensor_noise_sigma_mm", "actuation_latency_ticks",
                        "rng_seed"});
  r.read("mass_g", c.mass_g);
  r.read("spring_cN_per_mm", c.spring_cN_per_mm);
  r.read("damping_cN_per_mm_s", c.damping_cN_per_mm_s);
  r.read("actuator_gain_cN", c.actuator_gain_cN);
  r.read("actuator_tau_ms", c.actuator_tau_ms);
  r.read("duty_nonlinearity_exponent", c.duty_nonlinearity_exponent);
  r.read("sensor_noise_sigma_mm", c.sensor_noise_sigma_mm);
  r.read("actuation_latency_ticks", c.actuation_latency_ticks);
  r.read("rng_seed", c.rng_seed);
  return c;
}

std::string serialize_capture_config(const CaptureConfig& c) {
  return dump({{"filter_window", c.segmentation.filter_window},
               {"segment_min_travel_mm", c.segmentation.min_travel_mm},
               {"segment_velocity_deadband_mm_s", c.segmentation.velocity_deadband_mm_s},
               {"bins", detail::bins_json(c.bins)},
               {"travel_mm", c.grid.travel_mm},
               {"step_mm", c.grid.step_mm},
               {"aggregation", c.aggregation == CurveAggregation::mean ? "mean" : "median"},
               {"vibration_onset_threshold", c.vibration_onset_threshold},
               {"vibration_window_ms", c.vibration_window_ms},
               {"vibration_energy_window_ms", c.vibration_energy_window_ms},
               {"model_name", c.model_name}});
}

CaptureConfig parse_capture_config(std::string_view document) {
  const json doc = detail::parse_json(document);
  CaptureConfig c;
  const ObjectReader r(doc, "",
                       {"filter_window", "segment_min_travel_mm", "segment_velocity_deadband_mm_s", "bins",
                        "travel_mm", "step_mm", "aggregation", "vibration_onset_threshold", "vibration_window_ms",
                        "vibration_energy_window_ms", "model_name"});
  r.read("filter_window", c.segmentation.filter_window);
  r.read("segment_min_travel_mm", c.segmentation.min_travel_mm);
  r.read("segment_velocity_deadband_mm_s", c.segmentation.velocity_deadband_mm_s);
  if (const json* b = r.get("bins")) c.bins = detail::parse_bins(*b, "/bins");
  r.read("travel_mm", c.grid.travel_mm);
  r.read("step_mm", c.grid.step_mm);
  read_enum(r, "aggregation", c.aggregation, [](std::string_view t) {
    if (t == "mean") return CurveAggregation::mean;
    if (t == "median") return CurveAggregation::median;
    throw DomainError("aggregation must be \"mean\" or \"median\"");
  });
  r.read("vibration_onset_threshold", c.vibration_onset_threshold);
  r.read("vibration_window_ms", c.vibration_window_ms);
  r.read("vibration_energy_window_ms", c.vibration_energy_window_ms);
  r.read("model_name", c.model_name);
  return c;
}

std::string serialize_compensation_config(const CompensationConfig& c) {
  return dump({{"learning_rate", c.learning_rate},
               {"nominal_gain_cN", c.nominal_gain_cN},
               {"max_iterations", c.max_iterations},
               {"epsilon_cN", c.epsilon_cN},
               {"init_mode", c.init_mode == InitMode::zero ? "zero" : "random"},
               {"seed", c.seed},
               {"smoothing_window", c.smoothing_window},
               {"quantization_bits", c.quantization_bits},
               {"tick_rate_hz", c.tick_rate_hz},
               {"rest_ms", c.rest_ms},
               {"dwell_ms", c.dwell_ms},
               {"segmentation", segmentation_json(c.segmentation)},
               {"threads", c.threads}});
}

CompensationConfig parse_compensation_config(std::string_view document) {
  const json doc = detail::parse_json(document);
  CompensationConfig c;
  const ObjectReader r(doc, "",
                       {"learning_rate", "nominal_gain_cN", "max_iterations", "epsilon_cN", "init_mode", "seed",
                        "smoothing_window", "quantization_bits", "tick_rate_hz", "rest_ms", "dwell_ms",
                        "segmentation", "threads"});
  r.read("learning_rate", c.learning_rate);
  r.read("nominal_gain_cN", c.nominal_gain_cN);
  r.read("max_iterations", c.max_iterations);
  r.read("epsilon_cN", c.epsilon_cN);
  read_enum(r, "init_mode", c.init_mode, [](std::string_view t) {
    if (t == "zero") return InitMode::zero;
    if (t == "random") return InitMode::random;
    throw DomainError("init_mode must be \"zero\" or \"random\"");
  });
  r.read("seed", c.seed);
  r.read("smoothing_window", c.smoothing_window);
  r.read("quantization_bits", c.quantization_bits);
  r.read("tick_rate_hz", c.tick_rate_hz);
  r.read("rest_ms", c.rest_ms);
  r.read("dwell_ms", c.dwell_ms);
  if (const json* s = r.get("segmentation")) c.segmentation = parse_segmentation(*s, "/segmentation");
  r.read("threads", c.threads);
  return c;
}

std::string serialize_renderer_config(const RendererConfig& c) {
  const auto& b = c.behavior;
  return dump({{"tick_rate_hz", c.tick_rate_hz},
               {"filter_window", c.filter_window},
               {"velocity_span_ticks", c.velocity_span_ticks},
               {"direction_deadband_mm_s", c.direction_deadband_mm_s},
               {"lag_compensation", c.lag_compensation},
               {"travel_range_mm", c.travel_range_mm},
               {"servo_settle_ticks", c.servo_settle_ticks},
               {"press_threshold_fraction", c.press_threshold_fraction},
               {"release_threshold_fraction", c.release_threshold_fraction},
               {"sensor_fault_margin_mm", c.sensor_fault_margin_mm},
               {"behavior",
                {{"kind", to_string(b.kind)},
                 {"return_threshold_mm", b.return_threshold_mm},
                 {"drop_ms", b.drop_ms},
                 {"return_delay_ms", b.return_delay_ms},
                 {"period_ms", b.period_ms},
                 {"hold_mm", b.hold_mm},
                 {"burst_ms", b.burst_ms}}}});
}

RendererConfig parse_renderer_config(std::string_view document) {
  const json doc = detail::parse_json(document);
  RendererConfig c;
  const ObjectReader r(doc, "",
                       {"tick_rate_hz", "filter_window", "velocity_span_ticks", "direction_deadband_mm_s",
                        "lag_compensation", "travel_range_mm", "servo_settle_ticks", "press_threshold_fraction",
                        "release_threshold_fraction", "sensor_fault_margin_mm", "behavior"});
  r.read("tick_rate_hz", c.tick_rate_hz);
  r.read("filter_window", c.filter_window);
  r.read("velocity_span_ticks", c.velocity_span_ticks);
  r.read("direction_deadband_mm_s", c.direction_deadband_mm_s);
  r.read("lag_compensation", c.lag_compensation);
  r.read("travel_range_mm", c.travel_range_mm);
  r.read("servo_settle_ticks", c.servo_settle_ticks);
  r.read("press_threshold_fraction", c.press_threshold_fraction);
  r.read("release_threshold_fraction", c.release_threshold_fraction);
  r.read("sensor_fault_margin_mm", c.sensor_fault_margin_mm);
  if (const json* bj = r.get("behavior")) {
    auto& b = c.behavior;
    const ObjectReader br(*bj, "/behavior",
                          {"kind", "return_threshold_mm", "drop_ms", "return_delay_ms", "period_ms", "hold_mm",
                           "burst_ms"});
    read_enum(br, "kind", b.kind, parse_behavior_kind);
    br.read("return_threshold_mm", b.return_threshold_mm);
    br.read("drop_ms", b.drop_ms);
    br.read("return_delay_ms", b.return_delay_ms);
    br.read("period_ms", b.period_ms);
    br.read("hold_mm", b.hold_mm);
    br.read("burst_ms", b.burst_ms);
  }
  return c;
}

}  // namespace pressem
