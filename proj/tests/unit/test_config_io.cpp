#include <gtest/gtest.h>

#include "pressem/config_io.hpp"
#include "pressem/errors.hpp"

using namespace pressem;

TEST(ConfigIo, DefaultsRoundTrip) {
  EXPECT_EQ(parse_plant(serialize_plant(PlantConfig{})), PlantConfig{});
  EXPECT_EQ(parse_plant("{}"), PlantConfig{});
  EXPECT_EQ(parse_renderer_config(serialize_renderer_config(RendererConfig{})), RendererConfig{});
}

TEST(ConfigIo, PlantFields) {
  PlantConfig p = static_linear_plant(120.0);
  p.actuation_latency_ticks = 3;
  p.rng_seed = 0xFFFFFFFFFFFFULL;
  EXPECT_EQ(parse_plant(serialize_plant(p)), p);
  const auto q = parse_plant(R"({"actuator_gain_cN": 250, "actuator_tau_ms": 0})");
  EXPECT_EQ(q.actuator_gain_cN, 250.0);
  EXPECT_EQ(q.actuator_tau_ms, 0.0);
  EXPECT_EQ(q.mass_g, PlantConfig{}.mass_g);
}

TEST(ConfigIo, RejectsUnknownAndMistyped) {
  try {
    parse_plant(R"({"gain": 3})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), "/gain");
  }
  EXPECT_THROW(parse_plant(R"({"mass_g": "heavy"})"), ParseError);
  EXPECT_THROW(parse_plant(R"({"actuation_latency_ticks": -1})"), ParseError);
  EXPECT_THROW(parse_plant("[1]"), ParseError);
  EXPECT_THROW(parse_compensation_config(R"({"init_mode": "warm"})"), ParseError);
  EXPECT_THROW(parse_renderer_config(R"({"behavior": {"kind": "turbo"}})"), ParseError);
}

TEST(ConfigIo, CompensationRoundTrip) {
  CompensationConfig c;
  c.learning_rate = 0.35;
  c.init_mode = InitMode::random;
  c.seed = 99;
  c.segmentation.filter_window = 7;
  c.threads = 4;
  const auto back = parse_compensation_config(serialize_compensation_config(c));
  EXPECT_EQ(back.learning_rate, c.learning_rate);
  EXPECT_EQ(back.init_mode, c.init_mode);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.segmentation.filter_window, 7u);
  EXPECT_EQ(back.threads, 4u);
  EXPECT_EQ(serialize_compensation_config(back), serialize_compensation_config(c));
}

TEST(ConfigIo, CaptureRoundTrip) {
  CaptureConfig c;
  c.bins = {{0, 20, 10}, {20, 60, 40}};
  c.grid = {2.2, 0.01};
  c.aggregation = CurveAggregation::median;
  c.model_name = "mbp";
  const auto back = parse_capture_config(serialize_capture_config(c));
  EXPECT_EQ(back.bins, c.bins);
  EXPECT_EQ(back.grid, c.grid);
  EXPECT_EQ(back.aggregation, c.aggregation);
  EXPECT_EQ(back.model_name, "mbp");
  EXPECT_EQ(serialize_capture_config(back), serialize_capture_config(c));
}

TEST(ConfigIo, RendererBehavior) {
  RendererConfig r;
  r.behavior.kind = BehaviorKind::cooldown;
  r.behavior.return_delay_ms = {100.0, 250.0, 500.0};
  r.lag_compensation = false;
  r.servo_settle_ticks = 50;
  EXPECT_EQ(parse_renderer_config(serialize_renderer_config(r)), r);
  const auto t = parse_renderer_config(R"({"behavior": {"kind": "fast_tap", "return_threshold_mm": 3.0}})");
  EXPECT_EQ(t.behavior.kind, BehaviorKind::fast_tap);
  EXPECT_EQ(t.behavior.return_threshold_mm, 3.0);
}
