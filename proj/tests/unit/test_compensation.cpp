#include <gtest/gtest.h>

#include <cmath>

#include "pressem/compensation.hpp"
#include "pressem/errors.hpp"
#include "pressem/fixtures.hpp"
#include "pressem/table_io.hpp"
#include "pressem/trajectory.hpp"
#include "test_support.hpp"

using namespace pressem;

namespace {

FDVVModel affine_reference() {
  return make_model("affine", DisplacementGrid{4.0, 0.01}, {{0, 40, 20}, {40, 100, 60}},
                    [](Direction dir, std::size_t b, double d) {
                      return (dir == Direction::press ? 50.0 : 30.0) + 20.0 * d + 10.0 * static_cast<double>(b);
                    });
}

CompensationConfig exact_config(double alpha, double nominal_gain) {
  CompensationConfig c;
  c.learning_rate = alpha;
  c.nominal_gain_cN = nominal_gain;
  c.smoothing_window = 1;
  c.epsilon_cN = 1e-9;
  c.max_iterations = 6;
  return c;
}

}  // namespace

TEST(Contraction, Examples) {
  EXPECT_DOUBLE_EQ(contraction_factor(300.0, 300.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(contraction_factor(300.0, 300.0, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(contraction_factor(200.0, 100.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(contraction_factor(300.0, 300.0, 2.5), 1.5);
  EXPECT_THROW(contraction_factor(0.0, 300.0, 0.5), DomainError);
  EXPECT_THROW(contraction_factor(300.0, -1.0, 0.5), DomainError);
}

TEST(Compensate, AnalyticInverseInOneIteration) {
  const auto ref = affine_reference();
  auto cfg = exact_config(1.0, 300.0);
  const auto res = compensate(static_linear_plant(300.0), ref, cfg);
  EXPECT_TRUE(res.report.converged());
  EXPECT_EQ(res.report.max_iterations_used(), 1u);
  const double q = 1.0 / max_code(cfg.quantization_bits);
  for (const auto& [key, duty] : res.table.duties) {
    const auto& f = ref.curve(key.direction, key.bin).force_cN;
    for (std::size_t i = 0; i < duty.size(); ++i) EXPECT_NEAR(duty[i], f[i] / 300.0, q);
  }
}

TEST(Compensate, ZeroLearningRateKeepsError) {
  auto cfg = exact_config(0.0, 300.0);
  cfg.max_iterations = 3;
  const auto res = compensate(static_linear_plant(300.0), affine_reference(), cfg);
  for (const auto& b : res.report.bins) {
    ASSERT_EQ(b.mean_abs_error_cN.size(), 3u);
    EXPECT_FALSE(b.converged);
    for (double e : b.mean_abs_error_cN) EXPECT_DOUBLE_EQ(e, b.initial_mean_abs_error_cN);
  }
}

class ContractionLaw : public ::testing::TestWithParam<std::tuple<double, double>> {};

TEST_P(ContractionLaw, ErrorScalesByFactorEachIteration) {
  const auto [alpha, plant_gain] = GetParam();
  const double rho = contraction_factor(plant_gain, 300.0, alpha);
  const auto res = compensate(static_linear_plant(plant_gain), affine_reference(), exact_config(alpha, 300.0));
  for (const auto& b : res.report.bins) {
    double expected = b.initial_mean_abs_error_cN;
    ASSERT_GT(expected, 1.0);
    for (std::size_t k = 0; k < b.mean_abs_error_cN.size(); ++k) {
      expected *= rho;
      EXPECT_NEAR(b.mean_abs_error_cN[k], expected, 1e-6 * (1.0 + b.initial_mean_abs_error_cN))
          << "alpha " << alpha << " iteration " << k + 1;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Gains, ContractionLaw,
                         ::testing::Values(std::make_tuple(0.25, 300.0), std::make_tuple(0.5, 300.0),
                                           std::make_tuple(1.0, 300.0), std::make_tuple(0.5, 240.0),
                                           std::make_tuple(1.0, 360.0)));

TEST(Compensate, SignedErrorKeepsSignUnderUndershoot) {
  const auto res = compensate(static_linear_plant(300.0), affine_reference(), exact_config(0.5, 300.0));
  for (const auto& b : res.report.bins) {
    for (double s : b.mean_signed_error_cN) EXPECT_GT(s, 0.0);  // duty starts at 0 and approaches from below
  }
}

TEST(Compensate, ErrorNonIncreasingOnFixturePlant) {
  CompensationConfig cfg;
  cfg.epsilon_cN = 1e-9;
  cfg.max_iterations = 6;
  const auto res = compensate(default_fixture_plant(), tactile_model(), cfg);
  for (const auto& b : res.report.bins) {
    double prev = b.initial_mean_abs_error_cN;
    for (double e : b.mean_abs_error_cN) {
      EXPECT_LE(e, prev * 1.02 + 0.05) << to_string(b.direction) << " bin " << b.bin;
      prev = e;
    }
  }
}

TEST(Compensate, ConvergesOnFixturePlant) {
  const auto res = compensate(default_fixture_plant(), captured_tactile_model(), CompensationConfig{});
  EXPECT_TRUE(res.report.converged());
  for (const auto& b : res.report.bins) EXPECT_LE(b.final_mean_abs_error_cN(), 2.0);
  EXPECT_TRUE(validate_table(res.table).empty());
}

TEST(Compensate, Deterministic) {
  CompensationConfig cfg;
  cfg.init_mode = InitMode::random;
  cfg.seed = 42;
  cfg.max_iterations = 3;
  const auto a = compensate(default_fixture_plant(), tactile_model(), cfg);
  const auto b = compensate(default_fixture_plant(), tactile_model(), cfg);
  EXPECT_EQ(a.table, b.table);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(serialize_table(a.table), serialize_table(b.table));
  cfg.seed = 43;
  EXPECT_NE(compensate(default_fixture_plant(), tactile_model(), cfg).report, a.report);
}

TEST(Compensate, ThreadCountDoesNotChangeResult) {
  CompensationConfig cfg;
  cfg.max_iterations = 4;
  const auto one = compensate(default_fixture_plant(), tactile_model(), cfg);
  cfg.threads = 4;
  const auto four = compensate(default_fixture_plant(), tactile_model(), cfg);
  EXPECT_EQ(one.table, four.table);
  EXPECT_EQ(one.report, four.report);
}

TEST(Compensate, BinsAreIndependent) {
  CompensationConfig cfg;
  cfg.max_iterations = 4;
  const auto base = tactile_model();
  auto edited = edit_shift_curve(base, Direction::press, 2, 15.0);
  const auto a = compensate(default_fixture_plant(), base, cfg);
  const auto b = compensate(default_fixture_plant(), edited, cfg);
  for (const auto& [key, duty] : a.table.duties) {
    if (key.direction == Direction::press && key.bin == 2) {
      EXPECT_NE(duty, b.table.duties.at(key));
    } else {
      EXPECT_EQ(duty, b.table.duties.at(key)) << to_string(key.direction) << " " << key.bin;
    }
  }
}

TEST(Compensate, ReportsSaturation) {
  const auto ref = make_model("heavy", DisplacementGrid{4.0, 0.01}, {{0, 100, 50}},
                              [](Direction, std::size_t, double d) { return d > 3.0 ? 400.0 : 50.0; });
  auto cfg = exact_config(1.0, 300.0);
  cfg.max_iterations = 2;
  const auto res = compensate(static_linear_plant(300.0), ref, cfg);
  for (const auto& b : res.report.bins) {
    EXPECT_EQ(b.saturated_points.size(), 100u);  // grid points 301..400
    EXPECT_FALSE(b.converged);
  }
  for (const auto& [k, duty] : res.table.duties) EXPECT_EQ(duty.back(), 1.0);
}

TEST(Compensate, ProgressCallback) {
  CompensationConfig cfg;
  cfg.max_iterations = 2;
  cfg.epsilon_cN = 1e-9;
  cfg.threads = 3;
  std::size_t calls = 0;
  compensate(default_fixture_plant(), tactile_model(), cfg, [&](const ProgressSnapshot& s) {
    ++calls;
    EXPECT_LE(s.iteration, 2u);
  });
  EXPECT_EQ(calls, 6u * 3u);
}

TEST(Compensate, RejectsInvalidInputs) {
  auto bad = tactile_model();
  bad.curves.erase(CurveKey{Direction::release, 1});
  EXPECT_THROW(compensate(default_fixture_plant(), bad, {}), DomainError);
  CompensationConfig cfg;
  cfg.learning_rate = -1.0;
  EXPECT_THROW(compensate(default_fixture_plant(), tactile_model(), cfg), DomainError);
  cfg = {};
  cfg.smoothing_window = 4;
  EXPECT_FALSE(validate_compensation_config(cfg).empty());
  auto still = pressem::testing::constant_model(10.0);
  still.bins[0].center_mm_s = 0.0;
  EXPECT_THROW(compensate(default_fixture_plant(), still, {}), DomainError);
}

TEST(ErrorProfile, Examples) {
  const auto traj = generate_trajectory(4.0, 50.0, 1000.0);
  const auto fifty = pressem::testing::constant_model(50.0);
  const auto forty = pressem::testing::constant_model(40.0);
  const auto t50 = synth_trace_from_model(fifty, traj, 0.0, 1);
  const auto t40 = synth_trace_from_model(forty, traj, 0.0, 1);

  const auto self = error_profile(fifty, 50.0, t50, Direction::press);
  EXPECT_EQ(self.covered_count(), 401u);
  EXPECT_EQ(self.max_abs(), 0.0);

  const auto diff = error_profile(fifty, 50.0, t40, Direction::release);
  EXPECT_EQ(diff.covered_count(), 401u);
  EXPECT_DOUBLE_EQ(diff.mean_abs(), 10.0);
  EXPECT_DOUBLE_EQ(diff.mean_signed(), 10.0);

  const auto half = synth_trace_from_model(fifty, generate_trajectory(2.0, 50.0, 1000.0), 0.0, 1);
  const auto hp = error_profile(fifty, 50.0, half, Direction::press);
  EXPECT_EQ(hp.covered_count(), 201u);
  for (std::size_t i = 201; i < 401; ++i) EXPECT_FALSE(hp.covered[i]);

  PressTrace flat = t50;
  std::fill(flat.displacement_mm.begin(), flat.displacement_mm.end(), 1.0);
  EXPECT_THROW(error_profile(fifty, 50.0, flat, Direction::press), DomainError);
}

TEST(Table, LookupAndQuantize) {
  const DisplacementGrid g{4.0, 0.01};
  auto t = constant_table(g, {{0, 20, 10}, {20, 40, 30}}, 0.2);
  t.duties.at(CurveKey{Direction::press, 1}).assign(g.point_count(), 0.6);
  EXPECT_DOUBLE_EQ(t.lookup(1.0, 20.0, Direction::press), 0.4);
  EXPECT_DOUBLE_EQ(t.lookup(9.0, 0.0, Direction::press), 0.2);
  EXPECT_DOUBLE_EQ(t.lookup(-3.0, 99.0, Direction::press), 0.6);
  EXPECT_EQ(max_code(12), 4095u);
  EXPECT_THROW(max_code(0), DomainError);

  Rng rng(3);
  for (auto& [k, d] : t.duties) {
    for (double& u : d) u = rng.uniform();
  }
  for (unsigned bits : {1u, 8u, 12u, 16u}) {
    const auto q = quantize(t, bits);
    const double m = max_code(bits);
    for (const auto& [k, d] : q.duties) {
      const auto& orig = t.duties.at(k);
      for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(d[i] * m, std::round(d[i] * m));
        EXPECT_LE(std::abs(d[i] - orig[i]), 0.5 / m + 1e-15);
      }
    }
    EXPECT_EQ(quantize(q, bits), q);
  }
}

TEST(TableDocument, RoundTrip) {
  CompensationConfig cfg;
  cfg.max_iterations = 2;
  const auto res = compensate(default_fixture_plant(), tactile_model(), cfg);
  EXPECT_EQ(parse_table(serialize_table(res.table)), res.table);
  EXPECT_EQ(parse_report(serialize_report(res.report)), res.report);
  const auto csv = parse_report_csv(report_csv(res.report), cfg.epsilon_cN);
  ASSERT_EQ(csv.bins.size(), res.report.bins.size());
  for (std::size_t i = 0; i < csv.bins.size(); ++i) {
    EXPECT_EQ(csv.bins[i].mean_abs_error_cN, res.report.bins[i].mean_abs_error_cN);
    EXPECT_EQ(csv.bins[i].initial_max_error_cN, res.report.bins[i].initial_max_error_cN);
    EXPECT_EQ(csv.bins[i].converged, res.report.bins[i].converged);
  }
  EXPECT_EQ(report_csv(res.report).substr(0, kReportCsvHeader.size()), kReportCsvHeader);
}

TEST(TableDocument, RejectsBadCodes) {
  const auto t = quantize(constant_table({4.0, 0.5}, {{0, 10, 5}}, 0.5), 4);
  auto doc = serialize_table(t);
  EXPECT_EQ(parse_table(doc), t);
  const auto pos = doc.find("8");
  ASSERT_NE(pos, std::string::npos);
  doc.replace(pos, 1, "16");
  EXPECT_THROW(parse_table(doc), ParseError);
}
