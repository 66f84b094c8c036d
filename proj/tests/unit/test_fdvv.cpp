#include <gtest/gtest.h>

#include "pressem/errors.hpp"
#include "pressem/fdvv.hpp"
#include "pressem/model_io.hpp"
#include "test_support.hpp"

using namespace pressem;
using pressem::testing::constant_model;
using pressem::testing::grid_4mm;
using pressem::testing::random_model;

namespace {

FDVVModel two_bin_constant(double slow, double fast) {
  return make_model("two-bin", grid_4mm(), {{0, 20, 10}, {20, 40, 30}},
                    [&](Direction, std::size_t b, double) { return b == 0 ? slow : fast; });
}

}  // namespace

TEST(Grid, PointCountAndTolerance) {
  EXPECT_EQ((DisplacementGrid{4.0, 0.01}).point_count(), 401u);
  EXPECT_EQ((DisplacementGrid{2.2, 0.01}).point_count(), 221u);
  EXPECT_FALSE((DisplacementGrid{4.0, 0.03}).is_valid());
  EXPECT_THROW((void)(DisplacementGrid{4.0, 0.03}).point_count(), DomainError);
}

TEST(LookupForce, ConstantSingleBin) {
  const auto m = constant_model(50.0);
  for (double v : {0.0, 3.0, 10.0, 500.0}) EXPECT_DOUBLE_EQ(lookup_force(m, 1.3, v, Direction::press), 50.0);
}

TEST(LookupForce, InterpolatesBetweenCenters) {
  const auto m = two_bin_constant(40.0, 80.0);
  // Hand interpolation: halfway between centers 10 and 30.
  EXPECT_NEAR(lookup_force(m, 2.0, 20.0, Direction::press), 40.0 + 0.5 * (80.0 - 40.0), 1e-12);
  EXPECT_NEAR(lookup_force(m, 2.0, 15.0, Direction::release), 40.0 + 0.25 * 40.0, 1e-12);
}

TEST(LookupForce, ClampsOutsideCenters) {
  const auto m = two_bin_constant(40.0, 80.0);
  EXPECT_DOUBLE_EQ(lookup_force(m, 1.0, 5.0, Direction::press), 40.0);
  EXPECT_DOUBLE_EQ(lookup_force(m, 1.0, 0.0, Direction::press), 40.0);
  EXPECT_DOUBLE_EQ(lookup_force(m, 1.0, 99.0, Direction::press), 80.0);
}

TEST(LookupForce, LinearInDisplacement) {
  const auto m = make_model("ramp", grid_4mm(), {{0, 10, 5}}, [](Direction, std::size_t, double d) { return 10.0 * d; });
  EXPECT_NEAR(lookup_force(m, 1.234, 5.0, Direction::press), 12.34, 1e-9);
  EXPECT_NEAR(lookup_force(m, 4.0, 5.0, Direction::press), 40.0, 1e-12);
}

TEST(LookupForce, RejectsBadArguments) {
  const auto m = constant_model(10.0);
  EXPECT_THROW(lookup_force(m, -0.01, 1.0, Direction::press), DomainError);
  EXPECT_THROW(lookup_force(m, 4.01, 1.0, Direction::press), DomainError);
  EXPECT_THROW(lookup_force(m, 1.0, -1.0, Direction::press), DomainError);
  EXPECT_THROW(lookup_force(m, 1.0, 1.0, static_cast<Direction>(7)), DomainError);
  EXPECT_THROW(parse_direction("sideways"), DomainError);
}

TEST(LookupForce, ExactAtCentersAndGridPoints) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto m = random_model(seed);
    const std::size_t n = m.grid.point_count();
    for (const auto& [key, curve] : m.curves) {
      const double c = m.bins[key.bin].center_mm_s;
      for (std::size_t i = 0; i < n; i += 7) {
        EXPECT_EQ(lookup_force(m, m.grid.point(i), c, key.direction), curve.force_cN[i]) << "seed " << seed;
      }
    }
  }
}

TEST(LookupForce, MonotoneInSpeedForOrderedCurves) {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const auto m = random_model(seed, true);
    Rng rng(seed);
    const double top = m.bins.back().hi_mm_s + 10.0;
    for (int trial = 0; trial < 50; ++trial) {
      const double d = rng.uniform() * m.grid.travel_mm;
      double v1 = rng.uniform() * top, v2 = rng.uniform() * top;
      if (v1 > v2) std::swap(v1, v2);
      for (Direction dir : kDirections) {
        EXPECT_LE(lookup_force(m, d, v1, dir), lookup_force(m, d, v2, dir) + 1e-9) << "seed " << seed;
      }
    }
  }
}

TEST(LookupForce, ContinuousAcrossCenters) {
  const auto m = random_model(77);
  for (const auto& b : m.bins) {
    const double below = lookup_force(m, 0.5, std::max(0.0, b.center_mm_s - 1e-9), Direction::press);
    const double at = lookup_force(m, 0.5, b.center_mm_s, Direction::press);
    const double above = lookup_force(m, 0.5, b.center_mm_s + 1e-9, Direction::press);
    EXPECT_NEAR(below, at, 1e-5);
    EXPECT_NEAR(above, at, 1e-5);
  }
}

TEST(ValidateModel, ValidSingleBinIsClean) {
  EXPECT_TRUE(validate_model(constant_model(30.0)).empty());
}

TEST(ValidateModel, WrongCurveLength) {
  auto m = constant_model(30.0);
  m.curves.at(CurveKey{Direction::release, 0}).force_cN.pop_back();
  const auto v = validate_model(m);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].field.find("release"), std::string::npos);
  EXPECT_NE(v[0].rule.find("grid point count"), std::string::npos);
}

TEST(ValidateModel, OverlappingBins) {
  auto m = make_model("overlap", grid_4mm(), {{0, 20, 10}, {10, 30, 20}}, [](Direction, std::size_t, double) { return 1.0; });
  const auto v = validate_model(m);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "bins[1]");
  EXPECT_NE(v[0].rule.find("overlaps"), std::string::npos);
}

TEST(ValidateModel, ReportsEachDefect) {
  auto m = constant_model(30.0);
  m.curves.at(CurveKey{Direction::press, 0}).force_cN[3] = -1.0;
  m.vibrations.push_back({9.0, Direction::press, 8000.0, {0.0, 2.0}});
  m.bins[0].center_mm_s = 50.0;
  m.curves.erase(CurveKey{Direction::release, 0});
  const auto v = validate_model(m);
  EXPECT_EQ(v.size(), 5u);  // negative force, missing curve, trigger, sample, center
}

TEST(Edits, ScaleIdentityAndDoubling) {
  const auto m = constant_model(50.0);
  EXPECT_EQ(edit_scale_force(m, 1.0), m);
  const auto d = edit_scale_force(m, 2.0);
  for (const auto& [k, c] : d.curves) {
    for (double f : c.force_cN) EXPECT_DOUBLE_EQ(f, 100.0);
  }
  EXPECT_DOUBLE_EQ(m.curves.at(CurveKey{}).force_cN[0], 50.0);  // original untouched
}

TEST(Edits, ScaleComposes) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = random_model(seed);
    const double f = 0.5 + seed * 0.1;
    const auto twice = edit_scale_force(edit_scale_force(m, f), f);
    const auto once = edit_scale_force(m, f * f);
    for (const auto& [k, c] : once.curves) {
      const auto& t = twice.curves.at(k).force_cN;
      for (std::size_t i = 0; i < c.force_cN.size(); ++i) EXPECT_NEAR(t[i], c.force_cN[i], 1e-9 * (1.0 + c.force_cN[i]));
    }
    EXPECT_EQ(edit_scale_force(m, 1.0), m);
  }
}

TEST(Edits, ShiftClampsAtZero) {
  const auto m = constant_model(5.0, 2);
  const auto s = edit_shift_curve(m, Direction::press, 1, -8.0);
  for (double f : s.curve(Direction::press, 1).force_cN) EXPECT_EQ(f, 0.0);
  EXPECT_EQ(s.curve(Direction::press, 0), m.curve(Direction::press, 0));
  EXPECT_TRUE(validate_model(s).empty());
  EXPECT_THROW(edit_shift_curve(m, Direction::press, 5, 1.0), DomainError);
  EXPECT_THROW(edit_scale_force(m, 0.0), DomainError);
}

TEST(Edits, SetTravelResamplesRamp) {
  const auto m = make_model("ramp", grid_4mm(), {{0, 10, 5}}, [](Direction, std::size_t, double d) { return 3.0 + 7.5 * d; });
  const auto s = edit_set_travel(m, 2.2);
  ASSERT_EQ(s.grid.point_count(), 221u);
  for (const auto& [k, c] : s.curves) {
    for (std::size_t i = 0; i < c.force_cN.size(); ++i) EXPECT_NEAR(c.force_cN[i], 3.0 + 7.5 * s.grid.point(i), 1e-9);
  }
  EXPECT_TRUE(validate_model(s).empty());
}

TEST(Edits, SetTravelRejectsStrandedTrigger) {
  auto m = constant_model(20.0);
  m.vibrations.push_back({3.0, Direction::press, 8000.0, {0.5}});
  EXPECT_THROW(edit_set_travel(m, 2.2), DomainError);
  EXPECT_THROW(edit_set_travel(m, 2.205), DomainError);
}

TEST(Edits, VibrationTrigger) {
  auto m = constant_model(20.0);
  m.vibrations.push_back({3.0, Direction::press, 8000.0, {0.5}});
  EXPECT_DOUBLE_EQ(edit_set_vibration_trigger(m, 0, 1.5).vibrations[0].trigger_mm, 1.5);
  EXPECT_THROW(edit_set_vibration_trigger(m, 0, 4.5), DomainError);
  EXPECT_THROW(edit_set_vibration_trigger(m, 1, 1.0), DomainError);
}

TEST(Edits, RejectInvalidInput) {
  auto m = constant_model(20.0);
  m.curves.at(CurveKey{}).force_cN.pop_back();
  EXPECT_THROW(edit_scale_force(m, 2.0), DomainError);
}

TEST(ModelDocument, RoundTripRandomModels) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto m = random_model(seed);
    ASSERT_TRUE(validate_model(m).empty());
    EXPECT_EQ(parse_model(serialize_model(m)), m) << "seed " << seed;
  }
}

TEST(ModelDocument, TruncatedIsParseError) {
  const auto doc = serialize_model(constant_model(10.0));
  try {
    parse_model(doc.substr(0, doc.size() / 2));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(e.location().find("byte"), std::string::npos);
  }
}

TEST(ModelDocument, UnknownVersion) {
  auto doc = serialize_model(constant_model(10.0));
  doc.replace(doc.find("\"schema_version\": 1"), 19, "\"schema_version\": 999");
  try {
    parse_model(doc);
    FAIL() << "expected UnsupportedVersionError";
  } catch (const UnsupportedVersionError& e) {
    EXPECT_EQ(e.version(), 999);
  }
}

TEST(ModelDocument, LocatesSchemaViolations) {
  auto doc = serialize_model(constant_model(10.0));
  doc.replace(doc.find("\"press\""), 7, "\"upward\"");
  try {
    parse_model(doc);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), "/curves/0/direction");
  }
  EXPECT_THROW(parse_model("{\"schema_version\": 1}"), ParseError);
  EXPECT_THROW(parse_model("[]"), ParseError);
}
