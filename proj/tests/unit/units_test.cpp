#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "flexgimbal/error.hpp"
#include "flexgimbal/units.hpp"

using namespace flexgimbal;

TEST(Units, StiffnessInMicroNewtonMetres) {
  EXPECT_NEAR(parse_quantity("2.16 uNm/rad", dim::stiffness), 2.16e-6, 1e-20);
  EXPECT_NEAR(parse_quantity("2.16 µNm/rad", dim::stiffness), 2.16e-6, 1e-20);
  EXPECT_NEAR(parse_quantity("2.16e-6 Nm/rad", dim::stiffness), 2.16e-6, 1e-20);
}

TEST(Units, CompoundUnits) {
  EXPECT_DOUBLE_EQ(parse_quantity("4.5e-9 kg*m^2", dim::inertia), 4.5e-9);
  EXPECT_DOUBLE_EQ(parse_quantity("1 g*mm^2", dim::inertia), 1e-9);
  EXPECT_DOUBLE_EQ(parse_quantity("3 mm", dim::length), 3e-3);
  EXPECT_DOUBLE_EQ(parse_quantity("2.5 GPa", dim::pressure), 2.5e9);
  EXPECT_DOUBLE_EQ(parse_quantity("0.1 ms", dim::time), 1e-4);
  EXPECT_DOUBLE_EQ(parse_quantity("9.81 m/s^2", dim::acceleration), 9.81);
  EXPECT_DOUBLE_EQ(parse_quantity("1 uNm/rad/s", dim::integral_gain), 1e-6);
  EXPECT_DOUBLE_EQ(parse_quantity("1 Nm*s/rad", dim::damping), 1.0);
  EXPECT_NEAR(parse_quantity("180 deg", dim::angle), M_PI, 1e-15);
}

TEST(Units, MassUnitStandsInForForce) {
  EXPECT_NEAR(parse_quantity("180 mg", dim::force), 1.7658e-3, 1e-15);
  EXPECT_NEAR(parse_quantity("-0.257 mg/V", dim::force_per_volt), -0.257e-6 * 9.81, 1e-18);
  EXPECT_NEAR(parse_quantity("1 mg", dim::force, 10.0), 1e-5, 1e-18);
}

TEST(Units, Errors) {
  EXPECT_THROW(parse_quantity("1 furlong", dim::length), UnitError);
  EXPECT_THROW(parse_quantity("1 s", dim::length), UnitError);
  EXPECT_THROW(parse_quantity("1.5", dim::torque), UnitError);
  EXPECT_THROW(parse_quantity("abc uNm", dim::torque), ParseError);
  EXPECT_THROW(parse_quantity("1 mdeg", dim::angle), UnitError);
  EXPECT_DOUBLE_EQ(parse_quantity("0.7", dim::none), 0.7);
}

TEST(Units, FormatNumberIsShortestRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mant(-10.0, 10.0);
  std::uniform_int_distribution<int> expo(-12, 12);
  for (int i = 0; i < 1000; ++i) {
    const double v = mant(rng) * std::pow(10.0, expo(rng));
    EXPECT_EQ(parse_number(format_number(v)), v);
  }
  EXPECT_EQ(format_number(0.1), "0.1");
}

TEST(Units, QuantityRoundTripThroughExternalUnits) {
  struct Case {
    const char* unit;
    Dimension d;
  };
  const Case cases[] = {{"uNm", dim::torque},  {"Nm", dim::torque}, {"mg", dim::mass},
                        {"mm", dim::length},    {"deg", dim::angle}, {"uNm/rad", dim::stiffness},
                        {"mg", dim::force},     {"mg/V", dim::force_per_volt}};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& c : cases) {
    for (int i = 0; i < 100; ++i) {
      const double si = u(rng) * unit_scale(c.unit, c.d) * 100.0;
      const double back = parse_quantity(format_quantity(si, c.unit, c.d), c.d);
      EXPECT_NEAR(back, si, 1e-9 * std::abs(si)) << c.unit;
    }
  }
}

TEST(Units, DimensionAlgebra) {
  EXPECT_EQ(dim::torque, parse_unit("N*m").dimension);
  EXPECT_EQ(dim::stiffness * dim::angle, dim::torque);
  EXPECT_EQ(dim::force, parse_unit("kg*m/s^2").dimension);
}
