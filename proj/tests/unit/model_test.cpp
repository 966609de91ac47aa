#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "flexgimbal/error.hpp"
#include "flexgimbal/model.hpp"

using namespace flexgimbal;

namespace {
const FlexureGeometry kFlexure{2.5e9, 12e-6, 3e-3, 500e-6};
}

TEST(FlexureStiffness, DesignValue) {
  EXPECT_NEAR(flexure_stiffness(kFlexure), 2.16e-6, 2.16e-6 * 1e-12);
}

TEST(FlexureStiffness, DoubleWidth) {
  FlexureGeometry g = kFlexure;
  g.width = 6e-3;
  EXPECT_NEAR(flexure_stiffness(g), 4.32e-6, 4.32e-6 * 1e-12);
}

TEST(FlexureStiffness, ZeroThicknessRejected) {
  FlexureGeometry g = kFlexure;
  g.thickness = 0.0;
  EXPECT_THROW(flexure_stiffness(g), InvalidParameter);
  g.thickness = -1e-6;
  EXPECT_THROW(flexure_stiffness(g), InvalidParameter);
}

TEST(FlexureStiffness, ScalingLaws) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int i = 0; i < 200; ++i) {
    const FlexureGeometry g{2.5e9 * u(rng), 12e-6 * u(rng), 3e-3 * u(rng), 500e-6 * u(rng)};
    const double k = flexure_stiffness(g);
    FlexureGeometry w2 = g, t2 = g, l2 = g, e2 = g;
    w2.width *= 2.0;
    t2.thickness *= 2.0;
    l2.length *= 2.0;
    e2.youngs_modulus *= 2.0;
    EXPECT_DOUBLE_EQ(flexure_stiffness(w2), 2.0 * k);
    EXPECT_DOUBLE_EQ(flexure_stiffness(t2), 8.0 * k);
    EXPECT_DOUBLE_EQ(flexure_stiffness(l2), 0.5 * k);
    EXPECT_DOUBLE_EQ(flexure_stiffness(e2), 2.0 * k);
  }
}

TEST(DeviceSensitivity, FlexureOnly) {
  GimbalAxisParams a;
  a.flexure_stiffness = 2.16e-6;
  a.counterweight_arm = 0.3;
  EXPECT_DOUBLE_EQ(device_sensitivity(a), 2.16e-6);
}

TEST(DeviceSensitivity, CounterweightOnly) {
  GimbalAxisParams a;
  a.counterweight_mass = 1e-3;
  a.counterweight_arm = 1e-2;
  EXPECT_NEAR(device_sensitivity(a, 9.81), 9.81e-5, 1e-18);
}

TEST(DeviceSensitivity, ReferenceRollSensitivity) {
  GimbalAxisParams a;
  a.flexure_stiffness = 0.5e-6;
  a.counterweight_mass = 50e-6;
  a.counterweight_arm = (1.518e-6 - 0.5e-6) / (50e-6 * 9.81);
  EXPECT_NEAR(device_sensitivity(a), 1.518e-6, 1e-18);
}

TEST(DeviceSensitivity, TopHeavyIsDegenerate) {
  GimbalAxisParams a;
  a.flexure_stiffness = 1e-7;
  a.robot_offset = 1e-3;
  EXPECT_THROW(device_sensitivity(a, 9.81, 1.8e-4), DegenerateSensitivity);
  EXPECT_THROW(device_sensitivity(GimbalAxisParams{}), DegenerateSensitivity);
}

TEST(WeightTorque, CalibrationWeights) {
  EXPECT_NEAR(weight_torque(31.8e-6, 4e-3), 1.248e-6, 1.248e-6 * 2e-3);
  EXPECT_NEAR(weight_torque(25e-6, -4e-3), -0.981e-6, 1e-18);
  EXPECT_EQ(weight_torque(0.0, 5.0), 0.0);
  EXPECT_THROW(weight_torque(-1e-6, 1e-3), InvalidParameter);
}

TEST(WeightTorque, Bilinear) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double m = std::abs(u(rng)) * 1e-4, l = u(rng) * 1e-2, a = std::abs(u(rng)) * 3;
    EXPECT_NEAR(weight_torque(a * m, l), a * weight_torque(m, l), 1e-20);
    EXPECT_NEAR(weight_torque(m, a * l), a * weight_torque(m, l), 1e-20);
  }
}

TEST(WingEnvelope, Symmetric) {
  const auto env = wing_signal_envelope({100.0, 0.0, 0.0, 250.0});
  EXPECT_DOUBLE_EQ(env.wing1.amplitude, 100.0);
  EXPECT_DOUBLE_EQ(env.wing2.amplitude, 100.0);
  EXPECT_DOUBLE_EQ(env.wing1.mean, 125.0);
  EXPECT_DOUBLE_EQ(env.wing2.mean, 125.0);
  EXPECT_FALSE(env.clipped);
}

TEST(WingEnvelope, ExcludedCornerClips) {
  const auto env = wing_signal_envelope({110.0, 50.0, 15.0, 250.0});
  EXPECT_DOUBLE_EQ(env.wing1.amplitude, 135.0);
  EXPECT_DOUBLE_EQ(env.wing1.mean, 140.0);
  EXPECT_TRUE(env.clipped);
  EXPECT_TRUE(wing_signal_envelope({110.0, -50.0, -15.0, 250.0}).clipped);
}

// With 88 V drive exactly the four (±50 V, ±15 V) corners of the mapping grid clip.
TEST(WingEnvelope, DefaultAmplitudeClipsOnlyCorners) {
  for (double dv : {0.0, 15.0, -15.0, 30.0, -30.0, 50.0, -50.0})
    for (double voff : {0.0, 5.0, -5.0, 10.0, -10.0, 15.0, -15.0}) {
      const bool corner = std::abs(dv) == 50.0 && std::abs(voff) == 15.0;
      EXPECT_EQ(wing_signal_envelope({88.0, dv, voff, 250.0}).clipped, corner) << dv << ' ' << voff;
    }
}

TEST(WingEnvelope, ClipDecisionIsSymmetric) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dv(-120.0, 120.0), voff(-60.0, 60.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = dv(rng), b = voff(rng);
    EXPECT_EQ(wing_signal_envelope({90.0, a, b, 250.0}).clipped,
              wing_signal_envelope({90.0, -a, -b, 250.0}).clipped);
  }
}

TEST(WingEnvelope, NonPositiveAmplitudeRejected) {
  EXPECT_THROW(wing_signal_envelope({20.0, 40.0, 0.0, 250.0}), InvalidCommand);
  EXPECT_THROW(wing_signal_envelope({0.0, 0.0, 0.0, 250.0}), InvalidCommand);
}

TEST(Deflection, Examples) {
  EXPECT_EQ(torque_from_deflection(0.0, 1.518e-6), 0.0);
  EXPECT_NEAR(deflection_from_torque(0.3e-6, 1.518e-6), 0.1976, 1e-4);
  EXPECT_NEAR(torque_from_deflection(0.1, 1.882e-6), 1.882e-7, 1e-20);
}

TEST(Deflection, LinearRangeEnforced) {
  EXPECT_THROW(torque_from_deflection(0.3, 1e-6), OutOfLinearRange);
  EXPECT_THROW(deflection_from_torque(1e-6, 1e-6), OutOfLinearRange);
  EXPECT_THROW(deflection_from_torque(1e-7, 0.0), DegenerateSensitivity);
}

TEST(Deflection, InversePair) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ks(1e-7, 1e-4), frac(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double k = ks(rng);
    const double tau = frac(rng) * k * kSmallAngleLimit;
    EXPECT_NEAR(torque_from_deflection(deflection_from_torque(tau, k), k), tau, 1e-12 * std::abs(tau));
  }
}

TEST(Damping, RatioFormula) {
  EXPECT_DOUBLE_EQ(damping_for_ratio(0.5, 4.0, 9.0), 6.0);
}
