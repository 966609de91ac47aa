#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "flexgimbal/dynamics.hpp"
#include "flexgimbal/error.hpp"
#include "flexgimbal/trim.hpp"

using namespace flexgimbal;

namespace {

// Counterweighted gimbal with k_s ≈ 1.518 / 1.882 µNm/rad.
GimbalDevice soft_device() {
  GimbalDevice d;
  d.roll.flexure_stiffness = 0.5e-6;
  d.roll.counterweight_mass = 50e-6;
  d.roll.counterweight_arm = 2.0754e-3;
  d.pitch = d.roll;
  d.pitch.counterweight_arm = 2.8175e-3;
  for (auto* a : {&d.roll, &d.pitch}) a->damping = damping_for_ratio(0.7, a->inertia, device_sensitivity(*a));
  return d;
}

GimbalDevice stiff_device() {
  GimbalDevice d;
  d.roll.flexure_stiffness = 1e-4;
  d.roll.damping = damping_for_ratio(0.7, d.roll.inertia, 1e-4);
  d.pitch = d.roll;
  return d;
}

PlantModel biased(double roll, double pitch) {
  PlantModel p;
  p.roll_bias = roll;
  p.pitch_bias = pitch;
  return p;
}

// Largest real part among the roots of I·s³ + c·s² + k·s + Ki.
double max_real_root(double inertia, double c, double k, double ki) {
  Eigen::Matrix3d companion;
  companion << -c / inertia, -k / inertia, -ki / inertia, 1, 0, 0, 0, 1, 0;
  return companion.eigenvalues().real().maxCoeff();
}

}  // namespace

TEST(Trim, ZeroBias) {
  const GimbalDevice d = soft_device();
  const auto r = run_trim_controller(biased(0, 0), d, default_trim_gains(d));
  EXPECT_NEAR(r.bias_estimate.roll, 0.0, 1e-9);
  EXPECT_NEAR(r.bias_estimate.pitch, 0.0, 1e-9);
  EXPECT_NEAR(r.trim_voltage.roll, 0.0, 1e-9);
}

TEST(Trim, RecoversRollBias) {
  const GimbalDevice d = soft_device();
  const auto r = run_trim_controller(biased(1e-6, 0), d, default_trim_gains(d));
  EXPECT_NEAR(r.bias_estimate.roll, 1e-6, 1e-8);
  EXPECT_LT(std::abs(r.trace.samples.back().theta_x), 1e-4);
}

TEST(Trim, TrimVoltageMatchesFreeFlightTrim) {
  const GimbalDevice d = soft_device();
  const PlantModel p = biased(0.247e-6 * 34.0, 0.0);
  const auto r = run_trim_controller(p, d, default_trim_gains(d));
  EXPECT_NEAR(r.trim_voltage.roll, 34.0, 0.34);
  EXPECT_LT(r.roll_convergence_time, 10.0);
}

TEST(Trim, PitchLevelsFirst) {
  const GimbalDevice d = soft_device();
  const TrimGains g = default_trim_gains(d);
  EXPECT_DOUBLE_EQ(g.ki_pitch, 3.0 * g.ki_roll);
  const auto r = run_trim_controller(biased(5e-6, 5e-6), d, g);
  EXPECT_LT(r.pitch_convergence_time, r.roll_convergence_time);
}

TEST(Trim, GainLimitMatchesCharacteristicRoots) {
  for (const GimbalDevice& d : {soft_device(), stiff_device()}) {
    const auto& a = d.roll;
    const double k = device_sensitivity(a, kStandardGravity, d.robot_mass);
    const double limit = integral_gain_limit(a, d.robot_mass);
    EXPECT_LT(max_real_root(a.inertia, a.damping, k, 0.99 * limit), 0.0);
    EXPECT_GT(max_real_root(a.inertia, a.damping, k, 1.01 * limit), 0.0);
  }
}

TEST(Trim, UnstableGainsFail) {
  const GimbalDevice d = stiff_device();
  const double limit = integral_gain_limit(d.roll, d.robot_mass);
  TrimOptions o;
  o.duration = 2.0;
  try {
    run_trim_controller(biased(1e-6, 0), d, {2.0 * limit, 2.0 * limit}, o);
    FAIL() << "expected a convergence failure";
  } catch (const ConvergenceFailure& e) {
    EXPECT_GT(std::abs(e.roll_angle()) + std::abs(e.roll_rate()), 0.0);
  } catch (const DivergenceError&) {
  }
}

TEST(Trim, FixedPoint) {
  for (const GimbalDevice& d : {soft_device(), stiff_device()}) {
    const PlantModel p = biased(-7e-6, 3e-6);
    const auto r = run_trim_controller(p, d, default_trim_gains(d));
    PlantModel trimmed = p;
    trimmed.roll_bias -= r.bias_estimate.roll;
    trimmed.pitch_bias -= r.bias_estimate.pitch;
    const auto trace = simulate_trial(trimmed, d, {.amplitude = 88.0});
    for (const auto& s : trace.samples) {
      EXPECT_LT(std::abs(s.theta_x), 1e-4);
      EXPECT_LT(std::abs(s.theta_y), 1e-4);
    }
  }
}

TEST(Trim, RecordedTraceGivesSameBias) {
  const GimbalDevice d = soft_device();
  const TrimGains g = default_trim_gains(d);
  const auto r = run_trim_controller(biased(4e-6, -2e-6), d, g);
  const TorqueVector b = bias_from_closed_loop_trace(r.trace, g);
  EXPECT_NEAR(b.roll, r.bias_estimate.roll, 4e-6 * 1e-2);
  EXPECT_NEAR(b.pitch, r.bias_estimate.pitch, 2e-6 * 1e-2);
}

TEST(Trim, InvalidInputs) {
  const GimbalDevice d = soft_device();
  EXPECT_THROW(run_trim_controller(biased(0, 0), d, {-1.0, 1.0}), InvalidParameter);
  EXPECT_THROW(torque_to_voltage(1e-6, 0.0), InvalidParameter);
  AngleTrace one;
  one.samples.push_back({});
  EXPECT_THROW(bias_from_closed_loop_trace(one, {1, 1}), InsufficientData);
}
