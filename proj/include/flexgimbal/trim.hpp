#pragma once

// Integral trimming on the gimbal. Each axis gets an extra torque −Ki·∫θ dt;
// once the robot holds level, the integral torque balances the robot's bias
// torque and is read out as the bias estimate.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "flexgimbal/dynamics.hpp"
#include "flexgimbal/error.hpp"
#include "flexgimbal/integrator.hpp"
#include "flexgimbal/model.hpp"

namespace flexgimbal {

struct TrimGains {
  double ki_roll = 0.0;   // N·m/(rad·s)
  double ki_pitch = 0.0;  // N·m/(rad·s)
};

struct TrimOptions {
  double duration = 20.0;          // s, give up after this much simulated time
  double angle_tolerance = 1e-4;   // rad
  double rate_tolerance = 1e-3;    // rad/s
  double hold_time = 0.5;          // s inside both tolerances
  double dt = 1e-4;                // s
  double sample_rate = 100.0;      // Hz, for the returned trace
  double g = kStandardGravity;
  ActuationCommand hover{.amplitude = 88.0};
};

struct TrimResult {
  TorqueVector bias_estimate;      // N·m
  TorqueVector trim_voltage;       // V, bias expressed through the plant gains
  double roll_convergence_time = 0.0;   // s
  double pitch_convergence_time = 0.0;  // s
  AngleTrace trace;
};

inline constexpr double kDefaultTrimGainFraction = 0.1;
inline constexpr double kPitchToRollGainRatio = 3.0;

/// Largest stable integral gain for one axis. The closed loop
/// I·s³ + c·s² + k·s + Ki is stable iff Ki < c·k / I.
inline double integral_gain_limit(const GimbalAxisParams& axis, double robot_mass,
                                  double tether_stiffness = 0.0, double g = kStandardGravity) {
  const double k = device_sensitivity(axis, g, robot_mass) + tether_stiffness;
  return axis.damping * k / axis.inertia;
}

/// Pitch gain is three times the roll gain so pitch levels first; both stay
/// a factor of ten inside their stability limit.
inline TrimGains default_trim_gains(const GimbalDevice& device, double tether_stiffness = 0.0,
                                    double g = kStandardGravity) {
  const double roll_limit = integral_gain_limit(device.roll, device.robot_mass, tether_stiffness, g);
  const double pitch_limit = integral_gain_limit(device.pitch, device.robot_mass, tether_stiffness, g);
  const double ki_roll =
      kDefaultTrimGainFraction * std::min(roll_limit, pitch_limit / kPitchToRollGainRatio);
  return {ki_roll, kPitchToRollGainRatio * ki_roll};
}

/// Voltage equivalent of a torque through a plant gain.
inline double torque_to_voltage(double torque, double gain) {
  if (gain == 0.0 || !std::isfinite(gain))
    throw InvalidParameter("cannot convert torque to voltage through a zero plant gain");
  return torque / gain;
}

inline TrimResult run_trim_controller(const PlantModel& plant, const GimbalDevice& device,
                                      const TrimGains& gains, const TrimOptions& options = {},
                                      std::uint64_t seed = 0) {
  if (!(gains.ki_roll >= 0.0) || !(gains.ki_pitch >= 0.0))
    throw InvalidParameter("trim gains must be non-negative");
  if (!(options.angle_tolerance > 0.0) || !(options.rate_tolerance > 0.0) ||
      !(options.hold_time > 0.0))
    throw InvalidParameter("trim tolerances must be positive");
  validate(device.roll);
  validate(device.pitch);

  const PlantOutput out = plant_output(plant, options.hover, seed);
  const std::size_t n = detail::sample_count(options.duration, options.sample_rate);
  const std::size_t sub = detail::substeps_per_sample(options.sample_rate, options.dt);
  const double period = 1.0 / options.sample_rate;
  const double h = period / static_cast<double>(sub);

  // y = {θx, θ̇x, ∫θx, θy, θ̇y, ∫θy}
  auto deriv = [&](double, const StateVector<6>& y) {
    const double roll = gimbal_net_torque(
        device.roll, device.robot_mass, y[0], y[1],
        out.torque.roll - plant.tether_stiffness * y[0] - gains.ki_roll * y[2], options.g);
    const double pitch = gimbal_net_torque(
        device.pitch, device.robot_mass, y[3], y[4],
        out.torque.pitch - plant.tether_stiffness * y[3] - gains.ki_pitch * y[5], options.g);
    return StateVector<6>{y[1], roll / device.roll.inertia, y[0],
                          y[4], pitch / device.pitch.inertia, y[3]};
  };

  TrimResult result;
  result.trace.sample_rate = options.sample_rate;
  result.trace.has_thrust = true;
  auto record = [&](std::size_t k, const StateVector<6>& y) {
    const double tilt = std::cos(y[0]) * std::cos(y[3]);
    result.trace.samples.push_back({static_cast<double>(k) * period, y[0], y[3], out.thrust * tilt});
  };

  auto inside = [&](double angle, double rate) {
    return std::abs(angle) < options.angle_tolerance && std::abs(rate) < options.rate_tolerance;
  };

  StateVector<6> y{};
  double roll_hold = 0.0, pitch_hold = 0.0;
  bool roll_done = false, pitch_done = false;
  record(0, y);
  for (std::size_t k = 1; k <= n && !(roll_done && pitch_done); ++k) {
    const double t0 = static_cast<double>(k - 1) * period;
    for (std::size_t j = 0; j < sub; ++j) {
      const double t = t0 + static_cast<double>(j + 1) * h;
      y = step_rk4(y, t - h, h, deriv);
      roll_hold = inside(y[0], y[1]) ? roll_hold + h : 0.0;
      pitch_hold = inside(y[3], y[4]) ? pitch_hold + h : 0.0;
      if (!roll_done && roll_hold >= options.hold_time - 0.5 * h) {
        roll_done = true;
        result.roll_convergence_time = t;
      }
      // An axis that leaves tolerance again after converging is not settled.
      if (roll_done && roll_hold == 0.0) roll_done = false;
      if (!pitch_done && pitch_hold >= options.hold_time - 0.5 * h) {
        pitch_done = true;
        result.pitch_convergence_time = t;
      }
      if (pitch_done && pitch_hold == 0.0) pitch_done = false;
    }
    record(k, y);
  }

  if (!(roll_done && pitch_done))
    throw ConvergenceFailure("trim controller did not converge within " +
                                 format_number(options.duration) + " s",
                             y[0], y[3], y[1], y[4]);

  result.bias_estimate = {gains.ki_roll * y[2], gains.ki_pitch * y[5]};
  result.trim_voltage = {torque_to_voltage(result.bias_estimate.roll, plant.roll_gain),
                         torque_to_voltage(result.bias_estimate.pitch, plant.pitch_gain)};
  return result;
}

/// Bias estimate from a recorded closed-loop trace: Ki times the trapezoidal
/// time integral of each angle.
inline TorqueVector bias_from_closed_loop_trace(const AngleTrace& trace, const TrimGains& gains) {
  validate(trace);
  if (trace.samples.size() < 2) throw InsufficientData("closed-loop trace needs at least two samples");
  double ix = 0.0, iy = 0.0;
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    const auto& a = trace.samples[i - 1];
    const auto& b = trace.samples[i];
    const double dt = b.t - a.t;
    ix += 0.5 * dt * (a.theta_x + b.theta_x);
    iy += 0.5 * dt * (a.theta_y + b.theta_y);
  }
  return {gains.ki_roll * ix, gains.ki_pitch * iy};
}

}  // namespace flexgimbal
