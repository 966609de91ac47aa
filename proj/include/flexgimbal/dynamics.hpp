#pragma once

// Ground-truth plant and time-domain simulation of the gimbal-mounted robot.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "flexgimbal/error.hpp"
#include "flexgimbal/integrator.hpp"
#include "flexgimbal/model.hpp"
#include "flexgimbal/random.hpp"
#include "flexgimbal/units.hpp"

namespace flexgimbal {

/// Linear stroke-averaged voltage → (torque, thrust) map of one robot.
struct PlantModel {
  double roll_gain = 0.247e-6;   // N·m/V on ΔV
  double pitch_gain = 0.162e-6;  // N·m/V on V_off
  double roll_bias = 0.0;        // N·m
  double pitch_bias = 0.0;       // N·m
  double cross_gain_roll_from_pitch_voltage = 0.0;  // N·m/V
  double cross_gain_pitch_from_roll_voltage = 0.0;  // N·m/V
  double thrust_at_hover = 1.8e-4 * kStandardGravity;  // N
  double thrust_slope_pitch = 0.0;  // N/V
  double thrust_slope_roll = 0.0;   // N/V
  double tether_stiffness = 0.0;    // k_t, N·m/rad
  double torque_noise_sigma = 0.0;  // N·m per trial
  double thrust_noise_sigma = 0.0;  // N per trial
};

/// Both gimbal axes plus the mass of the robot they carry.
struct GimbalDevice {
  GimbalAxisParams roll;
  GimbalAxisParams pitch;
  double robot_mass = 1.8e-4;
};

struct PlantOutput {
  TorqueVector torque;
  double thrust = 0.0;
};

struct GimbalState {
  double theta_x = 0.0;
  double theta_y = 0.0;
  double rate_x = 0.0;
  double rate_y = 0.0;
};

struct AngularAcceleration {
  double roll = 0.0;
  double pitch = 0.0;
};

struct TraceSample {
  double t = 0.0;
  double theta_x = 0.0;
  double theta_y = 0.0;
  double thrust = std::numeric_limits<double>::quiet_NaN();  // N, NaN without a thrust channel
};

/// Uniformly sampled roll/pitch angles with an optional thrust channel.
struct AngleTrace {
  double sample_rate = 100.0;
  bool has_thrust = false;
  std::vector<TraceSample> samples;

  double duration() const { return samples.empty() ? 0.0 : samples.back().t - samples.front().t; }
};

inline constexpr double kTraceSpacingTolerance = 1e-9;  // s

/// Checks strictly increasing, uniformly spaced sample times.
inline void validate(const AngleTrace& trace) {
  if (!(trace.sample_rate > 0.0)) throw FormatError("trace sample rate must be positive");
  const double period = 1.0 / trace.sample_rate;
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    const double dt = trace.samples[i].t - trace.samples[i - 1].t;
    if (!(dt > 0.0))
      throw FormatError("trace time is not strictly increasing at sample " + std::to_string(i));
    if (std::abs(dt - period) > kTraceSpacingTolerance)
      throw FormatError("trace sample spacing is not uniform at sample " + std::to_string(i));
  }
}

inline void validate(const PlantModel& plant) {
  const double gains[] = {plant.roll_gain,
                          plant.pitch_gain,
                          plant.roll_bias,
                          plant.pitch_bias,
                          plant.cross_gain_roll_from_pitch_voltage,
                          plant.cross_gain_pitch_from_roll_voltage,
                          plant.thrust_slope_pitch,
                          plant.thrust_slope_roll};
  for (double v : gains)
    if (!std::isfinite(v)) throw InvalidParameter("plant gains and biases must be finite");
  if (!(plant.thrust_at_hover > 0.0)) throw InvalidParameter("hover thrust must be positive");
  if (!(plant.tether_stiffness >= 0.0)) throw InvalidParameter("tether stiffness must be non-negative");
  if (!(plant.torque_noise_sigma >= 0.0) || !(plant.thrust_noise_sigma >= 0.0))
    throw InvalidParameter("noise sigmas must be non-negative");
}

/// Stroke-averaged torque and thrust for one command. Noise is one Gaussian
/// draw per channel per trial, deterministic in `seed`.
inline PlantOutput plant_output(const PlantModel& plant, const ActuationCommand& cmd,
                                std::uint64_t seed = 0) {
  validate(plant);
  if (wing_signal_envelope(cmd).clipped)
    throw InvalidCommand("command (dV = " + format_number(cmd.roll_differential) +
                         " V, V_off = " + format_number(cmd.pitch_offset) +
                         " V) clips the wing signal at the supply rails");

  GaussianStream noise(seed);
  const double n_roll = noise.normal(plant.torque_noise_sigma);
  const double n_pitch = noise.normal(plant.torque_noise_sigma);
  const double n_thrust = noise.normal(plant.thrust_noise_sigma);

  const double dv = cmd.roll_differential;
  const double voff = cmd.pitch_offset;
  PlantOutput out;
  out.torque.roll = plant.roll_gain * dv + plant.cross_gain_roll_from_pitch_voltage * voff +
                    plant.roll_bias + n_roll;
  out.torque.pitch = plant.pitch_gain * voff + plant.cross_gain_pitch_from_roll_voltage * dv +
                     plant.pitch_bias + n_pitch;
  out.thrust = plant.thrust_at_hover + plant.thrust_slope_pitch * voff +
               plant.thrust_slope_roll * dv + n_thrust;
  return out;
}

/// Net torque about one flexure axis: applied torque minus gravity restoring,
/// flexure spring and damping.
inline double gimbal_net_torque(const GimbalAxisParams& axis, double robot_mass, double theta,
                                double theta_rate, double applied_torque,
                                double g = kStandardGravity) {
  const double s = std::sin(theta);
  const double resisting = axis.counterweight_mass * g * axis.counterweight_arm * s -
                           robot_mass * g * axis.robot_offset * s +
                           axis.flexure_stiffness * theta + axis.damping * theta_rate;
  return applied_torque - resisting;
}

/// Angular accelerations of the robot mounted on the gimbal, driven by the two
/// wing thrusts. `control` is an extra torque per axis, e.g. the trim integral term.
inline AngularAcceleration mounted_robot_accel(const RobotParams& robot, const MountingGeometry& mount,
                                               const GimbalAxisParams& roll_axis,
                                               const GimbalAxisParams& pitch_axis, double thrust1,
                                               double thrust2, const GimbalState& state,
                                               const TorqueVector& control = {},
                                               bool include_damping = true,
                                               double g = kStandardGravity) {
  const double b = robot.wing_moment_arm_roll;
  const double d = robot.wing_moment_arm_pitch;
  const double cx = include_damping ? roll_axis.damping : 0.0;
  const double cy = include_damping ? pitch_axis.damping : 0.0;

  const double roll_torque = (thrust1 - thrust2) * b - robot.mass * g * mount.com_offset_roll +
                             mount.balance_mass * g * mount.balance_offset_roll -
                             roll_axis.flexure_stiffness * state.theta_x - cx * state.rate_x +
                             control.roll;
  const double pitch_torque = -(thrust1 + thrust2) * d + robot.mass * g * mount.com_offset_pitch -
                              mount.balance_mass * g * mount.balance_offset_pitch -
                              pitch_axis.flexure_stiffness * state.theta_y - cy * state.rate_y +
                              control.pitch;
  return {roll_torque / robot.inertia.x(), pitch_torque / robot.inertia.y()};
}

struct SimulationOptions {
  double duration = 3.0;       // s
  double sample_rate = 100.0;  // Hz
  double dt = 1e-4;            // s, upper bound on the RK4 step
  bool tilt_correction = true;
  double g = kStandardGravity;
};

namespace detail {

/// Number of RK4 sub-steps per sample so the step never exceeds `dt` and
/// divides the sample period exactly.
inline std::size_t substeps_per_sample(double sample_rate, double dt) {
  if (!(sample_rate > 0.0)) throw InvalidParameter("sample rate must be positive");
  if (!(dt > 0.0)) throw InvalidParameter("integration step must be positive");
  const double ratio = 1.0 / (sample_rate * dt);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9)));
}

inline std::size_t sample_count(double duration, double sample_rate) {
  if (!(duration > 0.0)) throw InvalidParameter("duration must be positive");
  const double n = duration * sample_rate;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-6 * std::max(1.0, n))
    throw InvalidParameter("duration must be a whole number of sample periods");
  return static_cast<std::size_t>(rounded);
}

/// Per-axis derivative with the tether acting as an extra torsional spring.
inline StateVector<4> gimbal_derivative(const GimbalDevice& device, const TorqueVector& applied,
                                        double tether_stiffness, double g,
                                        const StateVector<4>& y) {
  const double roll = gimbal_net_torque(device.roll, device.robot_mass, y[0], y[1],
                                        applied.roll - tether_stiffness * y[0], g);
  const double pitch = gimbal_net_torque(device.pitch, device.robot_mass, y[2], y[3],
                                         applied.pitch - tether_stiffness * y[2], g);
  return {y[1], roll / device.roll.inertia, y[3], pitch / device.pitch.inertia};
}

}  // namespace detail

/// Integrates both gimbal axes from rest under a constant command and samples
/// the angles (and scale thrust) at `options.sample_rate`, t = 0 .. duration.
inline AngleTrace simulate_trial(const PlantModel& plant, const GimbalDevice& device,
                                 const ActuationCommand& cmd, const SimulationOptions& options = {},
                                 std::uint64_t seed = 0) {
  validate(device.roll);
  validate(device.pitch);
  const PlantOutput out = plant_output(plant, cmd, seed);
  const std::size_t n = detail::sample_count(options.duration, options.sample_rate);
  const std::size_t sub = detail::substeps_per_sample(options.sample_rate, options.dt);
  const double period = 1.0 / options.sample_rate;
  const double h = period / static_cast<double>(sub);

  AngleTrace trace;
  trace.sample_rate = options.sample_rate;
  trace.has_thrust = true;
  trace.samples.reserve(n + 1);

  auto deriv = [&](double, const StateVector<4>& y) {
    return detail::gimbal_derivative(device, out.torque, plant.tether_stiffness, options.g, y);
  };
  auto record = [&](std::size_t k, const StateVector<4>& y) {
    const double tilt = options.tilt_correction ? std::cos(y[0]) * std::cos(y[2]) : 1.0;
    trace.samples.push_back({static_cast<double>(k) * period, y[0], y[2], out.thrust * tilt});
  };

  StateVector<4> y{};
  record(0, y);
  for (std::size_t k = 1; k <= n; ++k) {
    const double t0 = static_cast<double>(k - 1) * period;
    for (std::size_t j = 0; j < sub; ++j) y = step_rk4(y, t0 + static_cast<double>(j) * h, h, deriv);
    record(k, y);
  }
  return trace;
}

}  // namespace flexgimbal
