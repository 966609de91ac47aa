#pragma once

// Domain types of the flexured gimbal and its closed-form relations. All
// quantities are SI (N·m, rad, kg, m, V, s).
//
// Sign convention, fixed project-wide:
//   positive roll  = right wing down
//   positive pitch = nose up
//   positive ΔV    = larger wing-1 amplitude

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "flexgimbal/error.hpp"
#include "flexgimbal/units.hpp"

namespace flexgimbal {

/// Small-angle validity bound (15 deg). Past this, sinθ departs from θ by more than 1 %.
inline constexpr double kSmallAngleLimit = 0.26;

struct FlexureGeometry {
  double youngs_modulus = 0.0;  // Pa
  double thickness = 0.0;       // m
  double width = 0.0;           // m
  double length = 0.0;          // m
};

struct GimbalAxisParams {
  double flexure_stiffness = 0.0;   // k_f, N·m/rad
  double counterweight_mass = 0.0;  // m_b, kg
  double counterweight_arm = 0.0;   // l_b, m (below the axis)
  double damping = 0.0;             // c_d, N·m·s/rad
  double inertia = 4.5e-9;          // I, kg·m²
  double robot_offset = 0.0;        // l_R, m (robot COM above the axis)
};

struct RobotParams {
  double mass = 1.8e-4;  // 180 mg including mocap markers
  Eigen::Vector3d inertia{4.5e-9, 4.5e-9, 2.0e-9};
  double wing_moment_arm_roll = 5e-3;    // b, m
  double wing_moment_arm_pitch = 1e-3;   // d, m
  double flap_frequency = 180.0;         // Hz
};

/// Horizontal COM / balance-mass offsets of the mounted robot. All zero means
/// the robot COM sits exactly on both flexure axes.
struct MountingGeometry {
  double com_offset_roll = 0.0;       // p
  double balance_offset_roll = 0.0;   // q
  double com_offset_pitch = 0.0;      // r
  double balance_offset_pitch = 0.0;  // s
  double balance_mass = 0.0;          // m_b
};

struct ActuationCommand {
  double amplitude = 0.0;          // V_amp
  double roll_differential = 0.0;  // ΔV
  double pitch_offset = 0.0;       // V_off
  double bias_rail = 250.0;        // V_bias
};

struct TorqueVector {
  double roll = 0.0;
  double pitch = 0.0;

  friend bool operator==(const TorqueVector&, const TorqueVector&) = default;
};

struct WingSignal {
  double amplitude = 0.0;
  double mean = 0.0;
};

struct WingEnvelope {
  WingSignal wing1;
  WingSignal wing2;
  bool clipped = false;
};

inline void validate(const FlexureGeometry& geom) {
  if (!(geom.youngs_modulus > 0.0) || !(geom.thickness > 0.0) || !(geom.width > 0.0) ||
      !(geom.length > 0.0))
    throw InvalidParameter("flexure geometry fields must be strictly positive");
  if (geom.thickness > geom.width || geom.thickness > geom.length)
    throw InvalidParameter("flexure thickness must not exceed its width or length");
}

inline void validate(const GimbalAxisParams& axis) {
  if (!(axis.flexure_stiffness >= 0.0) || !(axis.counterweight_mass >= 0.0) ||
      !(axis.counterweight_arm >= 0.0) || !(axis.damping >= 0.0))
    throw InvalidParameter("gimbal axis stiffness, counterweight and damping must be non-negative");
  if (!(axis.inertia > 0.0)) throw InvalidParameter("gimbal axis inertia must be positive");
  if (!std::isfinite(axis.robot_offset)) throw InvalidParameter("robot offset must be finite");
}

inline void validate(const RobotParams& robot) {
  if (!(robot.mass > 0.0)) throw InvalidParameter("robot mass must be positive");
  if (!(robot.inertia.array() > 0.0).all()) throw InvalidParameter("robot inertia must be positive");
  if (!(robot.wing_moment_arm_roll > 0.0) || !(robot.wing_moment_arm_pitch > 0.0))
    throw InvalidParameter("wing moment arms must be positive");
}

inline void validate(const ActuationCommand& cmd) {
  if (!(cmd.amplitude > 0.0)) throw InvalidCommand("amplitude must be positive");
  if (!(cmd.bias_rail > 0.0)) throw InvalidCommand("bias rail must be positive");
  if (!std::isfinite(cmd.roll_differential) || !std::isfinite(cmd.pitch_offset))
    throw InvalidCommand("command voltages must be finite");
}

/// Bending stiffness of a rectangular flexure hinge, E·t³·w / (12·L).
inline double flexure_stiffness(const FlexureGeometry& geom) {
  validate(geom);
  return geom.youngs_modulus * geom.thickness * geom.thickness * geom.thickness * geom.width /
         (12.0 * geom.length);
}

/// Static sensitivity k_s = m_b·g·l_b − m_R·g·l_R + k_f.
///
/// The robot term vanishes when the flexure axes pass through the robot COM
/// (robot_offset = 0), which is the default mounting.
inline double device_sensitivity(const GimbalAxisParams& axis, double g = kStandardGravity,
                                 double robot_mass = 0.0) {
  validate(axis);
  const double ks = axis.counterweight_mass * g * axis.counterweight_arm -
                    robot_mass * g * axis.robot_offset + axis.flexure_stiffness;
  if (!(ks > 0.0))
    throw DegenerateSensitivity("device sensitivity " + format_number(ks) +
                                " N*m/rad is not positive; the robot cannot be held upright");
  return ks;
}

/// Torque of a hanging mass on a signed lever arm.
inline double weight_torque(double mass, double lever, double g = kStandardGravity) {
  if (!(mass >= 0.0)) throw InvalidParameter("mass must be non-negative");
  if (!std::isfinite(lever)) throw InvalidParameter("lever arm must be finite");
  return mass * g * lever;
}

/// Per-wing sinusoid: amplitude V_amp ± ΔV/2 about mean V_bias/2 + V_off.
/// Clipped when either wing leaves [0, V_bias].
inline WingEnvelope wing_signal_envelope(const ActuationCommand& cmd) {
  validate(cmd);
  WingEnvelope env;
  const double mean = cmd.bias_rail / 2.0 + cmd.pitch_offset;
  env.wing1 = {cmd.amplitude + cmd.roll_differential / 2.0, mean};
  env.wing2 = {cmd.amplitude - cmd.roll_differential / 2.0, mean};
  if (!(env.wing1.amplitude > 0.0) || !(env.wing2.amplitude > 0.0))
    throw InvalidCommand("wing amplitude must be positive (|dV|/2 exceeds V_amp)");
  auto clips = [&](const WingSignal& w) {
    return w.mean + w.amplitude > cmd.bias_rail || w.mean - w.amplitude < 0.0;
  };
  env.clipped = clips(env.wing1) || clips(env.wing2);
  return env;
}

inline double torque_from_deflection(double theta, double ks, double angle_limit = kSmallAngleLimit) {
  if (!(ks > 0.0)) throw DegenerateSensitivity("sensitivity must be positive");
  if (!(std::abs(theta) <= angle_limit))
    throw OutOfLinearRange("deflection " + format_number(theta) + " rad exceeds the linear range of " +
                           format_number(angle_limit) + " rad");
  return ks * theta;
}

inline double deflection_from_torque(double torque, double ks, double angle_limit = kSmallAngleLimit) {
  if (!(ks > 0.0)) throw DegenerateSensitivity("sensitivity must be positive");
  const double theta = torque / ks;
  if (!(std::abs(theta) <= angle_limit))
    throw OutOfLinearRange("torque " + format_number(torque) + " N*m deflects " + format_number(theta) +
                           " rad, beyond the linear range of " + format_number(angle_limit) + " rad");
  return theta;
}

/// Damping that gives the requested damping ratio for a given inertia and stiffness.
inline double damping_for_ratio(double zeta, double inertia, double stiffness) {
  return 2.0 * zeta * std::sqrt(inertia * stiffness);
}

}  // namespace flexgimbal
