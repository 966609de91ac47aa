#pragma once

// Fitted quantities and error metrics: calibration sensitivity, steady-state
// extraction, voltage→torque mapping, cross-axis coupling, thrust trends,
// inertial bias-torque estimation and free-flight validation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "flexgimbal/dynamics.hpp"
#include "flexgimbal/error.hpp"
#include "flexgimbal/kinematics.hpp"
#include "flexgimbal/model.hpp"
#include "flexgimbal/regression.hpp"

namespace flexgimbal {

enum class Axis { roll, pitch };

inline const char* to_string(Axis axis) { return axis == Axis::roll ? "roll" : "pitch"; }

// ---------------------------------------------------------------------------
// Steady state

struct SteadyStateOptions {
  double window = 0.5;             // s averaged at the end of the trial
  double total = 3.0;              // s the trace must cover
  double settle_tolerance = 0.01;  // rad peak-to-peak inside the window
};

struct SteadyState {
  double theta_x = 0.0;
  double theta_y = 0.0;
  double thrust = std::numeric_limits<double>::quiet_NaN();
  double peak_to_peak_x = 0.0;
  double peak_to_peak_y = 0.0;
  bool settled = false;
};

inline SteadyState steady_state_mean(const AngleTrace& trace, const SteadyStateOptions& options = {}) {
  if (!(options.window > 0.0) || !(options.window < options.total))
    throw InvalidParameter("averaging window must be positive and shorter than the trial");
  if (trace.samples.empty() || trace.duration() < options.total - kTraceSpacingTolerance)
    throw InsufficientData("trace covers " + format_number(trace.duration()) + " s, need " +
                           format_number(options.total) + " s");

  const double t_start = trace.samples.back().t - options.window - kTraceSpacingTolerance;
  double sx = 0.0, sy = 0.0, st = 0.0;
  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = -min_x;
  std::size_t n = 0;
  for (const auto& s : trace.samples) {
    if (s.t < t_start) continue;
    sx += s.theta_x;
    sy += s.theta_y;
    st += s.thrust;
    min_x = std::min(min_x, s.theta_x);
    max_x = std::max(max_x, s.theta_x);
    min_y = std::min(min_y, s.theta_y);
    max_y = std::max(max_y, s.theta_y);
    ++n;
  }

  SteadyState out;
  const double count = static_cast<double>(n);
  out.theta_x = sx / count;
  out.theta_y = sy / count;
  if (trace.has_thrust) out.thrust = st / count;
  out.peak_to_peak_x = max_x - min_x;
  out.peak_to_peak_y = max_y - min_y;
  out.settled = out.peak_to_peak_x <= options.settle_tolerance &&
                out.peak_to_peak_y <= options.settle_tolerance;
  return out;
}

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationPoint {
  double applied_torque = 0.0;  // N·m, signed
  double measured_angle = 0.0;  // rad
};

struct SensitivityFit {
  double sensitivity = 0.0;  // k_s, N·m/rad
  double intercept = 0.0;    // N·m, mounting-bias diagnostic
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

/// Least-squares slope of applied torque against static deflection.
/// Points must load the axis in both directions.
inline SensitivityFit fit_sensitivity(std::span<const CalibrationPoint> points) {
  if (points.size() < 2) throw RankDeficiency("calibration needs at least two points");
  const bool has_positive =
      std::any_of(points.begin(), points.end(), [](const auto& p) { return p.applied_torque > 0.0; });
  const bool has_negative =
      std::any_of(points.begin(), points.end(), [](const auto& p) { return p.applied_torque < 0.0; });
  if (!has_positive || !has_negative)
    throw InvalidParameter("calibration torques must span both directions");

  std::vector<double> angle, torque;
  angle.reserve(points.size());
  torque.reserve(points.size());
  for (const auto& p : points) {
    if (!std::isfinite(p.applied_torque) || !std::isfinite(p.measured_angle))
      throw InvalidParameter("calibration points must be finite");
    angle.push_back(p.measured_angle);
    torque.push_back(p.applied_torque);
  }
  const LineFit line = fit_line(angle, torque);
  return {line.slope, line.intercept, line.r_squared, line.n_points};
}

// ---------------------------------------------------------------------------
// Voltage → torque mapping

/// Steady-state outcome of one commanded trial.
struct MappingTrial {
  ActuationCommand command;
  TorqueVector torque;                                        // N·m
  double thrust = std::numeric_limits<double>::quiet_NaN();  // N
};

using MappingFit = LineFit;  // slope N·m/V, intercept N·m

struct MappingFits {
  MappingFit roll;
  MappingFit pitch;
};

/// The command voltage that drives an axis: ΔV for roll, V_off for pitch.
inline double axis_voltage(const ActuationCommand& cmd, Axis axis) {
  return axis == Axis::roll ? cmd.roll_differential : cmd.pitch_offset;
}

inline double axis_torque(const TorqueVector& torque, Axis axis) {
  return axis == Axis::roll ? torque.roll : torque.pitch;
}

/// Pools every cross-axis setting as a repeated measurement at the axis voltage.
inline MappingFit fit_axis_mapping(std::span<const MappingTrial> trials, Axis axis) {
  std::vector<double> v, tau;
  v.reserve(trials.size());
  tau.reserve(trials.size());
  for (const auto& t : trials) {
    v.push_back(axis_voltage(t.command, axis));
    tau.push_back(axis_torque(t.torque, axis));
  }
  try {
    return fit_line(v, tau);
  } catch (const RankDeficiency& e) {
    throw RankDeficiency(std::string(to_string(axis)) + " mapping: " + e.what());
  }
}

inline MappingFits fit_voltage_torque_mapping(std::span<const MappingTrial> trials) {
  return {fit_axis_mapping(trials, Axis::roll), fit_axis_mapping(trials, Axis::pitch)};
}

// ---------------------------------------------------------------------------
// Cross-axis coupling

struct ResidualPoint {
  double roll_voltage = 0.0;   // ΔV
  double pitch_voltage = 0.0;  // V_off
  double measured = 0.0;       // N·m
  double fitted = 0.0;         // N·m
  double residual = 0.0;       // N·m
};

struct CouplingReport {
  Axis axis = Axis::roll;
  double max_abs_residual = 0.0;  // N·m
  double actuated_range = 0.0;    // N·m
  double percent_of_range = 0.0;  // %
  std::vector<ResidualPoint> residual_grid;
};

/// Residuals from the single-axis trendline, relative to the torque range the
/// trendline spans over the commanded voltages.
inline CouplingReport coupling_error(std::span<const MappingTrial> trials, const MappingFit& fit,
                                     Axis axis) {
  if (trials.empty()) throw InsufficientData("coupling analysis needs trials");
  CouplingReport report;
  report.axis = axis;
  double v_min = std::numeric_limits<double>::infinity(), v_max = -v_min;
  for (const auto& t : trials) {
    const double v = axis_voltage(t.command, axis);
    v_min = std::min(v_min, v);
    v_max = std::max(v_max, v);
    ResidualPoint p;
    p.roll_voltage = t.command.roll_differential;
    p.pitch_voltage = t.command.pitch_offset;
    p.measured = axis_torque(t.torque, axis);
    p.fitted = fit(v);
    p.residual = p.measured - p.fitted;
    report.max_abs_residual = std::max(report.max_abs_residual, std::abs(p.residual));
    report.residual_grid.push_back(p);
  }
  report.actuated_range = std::abs(fit(v_max) - fit(v_min));
  if (!(report.actuated_range > 0.0))
    throw RankDeficiency(std::string(to_string(axis)) + " trendline spans no torque range");
  report.percent_of_range = 100.0 * report.max_abs_residual / report.actuated_range;
  return report;
}

// ---------------------------------------------------------------------------
// Thrust

struct ThrustReport {
  double mean_thrust = 0.0;            // N
  double max_percent_deviation = 0.0;  // % of mean
  double slope_pitch = 0.0;            // N/V against V_off
  double slope_roll = 0.0;             // N/V against ΔV
  std::size_t n_trials = 0;
};

inline ThrustReport thrust_analysis(std::span<const MappingTrial> trials) {
  if (trials.size() < 3) throw InsufficientData("thrust analysis needs at least three trials");
  std::vector<double> thrust, voff, dv;
  for (const auto& t : trials) {
    if (!std::isfinite(t.thrust)) throw InsufficientData("trial has no thrust channel");
    thrust.push_back(t.thrust);
    voff.push_back(t.command.pitch_offset);
    dv.push_back(t.command.roll_differential);
  }
  ThrustReport report;
  report.n_trials = trials.size();
  for (double f : thrust) report.mean_thrust += f;
  report.mean_thrust /= static_cast<double>(thrust.size());
  if (!(report.mean_thrust > 0.0)) throw InvalidParameter("mean thrust must be positive");
  for (double f : thrust)
    report.max_percent_deviation = std::max(report.max_percent_deviation,
                                            100.0 * std::abs(f - report.mean_thrust) / report.mean_thrust);
  report.slope_pitch = fit_line(voff, thrust).slope;
  report.slope_roll = fit_line(dv, thrust).slope;
  return report;
}

// ---------------------------------------------------------------------------
// Inertial bias-torque estimate from an attitude time series

enum class BiasMethod { full, diagonal_inertia };

struct AttitudeSample {
  double t = 0.0;
  Eigen::Vector3d euler = Eigen::Vector3d::Zero();  // (roll, pitch, yaw), zyx
};

struct BiasTorqueEstimate {
  Eigen::Vector3d tau_b = Eigen::Vector3d::Zero();  // N·m, averaged over the trace
  BiasMethod method = BiasMethod::full;
  std::size_t n_used = 0;
};

inline std::vector<AttitudeSample> attitude_from_trace(const AngleTrace& trace) {
  std::vector<AttitudeSample> out;
  out.reserve(trace.samples.size());
  for (const auto& s : trace.samples) out.push_back({s.t, {s.theta_x, s.theta_y, 0.0}});
  return out;
}

/// ω̂ = W⁻¹(θ)·θ̇ with central differences for θ̇, then a 5-point quadratic
/// Savitzky–Golay derivative for ω̂̇. Returns J·ω̂̇ (+ ω̂ × J·ω̂ for the full
/// method) averaged over all samples where both derivatives exist.
inline BiasTorqueEstimate estimate_bias_torque(std::span<const AttitudeSample> samples,
                                               const Eigen::Vector3d& inertia, BiasMethod method) {
  constexpr std::size_t kMinSamples = 7;
  if (samples.size() < kMinSamples)
    throw InsufficientData("bias estimation needs at least " + std::to_string(kMinSamples) + " samples");
  if (!(inertia.array() > 0.0).all()) throw InvalidParameter("inertia must be positive");

  const double h = (samples.back().t - samples.front().t) / static_cast<double>(samples.size() - 1);
  if (!(h > 0.0)) throw FormatError("attitude samples must advance in time");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (std::abs(samples[i].t - samples[i - 1].t - h) > kTraceSpacingTolerance)
      throw FormatError("attitude samples must be uniformly spaced");

  const std::size_t n = samples.size();
  std::vector<Eigen::Vector3d> omega(n, Eigen::Vector3d::Zero());
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Eigen::Vector3d rate = (samples[i + 1].euler - samples[i - 1].euler) / (2.0 * h);
    omega[i] = inverse_euler_rates(samples[i].euler, rate);
  }

  BiasTorqueEstimate est;
  est.method = method;
  const Eigen::Matrix3d J = inertia.asDiagonal();
  for (std::size_t i = 3; i + 3 < n; ++i) {
    const Eigen::Vector3d omega_dot =
        (-2.0 * omega[i - 2] - omega[i - 1] + omega[i + 1] + 2.0 * omega[i + 2]) / (10.0 * h);
    Eigen::Vector3d tau = J * omega_dot;
    if (method == BiasMethod::full) tau += omega[i].cross(J * omega[i]);
    est.tau_b += tau;
    ++est.n_used;
  }
  est.tau_b /= static_cast<double>(est.n_used);
  return est;
}

// ---------------------------------------------------------------------------
// Free-flight validation

struct FreeFlightPoint {
  double trim_voltage = 0.0;  // V
  double torque = 0.0;        // N·m the trim must cancel
};

struct ValidationResult {
  double percent_error = 0.0;        // max discrepancy / free-flight torque span, %
  double slope_error_percent = 0.0;  // |s_device − s_freeflight| / |s_freeflight|, %
  LineFit freeflight;
  double voltage_min = 0.0;
  double voltage_max = 0.0;
};

/// Compares the device trendline with the free-flight line over the voltage
/// range the free-flight points cover. `tether_margin` (N·m) is subtracted
/// from each discrepancy before taking the maximum.
inline ValidationResult validate_mapping(const MappingFit& device_fit,
                                         std::span<const FreeFlightPoint> points,
                                         double tether_margin = 0.0) {
  if (points.size() < 2) throw InsufficientData("validation needs at least two free-flight points");
  if (!(tether_margin >= 0.0)) throw InvalidParameter("tether margin must be non-negative");
  std::vector<double> v, tau;
  for (const auto& p : points) {
    v.push_back(p.trim_voltage);
    tau.push_back(p.torque);
  }
  ValidationResult out;
  try {
    out.freeflight = fit_line(v, tau);
  } catch (const RankDeficiency&) {
    throw RankDeficiency("free-flight points share one trim voltage");
  }
  out.voltage_min = *std::min_element(v.begin(), v.end());
  out.voltage_max = *std::max_element(v.begin(), v.end());
  const double span = std::abs(out.freeflight(out.voltage_max) - out.freeflight(out.voltage_min));

  // Both lines are affine, so the largest gap lies at an end of the range.
  double worst = 0.0;
  for (double x : {out.voltage_min, out.voltage_max})
    worst = std::max(worst, std::max(0.0, std::abs(device_fit(x) - out.freeflight(x)) - tether_margin));
  out.percent_error = 100.0 * worst / span;
  out.slope_error_percent =
      100.0 * std::abs(device_fit.slope - out.freeflight.slope) / std::abs(out.freeflight.slope);
  return out;
}

}  // namespace flexgimbal
