#pragma once

// Trial manifest: device, robot, plant, voltage grid and measurement protocol
// for one campaign. Every physical value carries a unit; see manifests/ for
// complete examples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flexgimbal/dynamics.hpp"
#include "flexgimbal/error.hpp"
#include "flexgimbal/io/config.hpp"
#include "flexgimbal/io/csv.hpp"
#include "flexgimbal/model.hpp"
#include "flexgimbal/trim.hpp"
#include "flexgimbal/units.hpp"

namespace flexgimbal::io {

inline constexpr int kManifestFormatVersion = 1;
inline constexpr double kDefaultDampingRatio = 0.7;
inline constexpr double kVoltageMatchTolerance = 1e-9;  // V

struct VoltageGrid {
  std::vector<double> roll;   // ΔV values, V
  std::vector<double> pitch;  // V_off values, V
  std::vector<std::pair<double, double>> exclusions;  // (ΔV, V_off)
};

struct Protocol {
  double duration = 3.0;           // s per trial
  double window = 0.5;             // s averaged at the end
  double sample_rate = 100.0;      // Hz
  double dt = 1e-4;                // s
  double settle_tolerance = 0.01;  // rad
  bool tilt_correction = true;
};

struct TrimSettings {
  std::optional<TrimGains> gains;  // derived from the device when absent
  double duration = 20.0;
  double angle_tolerance = 1e-4;
  double rate_tolerance = 1e-3;
  double hold_time = 0.5;
};

struct CalibrationOverride {
  double roll = 0.0;   // N·m/rad
  double pitch = 0.0;  // N·m/rad
};

struct TrialManifest {
  int format_version = kManifestFormatVersion;
  std::uint64_t seed = 0;
  double gravity = kStandardGravity;
  GimbalDevice device;
  RobotParams robot;
  PlantModel plant;
  ActuationCommand base_command{.amplitude = 88.0};
  VoltageGrid grid;
  Protocol protocol;
  TrimSettings trim;
  std::optional<CalibrationOverride> calibration;

  SimulationOptions simulation_options() const {
    return {protocol.duration, protocol.sample_rate, protocol.dt, protocol.tilt_correction, gravity};
  }

  TrimGains trim_gains() const {
    return trim.gains ? *trim.gains : default_trim_gains(device, plant.tether_stiffness, gravity);
  }

  TrimOptions trim_options() const {
    TrimOptions o;
    o.duration = trim.duration;
    o.angle_tolerance = trim.angle_tolerance;
    o.rate_tolerance = trim.rate_tolerance;
    o.hold_time = trim.hold_time;
    o.dt = protocol.dt;
    o.sample_rate = protocol.sample_rate;
    o.g = gravity;
    o.hover = base_command;
    return o;
  }
};

inline bool same_voltage(double a, double b) { return std::abs(a - b) <= kVoltageMatchTolerance; }

inline void validate(const TrialManifest& m) {
  if (m.grid.roll.empty() || m.grid.pitch.empty()) throw ManifestError("voltage grid is empty");
  for (const auto& [dv, voff] : m.grid.exclusions) {
    const bool in_roll = std::any_of(m.grid.roll.begin(), m.grid.roll.end(),
                                     [&](double v) { return same_voltage(v, dv); });
    const bool in_pitch = std::any_of(m.grid.pitch.begin(), m.grid.pitch.end(),
                                      [&](double v) { return same_voltage(v, voff); });
    if (!in_roll || !in_pitch)
      throw ManifestError("exclusion (" + format_number(dv) + " V, " + format_number(voff) +
                          " V) is not a grid point");
  }
  if (!(m.protocol.window > 0.0) || !(m.protocol.window < m.protocol.duration))
    throw ManifestError("averaging window must be positive and shorter than the trial duration");
  if (!(m.protocol.sample_rate > 0.0) || !(m.protocol.dt > 0.0))
    throw ManifestError("sample rate and integration step must be positive");
  if (!(m.gravity > 0.0)) throw ManifestError("gravity must be positive");
  if (m.calibration && (!(m.calibration->roll > 0.0) || !(m.calibration->pitch > 0.0)))
    throw ManifestError("calibrated sensitivities must be positive");
  try {
    flexgimbal::validate(m.device.roll);
    flexgimbal::validate(m.device.pitch);
    flexgimbal::validate(m.robot);
    flexgimbal::validate(m.plant);
    flexgimbal::validate(m.base_command);
  } catch (const InvalidParameter& e) {
    throw ManifestError(e.what());
  } catch (const InvalidCommand& e) {
    throw ManifestError(e.what());
  }
}

/// Grid commands in row-major order (ΔV outer, V_off inner), exclusions removed.
inline std::vector<ActuationCommand> generate_trial_commands(const TrialManifest& m) {
  validate(m);
  std::vector<ActuationCommand> out;
  for (double dv : m.grid.roll) {
    for (double voff : m.grid.pitch) {
      const bool excluded =
          std::any_of(m.grid.exclusions.begin(), m.grid.exclusions.end(), [&](const auto& ex) {
            return same_voltage(ex.first, dv) && same_voltage(ex.second, voff);
          });
      if (excluded) continue;
      ActuationCommand cmd = m.base_command;
      cmd.roll_differential = dv;
      cmd.pitch_offset = voff;
      out.push_back(cmd);
    }
  }
  return out;
}

namespace detail {

inline GimbalAxisParams read_axis(const Config& c, const std::string& prefix, double robot_mass, double g) {
  GimbalAxisParams a;
  const bool has_long = c.contains(prefix + "flexure_stiffness"), has_short = c.contains(prefix + "k_f");
  if (has_long && has_short) throw ManifestError(prefix + "k_f and " + prefix + "flexure_stiffness are the same key");
  a.flexure_stiffness = get_quantity(c, prefix + (has_short ? "k_f" : "flexure_stiffness"), dim::stiffness, g);
  a.counterweight_mass = get_quantity_or(c, prefix + "counterweight_mass", dim::mass, 0.0, g);
  a.counterweight_arm = get_quantity_or(c, prefix + "counterweight_arm", dim::length, 0.0, g);
  a.inertia = get_quantity_or(c, prefix + "inertia", dim::inertia, a.inertia, g);
  a.robot_offset = get_quantity_or(c, prefix + "robot_offset", dim::length, 0.0, g);
  if (c.contains(prefix + "damping")) {
    a.damping = get_quantity(c, prefix + "damping", dim::damping, g);
  } else {
    double zeta = kDefaultDampingRatio;
    if (c.contains(prefix + "damping_ratio")) zeta = get_number(c, prefix + "damping_ratio");
    try {
      a.damping = damping_for_ratio(zeta, a.inertia, device_sensitivity(a, g, robot_mass));
    } catch (const Error& e) {
      throw ManifestError(prefix + ": " + e.what());
    }
  }
  return a;
}

inline void check_known_keys(const Config& c) {
  static const std::vector<std::string> known = {
      "format_version", "seed", "gravity",
      "protocol.duration", "protocol.window", "protocol.sample_rate", "protocol.step",
      "protocol.settle_tolerance", "protocol.tilt_correction",
      "robot.mass", "robot.inertia", "robot.wing_moment_arm_roll", "robot.wing_moment_arm_pitch",
      "robot.flap_frequency",
      "plant.roll_gain", "plant.pitch_gain", "plant.roll_bias", "plant.pitch_bias",
      "plant.cross_gain_roll_from_pitch_voltage", "plant.cross_gain_pitch_from_roll_voltage",
      "plant.thrust_at_hover", "plant.thrust_slope_pitch", "plant.thrust_slope_roll",
      "plant.tether_stiffness", "plant.torque_noise_sigma", "plant.thrust_noise_sigma",
      "command.amplitude", "command.bias_rail",
      "grid.roll", "grid.pitch", "grid.exclude",
      "trim.ki_roll", "trim.ki_pitch", "trim.duration", "trim.angle_tolerance",
      "trim.rate_tolerance", "trim.hold_time",
      "calibration.roll", "calibration.pitch"};
  static const std::vector<std::string> axis_keys = {"flexure_stiffness", "k_f", "counterweight_mass",
                                                     "counterweight_arm", "damping", "damping_ratio",
                                                     "inertia", "robot_offset"};
  for (const auto& [key, value] : c.values()) {
    bool ok = std::find(known.begin(), known.end(), key) != known.end();
    for (const char* axis : {"device.roll.", "device.pitch."})
      for (const auto& k : axis_keys) ok = ok || key == axis + k;
    if (!ok) throw ManifestError("line " + std::to_string(value.line) + ": unknown key '" + key + "'");
  }
}

}  // namespace detail

inline TrialManifest parse_manifest(std::string_view text) {
  const Config c = parse_config(text);
  detail::check_known_keys(c);

  TrialManifest m;
  if (c.contains("format_version")) {
    const double v = get_number(c, "format_version");
    if (v != kManifestFormatVersion)
      throw ManifestError("unsupported manifest format_version " + format_number(v));
  }
  if (c.contains("seed")) m.seed = get_unsigned(c, "seed");
  m.gravity = get_quantity_or(c, "gravity", dim::acceleration, kStandardGravity);
  const double g = m.gravity;

  auto& p = m.protocol;
  p.duration = get_quantity_or(c, "protocol.duration", dim::time, p.duration, g);
  p.window = get_quantity_or(c, "protocol.window", dim::time, p.window, g);
  p.sample_rate = get_quantity_or(c, "protocol.sample_rate", dim::frequency, p.sample_rate, g);
  p.dt = get_quantity_or(c, "protocol.step", dim::time, p.dt, g);
  p.settle_tolerance = get_quantity_or(c, "protocol.settle_tolerance", dim::angle, p.settle_tolerance, g);
  p.tilt_correction = get_bool_or(c, "protocol.tilt_correction", p.tilt_correction);

  auto& r = m.robot;
  r.mass = get_quantity_or(c, "robot.mass", dim::mass, r.mass, g);
  if (const auto* v = c.find("robot.inertia")) {
    auto j = get_quantity_list(*v, dim::inertia, "robot.inertia", g);
    if (j.size() != 3) throw ManifestError("robot.inertia must list three principal inertias");
    r.inertia = {j[0], j[1], j[2]};
  }
  r.wing_moment_arm_roll = get_quantity_or(c, "robot.wing_moment_arm_roll", dim::length, r.wing_moment_arm_roll, g);
  r.wing_moment_arm_pitch =
      get_quantity_or(c, "robot.wing_moment_arm_pitch", dim::length, r.wing_moment_arm_pitch, g);
  r.flap_frequency = get_quantity_or(c, "robot.flap_frequency", dim::frequency, r.flap_frequency, g);

  m.device.robot_mass = r.mass;
  m.device.roll = detail::read_axis(c, "device.roll.", r.mass, g);
  m.device.pitch = detail::read_axis(c, "device.pitch.", r.mass, g);

  auto& pl = m.plant;
  pl.roll_gain = get_quantity(c, "plant.roll_gain", dim::torque_per_volt, g);
  pl.pitch_gain = get_quantity(c, "plant.pitch_gain", dim::torque_per_volt, g);
  pl.roll_bias = get_quantity_or(c, "plant.roll_bias", dim::torque, 0.0, g);
  pl.pitch_bias = get_quantity_or(c, "plant.pitch_bias", dim::torque, 0.0, g);
  pl.cross_gain_roll_from_pitch_voltage =
      get_quantity_or(c, "plant.cross_gain_roll_from_pitch_voltage", dim::torque_per_volt, 0.0, g);
  pl.cross_gain_pitch_from_roll_voltage =
      get_quantity_or(c, "plant.cross_gain_pitch_from_roll_voltage", dim::torque_per_volt, 0.0, g);
  pl.thrust_at_hover = get_quantity_or(c, "plant.thrust_at_hover", dim::force, r.mass * g, g);
  pl.thrust_slope_pitch = get_quantity_or(c, "plant.thrust_slope_pitch", dim::force_per_volt, 0.0, g);
  pl.thrust_slope_roll = get_quantity_or(c, "plant.thrust_slope_roll", dim::force_per_volt, 0.0, g);
  pl.tether_stiffness = get_quantity_or(c, "plant.tether_stiffness", dim::stiffness, 0.0, g);
  pl.torque_noise_sigma = get_quantity_or(c, "plant.torque_noise_sigma", dim::torque, 0.0, g);
  pl.thrust_noise_sigma = get_quantity_or(c, "plant.thrust_noise_sigma", dim::force, 0.0, g);

  m.base_command.amplitude = get_quantity_or(c, "command.amplitude", dim::voltage, m.base_command.amplitude, g);
  m.base_command.bias_rail = get_quantity_or(c, "command.bias_rail", dim::voltage, m.base_command.bias_rail, g);

  m.grid.roll = get_quantity_list(c.at("grid.roll"), dim::voltage, "grid.roll", g);
  m.grid.pitch = get_quantity_list(c.at("grid.pitch"), dim::voltage, "grid.pitch", g);
  if (const auto* ex = c.find("grid.exclude")) {
    if (ex->kind != ConfigValue::Kind::array) throw ManifestError("grid.exclude must be an array of pairs");
    for (const auto& pair : ex->items) {
      auto v = get_quantity_list(pair, dim::voltage, "grid.exclude", g);
      if (v.size() != 2) throw ManifestError("grid.exclude entries must be [roll, pitch] voltage pairs");
      m.grid.exclusions.emplace_back(v[0], v[1]);
    }
  }

  auto& t = m.trim;
  const bool has_ki_roll = c.contains("trim.ki_roll"), has_ki_pitch = c.contains("trim.ki_pitch");
  if (has_ki_roll != has_ki_pitch) throw ManifestError("trim.ki_roll and trim.ki_pitch must be given together");
  if (has_ki_roll)
    t.gains = TrimGains{get_quantity(c, "trim.ki_roll", dim::integral_gain, g),
                        get_quantity(c, "trim.ki_pitch", dim::integral_gain, g)};
  t.duration = get_quantity_or(c, "trim.duration", dim::time, t.duration, g);
  t.angle_tolerance = get_quantity_or(c, "trim.angle_tolerance", dim::angle, t.angle_tolerance, g);
  t.rate_tolerance = get_quantity_or(c, "trim.rate_tolerance", dim::angle / dim::time, t.rate_tolerance, g);
  t.hold_time = get_quantity_or(c, "trim.hold_time", dim::time, t.hold_time, g);

  const bool has_cal_roll = c.contains("calibration.roll"), has_cal_pitch = c.contains("calibration.pitch");
  if (has_cal_roll != has_cal_pitch)
    throw ManifestError("calibration.roll and calibration.pitch must be given together");
  if (has_cal_roll)
    m.calibration = CalibrationOverride{get_quantity(c, "calibration.roll", dim::stiffness, g),
                                        get_quantity(c, "calibration.pitch", dim::stiffness, g)};

  validate(m);
  return m;
}

inline TrialManifest read_manifest(const std::string& path) { return parse_manifest(read_text_file(path)); }

/// Emits a manifest that parses back to the same values. Damping is always
/// written explicitly.
inline std::string format_manifest(const TrialManifest& m) {
  const double g = m.gravity;
  auto q = [g](double v, const char* unit, Dimension d) { return quote(format_quantity(v, unit, d, g)); };
  auto list = [&](const std::vector<double>& vs, const char* unit, Dimension d) {
    std::string out = "[";
    for (std::size_t i = 0; i < vs.size(); ++i) out += (i ? ", " : "") + q(vs[i], unit, d);
    return out + "]";
  };

  std::string s;
  s += "format_version = " + std::to_string(kManifestFormatVersion) + "\n";
  s += "seed = " + std::to_string(m.seed) + "\n";
  s += "gravity = " + q(m.gravity, "m/s^2", dim::acceleration) + "\n";

  s += "\n[protocol]\n";
  s += "duration = " + q(m.protocol.duration, "s", dim::time) + "\n";
  s += "window = " + q(m.protocol.window, "s", dim::time) + "\n";
  s += "sample_rate = " + q(m.protocol.sample_rate, "Hz", dim::frequency) + "\n";
  s += "step = " + q(m.protocol.dt, "s", dim::time) + "\n";
  s += "settle_tolerance = " + q(m.protocol.settle_tolerance, "rad", dim::angle) + "\n";
  s += std::string("tilt_correction = ") + (m.protocol.tilt_correction ? "true" : "false") + "\n";

  for (const auto& [name, axis] : {std::pair{"roll", &m.device.roll}, std::pair{"pitch", &m.device.pitch}}) {
    s += std::string("\n[device.") + name + "]\n";
    s += "flexure_stiffness = " + q(axis->flexure_stiffness, "uNm/rad", dim::stiffness) + "\n";
    s += "counterweight_mass = " + q(axis->counterweight_mass, "mg", dim::mass) + "\n";
    s += "counterweight_arm = " + q(axis->counterweight_arm, "mm", dim::length) + "\n";
    s += "damping = " + q(axis->damping, "Nm*s/rad", dim::damping) + "\n";
    s += "inertia = " + q(axis->inertia, "kg*m^2", dim::inertia) + "\n";
    s += "robot_offset = " + q(axis->robot_offset, "mm", dim::length) + "\n";
  }

  s += "\n[robot]\n";
  s += "mass = " + q(m.robot.mass, "mg", dim::mass) + "\n";
  s += "inertia = " + list({m.robot.inertia.x(), m.robot.inertia.y(), m.robot.inertia.z()}, "kg*m^2", dim::inertia) + "\n";
  s += "wing_moment_arm_roll = " + q(m.robot.wing_moment_arm_roll, "mm", dim::length) + "\n";
  s += "wing_moment_arm_pitch = " + q(m.robot.wing_moment_arm_pitch, "mm", dim::length) + "\n";
  s += "flap_frequency = " + q(m.robot.flap_frequency, "Hz", dim::frequency) + "\n";

  const auto& p = m.plant;
  s += "\n[plant]\n";
  s += "roll_gain = " + q(p.roll_gain, "uNm/V", dim::torque_per_volt) + "\n";
  s += "pitch_gain = " + q(p.pitch_gain, "uNm/V", dim::torque_per_volt) + "\n";
  s += "roll_bias = " + q(p.roll_bias, "uNm", dim::torque) + "\n";
  s += "pitch_bias = " + q(p.pitch_bias, "uNm", dim::torque) + "\n";
  s += "cross_gain_roll_from_pitch_voltage = " + q(p.cross_gain_roll_from_pitch_voltage, "uNm/V", dim::torque_per_volt) + "\n";
  s += "cross_gain_pitch_from_roll_voltage = " + q(p.cross_gain_pitch_from_roll_voltage, "uNm/V", dim::torque_per_volt) + "\n";
  s += "thrust_at_hover = " + q(p.thrust_at_hover, "mg", dim::force) + "\n";
  s += "thrust_slope_pitch = " + q(p.thrust_slope_pitch, "mg/V", dim::force_per_volt) + "\n";
  s += "thrust_slope_roll = " + q(p.thrust_slope_roll, "mg/V", dim::force_per_volt) + "\n";
  s += "tether_stiffness = " + q(p.tether_stiffness, "uNm/rad", dim::stiffness) + "\n";
  s += "torque_noise_sigma = " + q(p.torque_noise_sigma, "uNm", dim::torque) + "\n";
  s += "thrust_noise_sigma = " + q(p.thrust_noise_sigma, "mg", dim::force) + "\n";

  s += "\n[command]\n";
  s += "amplitude = " + q(m.base_command.amplitude, "V", dim::voltage) + "\n";
  s += "bias_rail = " + q(m.base_command.bias_rail, "V", dim::voltage) + "\n";

  s += "\n[grid]\n";
  s += "roll = " + list(m.grid.roll, "V", dim::voltage) + "\n";
  s += "pitch = " + list(m.grid.pitch, "V", dim::voltage) + "\n";
  s += "exclude = [";
  for (std::size_t i = 0; i < m.grid.exclusions.size(); ++i)
    s += (i ? ", " : "") + list({m.grid.exclusions[i].first, m.grid.exclusions[i].second}, "V", dim::voltage);
  s += "]\n";

  s += "\n[trim]\n";
  if (m.trim.gains) {
    s += "ki_roll = " + q(m.trim.gains->ki_roll, "uNm/rad/s", dim::integral_gain) + "\n";
    s += "ki_pitch = " + q(m.trim.gains->ki_pitch, "uNm/rad/s", dim::integral_gain) + "\n";
  }
  s += "duration = " + q(m.trim.duration, "s", dim::time) + "\n";
  s += "angle_tolerance = " + q(m.trim.angle_tolerance, "rad", dim::angle) + "\n";
  s += "rate_tolerance = " + q(m.trim.rate_tolerance, "rad/s", dim::angle / dim::time) + "\n";
  s += "hold_time = " + q(m.trim.hold_time, "s", dim::time) + "\n";

  if (m.calibration) {
    s += "\n[calibration]\n";
    s += "roll = " + q(m.calibration->roll, "uNm/rad", dim::stiffness) + "\n";
    s += "pitch = " + q(m.calibration->pitch, "uNm/rad", dim::stiffness) + "\n";
  }
  return s;
}

inline void write_manifest(const std::string& path, const TrialManifest& m) {
  write_text_file(path, format_manifest(m));
}

}  // namespace flexgimbal::io
