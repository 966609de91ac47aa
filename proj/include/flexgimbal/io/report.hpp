#pragma once

// JSON reports (mapping, calibration, trim, validation) and the small CSV
// inputs for calibration points and free-flight trims. Report values are SI;
// every key names its unit.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flexgimbal/error.hpp"
#include "flexgimbal/estimation.hpp"
#include "flexgimbal/io/csv.hpp"
#include "flexgimbal/model.hpp"
#include "flexgimbal/trim.hpp"
#include "flexgimbal/units.hpp"

namespace flexgimbal::io {

using nlohmann::json;

inline constexpr int kReportFormatVersion = 1;

struct TrialRecord {
  std::size_t index = 0;
  ActuationCommand command;
  std::string trace;  // trace file, relative to the simulation directory
  SteadyState steady;
  TorqueVector torque;  // k_s · mean angle, N·m
};

struct AxisSensitivity {
  double roll = 0.0;   // N·m/rad
  double pitch = 0.0;  // N·m/rad
};

struct MappingReport {
  int format_version = kReportFormatVersion;
  AxisSensitivity sensitivity;
  std::vector<TrialRecord> trials;
  MappingFits fits;
  CouplingReport roll_coupling;
  CouplingReport pitch_coupling;
  std::optional<ThrustReport> thrust;
};

struct CalibrationReport {
  int format_version = kReportFormatVersion;
  std::optional<SensitivityFit> roll;
  std::optional<SensitivityFit> pitch;

  AxisSensitivity sensitivity() const {
    if (!roll || !pitch) throw ManifestError("calibration file must contain both roll and pitch");
    return {roll->sensitivity, pitch->sensitivity};
  }
};

namespace detail {

// NaN has no JSON spelling; it is written as null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double read_number(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("report is missing '") + key + "'");
  const json& v = j.at(key);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw FormatError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

inline void check_version(const json& j) {
  if (!j.is_object()) throw FormatError("report must be a JSON object");
  if (!j.contains("format_version") || j.at("format_version") != kReportFormatVersion)
    throw FormatError("unsupported or missing report format_version");
}

inline json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

template <typename F>
auto guard(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

inline json to_json(const ActuationCommand& c) {
  return {{"amplitude_V", c.amplitude},
          {"roll_differential_V", c.roll_differential},
          {"pitch_offset_V", c.pitch_offset},
          {"bias_rail_V", c.bias_rail}};
}

inline ActuationCommand command_from_json(const json& j) {
  return {read_number(j, "amplitude_V"), read_number(j, "roll_differential_V"),
          read_number(j, "pitch_offset_V"), read_number(j, "bias_rail_V")};
}

inline json to_json(const LineFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"n_points", f.n_points}};
}

inline LineFit line_from_json(const json& j) {
  return {read_number(j, "slope"), read_number(j, "intercept"), read_number(j, "r_squared"),
          j.at("n_points").get<std::size_t>()};
}

inline json to_json(const SensitivityFit& f) {
  return {{"sensitivity_Nm_per_rad", f.sensitivity},
          {"intercept_Nm", f.intercept},
          {"r_squared", f.r_squared},
          {"n_points", f.n_points}};
}

inline SensitivityFit sensitivity_from_json(const json& j) {
  return {read_number(j, "sensitivity_Nm_per_rad"), read_number(j, "intercept_Nm"),
          read_number(j, "r_squared"), j.at("n_points").get<std::size_t>()};
}

inline json to_json(const CouplingReport& r) {
  json grid = json::array();
  for (const auto& p : r.residual_grid)
    grid.push_back({{"roll_voltage_V", p.roll_voltage},
                    {"pitch_voltage_V", p.pitch_voltage},
                    {"measured_Nm", p.measured},
                    {"fitted_Nm", p.fitted},
                    {"residual_Nm", p.residual}});
  return {{"axis", to_string(r.axis)},
          {"max_abs_residual_Nm", r.max_abs_residual},
          {"actuated_range_Nm", r.actuated_range},
          {"percent_of_range", r.percent_of_range},
          {"residual_grid", grid}};
}

inline CouplingReport coupling_from_json(const json& j) {
  CouplingReport r;
  const auto axis = j.at("axis").get<std::string>();
  if (axis != "roll" && axis != "pitch") throw FormatError("unknown axis '" + axis + "'");
  r.axis = axis == "roll" ? Axis::roll : Axis::pitch;
  r.max_abs_residual = read_number(j, "max_abs_residual_Nm");
  r.actuated_range = read_number(j, "actuated_range_Nm");
  r.percent_of_range = read_number(j, "percent_of_range");
  for (const auto& p : j.at("residual_grid"))
    r.residual_grid.push_back({read_number(p, "roll_voltage_V"), read_number(p, "pitch_voltage_V"),
                               read_number(p, "measured_Nm"), read_number(p, "fitted_Nm"),
                               read_number(p, "residual_Nm")});
  return r;
}

inline json to_json(const ThrustReport& r) {
  return {{"mean_thrust_N", r.mean_thrust},
          {"max_percent_deviation", r.max_percent_deviation},
          {"slope_pitch_N_per_V", r.slope_pitch},
          {"slope_roll_N_per_V", r.slope_roll},
          {"n_trials", r.n_trials}};
}

inline ThrustReport thrust_from_json(const json& j) {
  return {read_number(j, "mean_thrust_N"), read_number(j, "max_percent_deviation"),
          read_number(j, "slope_pitch_N_per_V"), read_number(j, "slope_roll_N_per_V"),
          j.at("n_trials").get<std::size_t>()};
}

inline json to_json(const TrialRecord& t) {
  return {{"index", t.index},
          {"command", to_json(t.command)},
          {"trace", t.trace},
          {"steady",
           {{"theta_x_rad", t.steady.theta_x},
            {"theta_y_rad", t.steady.theta_y},
            {"thrust_N", number_or_null(t.steady.thrust)},
            {"peak_to_peak_x_rad", t.steady.peak_to_peak_x},
            {"peak_to_peak_y_rad", t.steady.peak_to_peak_y},
            {"settled", t.steady.settled}}},
          {"torque_roll_Nm", t.torque.roll},
          {"torque_pitch_Nm", t.torque.pitch}};
}

inline TrialRecord trial_from_json(const json& j) {
  TrialRecord t;
  t.index = j.at("index").get<std::size_t>();
  t.command = command_from_json(j.at("command"));
  t.trace = j.at("trace").get<std::string>();
  const json& s = j.at("steady");
  t.steady.theta_x = read_number(s, "theta_x_rad");
  t.steady.theta_y = read_number(s, "theta_y_rad");
  t.steady.thrust = read_number(s, "thrust_N");
  t.steady.peak_to_peak_x = read_number(s, "peak_to_peak_x_rad");
  t.steady.peak_to_peak_y = read_number(s, "peak_to_peak_y_rad");
  t.steady.settled = s.at("settled").get<bool>();
  t.torque = {read_number(j, "torque_roll_Nm"), read_number(j, "torque_pitch_Nm")};
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Mapping report

inline std::string format_mapping_report(const MappingReport& r) {
  using detail::to_json;
  json j;
  j["format_version"] = r.format_version;
  j["sensitivity_Nm_per_rad"] = {{"roll", r.sensitivity.roll}, {"pitch", r.sensitivity.pitch}};
  j["trials"] = json::array();
  for (const auto& t : r.trials) j["trials"].push_back(to_json(t));
  j["fits"] = {{"roll", to_json(r.fits.roll)}, {"pitch", to_json(r.fits.pitch)}};
  j["fits"]["units"] = {{"slope", "N*m/V"}, {"intercept", "N*m"}};
  j["coupling"] = {{"roll", to_json(r.roll_coupling)}, {"pitch", to_json(r.pitch_coupling)}};
  j["thrust"] = r.thrust ? to_json(*r.thrust) : json(nullptr);
  return j.dump(2) + "\n";
}

inline MappingReport parse_mapping_report(std::string_view text) {
  const json j = detail::parse_json(text);
  detail::check_version(j);
  return detail::guard([&] {
    MappingReport r;
    const json& ks = j.at("sensitivity_Nm_per_rad");
    r.sensitivity = {detail::read_number(ks, "roll"), detail::read_number(ks, "pitch")};
    for (const auto& t : j.at("trials")) r.trials.push_back(detail::trial_from_json(t));
    r.fits.roll = detail::line_from_json(j.at("fits").at("roll"));
    r.fits.pitch = detail::line_from_json(j.at("fits").at("pitch"));
    r.roll_coupling = detail::coupling_from_json(j.at("coupling").at("roll"));
    r.pitch_coupling = detail::coupling_from_json(j.at("coupling").at("pitch"));
    if (j.contains("thrust") && !j.at("thrust").is_null()) r.thrust = detail::thrust_from_json(j.at("thrust"));
    return r;
  });
}

inline void write_mapping_report(const std::string& path, const MappingReport& r) {
  write_text_file(path, format_mapping_report(r));
}

inline MappingReport read_mapping_report(const std::string& path) {
  return parse_mapping_report(read_text_file(path));
}

/// Trials usable for fitting: settled ones only.
inline std::vector<MappingTrial> mapping_trials(const MappingReport& r) {
  std::vector<MappingTrial> out;
  for (const auto& t : r.trials)
    if (t.steady.settled) out.push_back({t.command, t.torque, t.steady.thrust});
  return out;
}

// ---------------------------------------------------------------------------
// Calibration

inline std::string format_calibration(const CalibrationReport& c) {
  json j;
  j["format_version"] = c.format_version;
  if (c.roll) j["roll"] = detail::to_json(*c.roll);
  if (c.pitch) j["pitch"] = detail::to_json(*c.pitch);
  return j.dump(2) + "\n";
}

inline CalibrationReport parse_calibration(std::string_view text) {
  const json j = detail::parse_json(text);
  detail::check_version(j);
  return detail::guard([&] {
    CalibrationReport c;
    if (j.contains("roll")) c.roll = detail::sensitivity_from_json(j.at("roll"));
    if (j.contains("pitch")) c.pitch = detail::sensitivity_from_json(j.at("pitch"));
    return c;
  });
}

inline void write_calibration(const std::string& path, const CalibrationReport& c) {
  write_text_file(path, format_calibration(c));
}

inline CalibrationReport read_calibration(const std::string& path) {
  return parse_calibration(read_text_file(path));
}

struct AxisCalibrationPoint {
  Axis axis = Axis::roll;
  CalibrationPoint point;
};

inline Axis parse_axis(std::string_view s, std::size_t line) {
  if (s == "roll") return Axis::roll;
  if (s == "pitch") return Axis::pitch;
  throw ParseError("axis must be 'roll' or 'pitch', got '" + std::string(s) + "'", line);
}

/// Calibration points, either as applied torques
///   axis,torque_uNm,angle_rad
/// or as hung weights
///   axis,mass_mg,lever_mm,angle_rad
/// where the torque is weight_torque(mass, lever).
inline std::vector<AxisCalibrationPoint> parse_calibration_points(std::string_view text,
                                                                  double g = kStandardGravity) {
  const CsvTable table = parse_csv(text);
  const bool torque_form = has_column(table, "torque_uNm");
  const bool weight_form = has_column(table, "mass_mg") && has_column(table, "lever_mm");
  if (!has_column(table, "axis") || !has_column(table, "angle_rad") || torque_form == weight_form)
    throw FormatError(
        "calibration points need columns axis,torque_uNm,angle_rad or axis,mass_mg,lever_mm,angle_rad");

  const std::size_t c_axis = column_index(table, "axis"), c_angle = column_index(table, "angle_rad");
  std::vector<AxisCalibrationPoint> out;
  for (const auto& row : table.rows) {
    AxisCalibrationPoint p;
    p.axis = parse_axis(row.fields.at(c_axis), row.line);
    p.point.measured_angle = parse_field(row, c_angle);
    if (torque_form) {
      p.point.applied_torque = parse_field(row, column_index(table, "torque_uNm")) * 1e-6;
    } else {
      const double mass = parse_field(row, column_index(table, "mass_mg")) * 1e-6;
      const double lever = parse_field(row, column_index(table, "lever_mm")) * 1e-3;
      p.point.applied_torque = weight_torque(mass, lever, g);
    }
    out.push_back(p);
  }
  return out;
}

/// Fits each axis that has points. At least one axis must be present.
inline CalibrationReport calibrate_points(const std::vector<AxisCalibrationPoint>& points) {
  std::vector<CalibrationPoint> roll, pitch;
  for (const auto& p : points) (p.axis == Axis::roll ? roll : pitch).push_back(p.point);
  if (roll.empty() && pitch.empty()) throw RankDeficiency("no calibration points");
  CalibrationReport c;
  if (!roll.empty()) c.roll = fit_sensitivity(roll);
  if (!pitch.empty()) c.pitch = fit_sensitivity(pitch);
  return c;
}

// ---------------------------------------------------------------------------
// Free-flight points: axis,trim_V,torque_uNm

struct FreeFlightSet {
  std::vector<FreeFlightPoint> roll;
  std::vector<FreeFlightPoint> pitch;
};

inline FreeFlightSet parse_freeflight_points(std::string_view text) {
  const CsvTable table = parse_csv(text);
  const std::size_t c_axis = column_index(table, "axis");
  const std::size_t c_v = column_index(table, "trim_V");
  const std::size_t c_tau = column_index(table, "torque_uNm");
  FreeFlightSet out;
  for (const auto& row : table.rows) {
    const Axis axis = parse_axis(row.fields.at(c_axis), row.line);
    FreeFlightPoint p{parse_field(row, c_v), parse_field(row, c_tau) * 1e-6};
    (axis == Axis::roll ? out.roll : out.pitch).push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trim and validation summaries (write-only)

inline std::string format_trim_result(const TrimResult& r, const TrimGains& gains) {
  json j;
  j["format_version"] = kReportFormatVersion;
  j["gains_Nm_per_rad_s"] = {{"roll", gains.ki_roll}, {"pitch", gains.ki_pitch}};
  j["bias_torque_Nm"] = {{"roll", r.bias_estimate.roll}, {"pitch", r.bias_estimate.pitch}};
  j["trim_voltage_V"] = {{"roll", r.trim_voltage.roll}, {"pitch", r.trim_voltage.pitch}};
  j["convergence_time_s"] = {{"roll", r.roll_convergence_time}, {"pitch", r.pitch_convergence_time}};
  return j.dump(2) + "\n";
}

inline std::string format_bias_estimate(const TorqueVector& bias, const TorqueVector& voltage,
                                        const TrimGains& gains) {
  json j;
  j["format_version"] = kReportFormatVersion;
  j["gains_Nm_per_rad_s"] = {{"roll", gains.ki_roll}, {"pitch", gains.ki_pitch}};
  j["bias_torque_Nm"] = {{"roll", bias.roll}, {"pitch", bias.pitch}};
  j["trim_voltage_V"] = {{"roll", voltage.roll}, {"pitch", voltage.pitch}};
  return j.dump(2) + "\n";
}

inline json validation_to_json(const ValidationResult& v) {
  return {{"percent_error", v.percent_error},
          {"slope_error_percent", v.slope_error_percent},
          {"freeflight", detail::to_json(v.freeflight)},
          {"voltage_min_V", v.voltage_min},
          {"voltage_max_V", v.voltage_max}};
}

}  // namespace flexgimbal::io
