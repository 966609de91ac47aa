#pragma once

// Trace CSV:
//
//   # format_version=1 sample_rate_hz=100
//   time_s,theta_x_rad,theta_y_rad,thrust_mg
//   0,0,0,180
//
// The thrust column is optional. Thrust is stored in mg (mass equivalent) and
// held internally in N.

#include <cmath>
#include <string>
#include <string_view>

#include "flexgimbal/dynamics.hpp"
#include "flexgimbal/error.hpp"
#include "flexgimbal/io/csv.hpp"
#include "flexgimbal/units.hpp"

namespace flexgimbal::io {

inline constexpr int kTraceFormatVersion = 1;
inline constexpr std::string_view kTraceHeader = "time_s,theta_x_rad,theta_y_rad";
inline constexpr std::string_view kTraceThrustColumn = "thrust_mg";

inline double milligram_force() { return unit_scale("mg", dim::force); }

inline std::string format_trace(const AngleTrace& trace) {
  std::string out = "# format_version=" + std::to_string(kTraceFormatVersion) +
                    " sample_rate_hz=" + format_number(trace.sample_rate) + "\n";
  out += kTraceHeader;
  if (trace.has_thrust) out += "," + std::string(kTraceThrustColumn);
  out += '\n';
  const double mg = milligram_force();
  for (const auto& s : trace.samples) {
    out += format_number(s.t) + ',' + format_number(s.theta_x) + ',' + format_number(s.theta_y);
    if (trace.has_thrust) out += ',' + format_number(s.thrust / mg);
    out += '\n';
  }
  return out;
}

inline AngleTrace parse_trace(std::string_view text) {
  CsvTable table = parse_csv(text);
  if (auto v = comment_value(table, "format_version"); !v.empty() && v != std::to_string(kTraceFormatVersion))
    throw FormatError("unsupported trace format_version " + v);

  const std::size_t ncols = table.header.size();
  const bool expected_base = ncols >= 3 && table.header[0] == "time_s" &&
                             table.header[1] == "theta_x_rad" && table.header[2] == "theta_y_rad";
  if (!expected_base || ncols > 4 || (ncols == 4 && table.header[3] != kTraceThrustColumn))
    throw FormatError("trace header must be '" + std::string(kTraceHeader) + "[," +
                      std::string(kTraceThrustColumn) + "]'");
  if (table.rows.empty()) throw FormatError("trace is empty");

  AngleTrace trace;
  trace.has_thrust = ncols == 4;
  const double mg = milligram_force();
  for (const auto& row : table.rows) {
    TraceSample s;
    s.t = parse_field(row, 0);
    s.theta_x = parse_field(row, 1);
    s.theta_y = parse_field(row, 2);
    if (trace.has_thrust) s.thrust = parse_field(row, 3) * mg;
    if (!trace.samples.empty() && !(s.t > trace.samples.back().t))
      throw FormatError("line " + std::to_string(row.line) + ": time is not strictly increasing");
    trace.samples.push_back(s);
  }

  if (auto rate = comment_value(table, "sample_rate_hz"); !rate.empty()) {
    trace.sample_rate = parse_number(rate);
  } else if (trace.samples.size() >= 2) {
    trace.sample_rate = 1.0 / (trace.samples[1].t - trace.samples[0].t);
  }
  validate(trace);
  return trace;
}

inline void write_trace(const std::string& path, const AngleTrace& trace) {
  write_text_file(path, format_trace(trace));
}

inline AngleTrace read_trace(const std::string& path) {
  try {
    return parse_trace(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace flexgimbal::io
