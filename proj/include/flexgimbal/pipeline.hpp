#pragma once

// File-mediated campaign stages: plan → simulate → map → plot tables.
// Each stage reads and writes plain files so recorded data can replace any
// simulated stage.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "flexgimbal/dynamics.hpp"
#include "flexgimbal/error.hpp"
#include "flexgimbal/estimation.hpp"
#include "flexgimbal/io/csv.hpp"
#include "flexgimbal/io/manifest.hpp"
#include "flexgimbal/io/report.hpp"
#include "flexgimbal/io/trace.hpp"
#include "flexgimbal/model.hpp"
#include "flexgimbal/random.hpp"

namespace flexgimbal {

struct PlannedTrial {
  std::size_t index = 0;  // position in the generated grid, also the seed index
  ActuationCommand command;
};

struct TrialPlan {
  std::vector<PlannedTrial> runnable;
  std::vector<PlannedTrial> clipped;  // drive signal would leave [0, V_bias]
};

inline TrialPlan plan_trials(const io::TrialManifest& manifest) {
  TrialPlan plan;
  const auto commands = io::generate_trial_commands(manifest);
  for (std::size_t i = 0; i < commands.size(); ++i) {
    PlannedTrial t{i, commands[i]};
    (wing_signal_envelope(commands[i]).clipped ? plan.clipped : plan.runnable).push_back(t);
  }
  return plan;
}

struct SimulatedTrial {
  std::size_t index = 0;
  ActuationCommand command;
  AngleTrace trace;
};

/// Tilt correction off.
inline io::TrialManifest strict_mode(io::TrialManifest m) {
  m.protocol.tilt_correction = false;
  return m;
}

/// Runs every runnable trial. Trial i is seeded with derive_seed(seed, i), so
/// results do not depend on `jobs`.
inline std::vector<SimulatedTrial> simulate_campaign(const io::TrialManifest& manifest, const TrialPlan& plan,
                                                     unsigned jobs = 1) {
  const SimulationOptions options = manifest.simulation_options();
  std::vector<SimulatedTrial> out(plan.runnable.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < out.size();) {
      try {
        const auto& p = plan.runnable[k];
        out[k] = {p.index, p.command,
                  simulate_trial(manifest.plant, manifest.device, p.command, options,
                                 derive_seed(manifest.seed, p.index))};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = out.size();
      }
    }
  };

  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, out.size()))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------
// Simulation directory: trials.csv index plus traces/trial_NNN.csv

inline constexpr const char* kTrialIndexFile = "trials.csv";
inline constexpr const char* kTraceDir = "traces";

inline std::string trace_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%03zu.csv", index);
  return std::string(kTraceDir) + "/" + buf;
}

inline void write_simulation(const std::filesystem::path& dir, const std::vector<SimulatedTrial>& trials) {
  std::filesystem::create_directories(dir / kTraceDir);
  std::string index = "# format_version=1\nindex,amplitude_V,roll_differential_V,pitch_offset_V,bias_rail_V,trace\n";
  for (const auto& t : trials) {
    const std::string name = trace_file_name(t.index);
    io::write_trace((dir / name).string(), t.trace);
    index += std::to_string(t.index) + ',' + format_number(t.command.amplitude) + ',' +
             format_number(t.command.roll_differential) + ',' + format_number(t.command.pitch_offset) + ',' +
             format_number(t.command.bias_rail) + ',' + name + '\n';
  }
  io::write_text_file((dir / kTrialIndexFile).string(), index);
}

struct RecordedTrial {
  std::size_t index = 0;
  ActuationCommand command;
  std::string trace_name;
  AngleTrace trace;
};

inline std::vector<RecordedTrial> read_simulation(const std::filesystem::path& dir) {
  const auto table = io::parse_csv(io::read_text_file((dir / kTrialIndexFile).string()));
  const std::size_t c_idx = io::column_index(table, "index"), c_amp = io::column_index(table, "amplitude_V"),
                    c_dv = io::column_index(table, "roll_differential_V"),
                    c_off = io::column_index(table, "pitch_offset_V"),
                    c_rail = io::column_index(table, "bias_rail_V"), c_trace = io::column_index(table, "trace");
  std::vector<RecordedTrial> out;
  for (const auto& row : table.rows) {
    RecordedTrial t;
    const double idx = io::parse_field(row, c_idx);
    if (!(idx >= 0.0) || idx != static_cast<double>(static_cast<std::size_t>(idx)))
      throw ParseError("trial index must be a non-negative integer", row.line);
    t.index = static_cast<std::size_t>(idx);
    t.command = {io::parse_field(row, c_amp), io::parse_field(row, c_dv), io::parse_field(row, c_off),
                 io::parse_field(row, c_rail)};
    t.trace_name = row.fields.at(c_trace);
    try {
      t.trace = io::read_trace((dir / t.trace_name).string());
    } catch (const ParseError& e) {
      throw ParseError(t.trace_name + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(t.trace_name + ": " + e.what());
    }
    out.push_back(std::move(t));
  }
  if (out.empty()) throw InsufficientData("simulation directory lists no trials");
  return out;
}

// ---------------------------------------------------------------------------
// Mapping report assembly

/// Sensitivity the simulated device would show under calibration: the
/// gimbal's k_s plus the tether spring.
inline io::AxisSensitivity model_sensitivity(const io::TrialManifest& m) {
  return {device_sensitivity(m.device.roll, m.gravity, m.device.robot_mass) + m.plant.tether_stiffness,
          device_sensitivity(m.device.pitch, m.gravity, m.device.robot_mass) + m.plant.tether_stiffness};
}

inline io::MappingReport build_mapping_report(const std::vector<RecordedTrial>& trials,
                                              const io::AxisSensitivity& ks,
                                              const SteadyStateOptions& options) {
  if (!(ks.roll > 0.0) || !(ks.pitch > 0.0)) throw InvalidParameter("sensitivities must be positive");
  io::MappingReport report;
  report.sensitivity = ks;
  bool all_thrust = true;
  for (const auto& t : trials) {
    io::TrialRecord r;
    r.index = t.index;
    r.command = t.command;
    r.trace = t.trace_name;
    r.steady = steady_state_mean(t.trace, options);
    r.torque = {torque_from_deflection(r.steady.theta_x, ks.roll),
                torque_from_deflection(r.steady.theta_y, ks.pitch)};
    all_thrust = all_thrust && t.trace.has_thrust;
    report.trials.push_back(std::move(r));
  }

  const auto usable = io::mapping_trials(report);
  if (usable.size() < 2) throw InsufficientData("fewer than two settled trials");
  report.fits = fit_voltage_torque_mapping(usable);
  report.roll_coupling = coupling_error(usable, report.fits.roll, Axis::roll);
  report.pitch_coupling = coupling_error(usable, report.fits.pitch, Axis::pitch);
  if (all_thrust) report.thrust = thrust_analysis(usable);
  return report;
}

inline SteadyStateOptions steady_options(const io::TrialManifest& m) {
  return {m.protocol.window, m.protocol.duration, m.protocol.settle_tolerance};
}

// ---------------------------------------------------------------------------
// Plot tables

/// torque_roll.csv / torque_pitch.csv: axis voltage against measured and
/// fitted torque, with the other axis voltage as colour key. thrust.csv when
/// the report has thrust.
inline std::vector<std::string> write_plot_tables(const std::filesystem::path& dir, const io::MappingReport& r) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (const auto* c : {&r.roll_coupling, &r.pitch_coupling}) {
    std::string s = "roll_voltage_V,pitch_voltage_V,measured_uNm,fitted_uNm,residual_uNm\n";
    for (const auto& p : c->residual_grid)
      s += format_number(p.roll_voltage) + ',' + format_number(p.pitch_voltage) + ',' +
           format_number(p.measured * 1e6) + ',' + format_number(p.fitted * 1e6) + ',' +
           format_number(p.residual * 1e6) + '\n';
    const std::string name = std::string("torque_") + to_string(c->axis) + ".csv";
    io::write_text_file((dir / name).string(), s);
    written.push_back(name);
  }
  if (r.thrust) {
    const double mg = io::milligram_force();
    std::string s = "roll_voltage_V,pitch_voltage_V,thrust_mg\n";
    for (const auto& t : r.trials)
      if (t.steady.settled)
        s += format_number(t.command.roll_differential) + ',' + format_number(t.command.pitch_offset) + ',' +
             format_number(t.steady.thrust / mg) + '\n';
    io::write_text_file((dir / "thrust.csv").string(), s);
    written.push_back("thrust.csv");
  }
  return written;
}

}  // namespace flexgimbal
