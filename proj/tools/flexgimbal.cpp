// flexgimbal: campaign driver for the flexured gimbal torque sensor.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include "flexgimbal/error.hpp"
#include "flexgimbal/estimation.hpp"
#include "flexgimbal/io/csv.hpp"
#include "flexgimbal/io/manifest.hpp"
#include "flexgimbal/io/report.hpp"
#include "flexgimbal/io/trace.hpp"
#include "flexgimbal/pipeline.hpp"
#include "flexgimbal/trim.hpp"

namespace fs = std::filesystem;
using namespace flexgimbal;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kManifest = 3,
  kParse = 4,
  kConvergence = 5,
  kRank = 6,
  kInvalid = 7,
};

struct Options {
  std::string manifest;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string calibration;
  std::string freeflight;
  std::string points;
  std::string report;
  std::string traces;
  std::string trace;
  double tether_margin_uNm = 0.0;
  bool strict = false;
  bool verbose = false;
  unsigned jobs = 0;
};

void note(const Options& o, const std::string& msg) {
  if (o.verbose) std::cerr << msg << '\n';
}

io::TrialManifest load_manifest(const Options& o) {
  if (o.manifest.empty()) throw ManifestError("--manifest is required");
  io::TrialManifest m = io::read_manifest(o.manifest);
  if (o.seed) m.seed = *o.seed;
  if (o.strict) m = strict_mode(m);
  return m;
}

unsigned job_count(const Options& o) {
  if (o.jobs > 0) return o.jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

fs::path out_dir(const Options& o) {
  fs::path dir = o.out;
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const io::json& j) { io::write_text_file(path.string(), j.dump(2) + "\n"); }

std::string show(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string uNm(double v) { return show(v * 1e6) + " uNm"; }

// --- stages -----------------------------------------------------------------

fs::path do_simulate(const Options& o, const io::TrialManifest& m, const fs::path& dir) {
  const TrialPlan plan = plan_trials(m);
  for (const auto& c : plan.clipped)
    std::cerr << "warning: skipping clipped command dV=" << show(c.command.roll_differential)
              << " V, Voff=" << show(c.command.pitch_offset) << " V\n";
  note(o, "simulating " + std::to_string(plan.runnable.size()) + " trials");
  const auto trials = simulate_campaign(m, plan, job_count(o));
  write_simulation(dir, trials);
  std::cout << "wrote " << trials.size() << " traces to " << (dir / kTraceDir).string() << '\n';
  return dir;
}

io::AxisSensitivity resolve_sensitivity(const Options& o, const std::optional<io::TrialManifest>& m,
                                        bool allow_model) {
  if (!o.calibration.empty()) return io::read_calibration(o.calibration).sensitivity();
  if (m && m->calibration) return {m->calibration->roll, m->calibration->pitch};
  if (allow_model && m) return model_sensitivity(*m);
  throw ManifestError("no calibration: pass --calibration or add a [calibration] section to the manifest");
}

io::MappingReport do_map(const Options& o, const fs::path& traces, const std::optional<io::TrialManifest>& m,
                         bool allow_model) {
  const io::AxisSensitivity ks = resolve_sensitivity(o, m, allow_model);
  const SteadyStateOptions so = m ? steady_options(*m) : SteadyStateOptions{};
  const auto recorded = read_simulation(traces);
  io::MappingReport report = build_mapping_report(recorded, ks, so);
  std::size_t unsettled = 0;
  for (const auto& t : report.trials) unsettled += t.steady.settled ? 0 : 1;
  if (unsettled) std::cerr << "warning: " << unsettled << " trials did not settle and were left out of the fits\n";
  return report;
}

void print_mapping(const io::MappingReport& r) {
  std::cout << "roll:  " << show(r.fits.roll.slope * 1e6) << " uNm/V, R^2 "
            << show(r.fits.roll.r_squared) << '\n'
            << "pitch: " << show(r.fits.pitch.slope * 1e6) << " uNm/V, R^2 "
            << show(r.fits.pitch.r_squared) << '\n';
}

void print_coupling(const CouplingReport& c) {
  std::cout << to_string(c.axis) << " coupling: max residual " << uNm(c.max_abs_residual) << " over "
            << uNm(c.actuated_range) << " = " << show(c.percent_of_range) << " %\n";
}

void print_thrust(const ThrustReport& t) {
  const double mg = io::milligram_force();
  std::cout << "thrust: mean " << show(t.mean_thrust / mg) << " mg, max deviation "
            << show(t.max_percent_deviation) << " %, slopes " << show(t.slope_pitch / mg)
            << " mg/V (pitch) " << show(t.slope_roll / mg) << " mg/V (roll)\n";
}

io::MappingReport load_report(const Options& o) {
  if (o.report.empty()) throw ManifestError("--report is required");
  return io::read_mapping_report(o.report);
}

// --- subcommands ------------------------------------------------------------

int cmd_simulate(const Options& o) {
  do_simulate(o, load_manifest(o), out_dir(o));
  return kOk;
}

int cmd_calibrate(const Options& o) {
  if (o.points.empty()) throw ManifestError("--points is required");
  const double g = o.manifest.empty() ? kStandardGravity : load_manifest(o).gravity;
  const auto points = io::parse_calibration_points(io::read_text_file(o.points), g);
  const io::CalibrationReport cal = io::calibrate_points(points);
  const fs::path path = out_dir(o) / "calibration.json";
  io::write_calibration(path.string(), cal);
  for (const auto& [name, fit] : {std::pair{"roll", cal.roll}, std::pair{"pitch", cal.pitch}})
    if (fit)
      std::cout << name << ": k_s = " << show(fit->sensitivity * 1e6) << " uNm/rad, R^2 "
                << show(fit->r_squared) << '\n';
  std::cout << "wrote " << path.string() << '\n';
  return kOk;
}

int cmd_trim(const Options& o) {
  const io::TrialManifest m = load_manifest(o);
  const TrimGains gains = m.trim_gains();
  const fs::path path = out_dir(o) / "trim.json";
  TorqueVector bias, volts;
  if (!o.trace.empty()) {
    bias = bias_from_closed_loop_trace(io::read_trace(o.trace), gains);
    volts = {torque_to_voltage(bias.roll, m.plant.roll_gain), torque_to_voltage(bias.pitch, m.plant.pitch_gain)};
    io::write_text_file(path.string(), io::format_bias_estimate(bias, volts, gains));
  } else {
    const TrimResult r = run_trim_controller(m.plant, m.device, gains, m.trim_options(), m.seed);
    bias = r.bias_estimate;
    volts = r.trim_voltage;
    io::write_text_file(path.string(), io::format_trim_result(r, gains));
    note(o, "converged: roll " + show(r.roll_convergence_time) + " s, pitch " +
                show(r.pitch_convergence_time) + " s");
  }
  std::cout << "bias torque: roll " << uNm(bias.roll) << ", pitch " << uNm(bias.pitch) << '\n'
            << "trim voltage: roll " << show(volts.roll) << " V, pitch " << show(volts.pitch)
            << " V\n";
  return kOk;
}

int cmd_map(const Options& o) {
  if (o.traces.empty()) throw ManifestError("--traces is required");
  std::optional<io::TrialManifest> m;
  if (!o.manifest.empty()) m = load_manifest(o);
  const io::MappingReport r = do_map(o, o.traces, m, false);
  const fs::path path = out_dir(o) / "mapping_report.json";
  io::write_mapping_report(path.string(), r);
  print_mapping(r);
  std::cout << "wrote " << path.string() << '\n';
  return kOk;
}

int cmd_coupling(const Options& o) {
  const io::MappingReport r = load_report(o);
  const auto trials = io::mapping_trials(r);
  const auto roll = coupling_error(trials, r.fits.roll, Axis::roll);
  const auto pitch = coupling_error(trials, r.fits.pitch, Axis::pitch);
  write_json(out_dir(o) / "coupling.json", {{"format_version", io::kReportFormatVersion},
                                             {"roll", io::detail::to_json(roll)},
                                             {"pitch", io::detail::to_json(pitch)}});
  print_coupling(roll);
  print_coupling(pitch);
  return kOk;
}

int cmd_thrust(const Options& o) {
  const io::MappingReport r = load_report(o);
  const ThrustReport t = thrust_analysis(io::mapping_trials(r));
  write_json(out_dir(o) / "thrust.json",
             {{"format_version", io::kReportFormatVersion}, {"thrust", io::detail::to_json(t)}});
  print_thrust(t);
  return kOk;
}

int cmd_validate(const Options& o) {
  const io::MappingReport r = load_report(o);
  if (o.freeflight.empty()) throw ManifestError("--freeflight is required");
  const io::FreeFlightSet ff = io::parse_freeflight_points(io::read_text_file(o.freeflight));
  const double margin = o.tether_margin_uNm * 1e-6;
  io::json j{{"format_version", io::kReportFormatVersion}, {"tether_margin_Nm", margin}};
  if (ff.roll.empty() && ff.pitch.empty()) throw InsufficientData("no free-flight points");
  if (!ff.roll.empty()) {
    const auto v = validate_mapping(r.fits.roll, ff.roll, margin);
    j["roll"] = io::validation_to_json(v);
    std::cout << "roll:  " << show(v.percent_error) << " % error\n";
  }
  if (!ff.pitch.empty()) {
    const auto v = validate_mapping(r.fits.pitch, ff.pitch, margin);
    j["pitch"] = io::validation_to_json(v);
    std::cout << "pitch: " << show(v.percent_error) << " % error\n";
  }
  write_json(out_dir(o) / "validation.json", j);
  return kOk;
}

int cmd_report(const Options& o) {
  const io::MappingReport r = load_report(o);
  const fs::path dir = out_dir(o) / "plots";
  for (const auto& name : write_plot_tables(dir, r)) std::cout << "wrote " << (dir / name).string() << '\n';
  return kOk;
}

int cmd_campaign(const Options& o) {
  const io::TrialManifest m = load_manifest(o);
  const fs::path dir = out_dir(o);
  do_simulate(o, m, dir);
  const io::MappingReport r = do_map(o, dir, m, true);
  io::write_mapping_report((dir / "mapping_report.json").string(), r);
  print_mapping(r);
  print_coupling(r.roll_coupling);
  print_coupling(r.pitch_coupling);
  if (r.thrust) print_thrust(*r.thrust);
  write_plot_tables(dir / "plots", r);
  std::cout << "wrote " << (dir / "mapping_report.json").string() << " and plot tables\n";
  return kOk;
}

int run(CLI::App& app, const Options& o) {
  using Handler = int (*)(const Options&);
  const std::pair<const char*, Handler> table[] = {
      {"simulate", cmd_simulate}, {"calibrate", cmd_calibrate}, {"trim", cmd_trim},
      {"map", cmd_map},           {"coupling", cmd_coupling},   {"thrust", cmd_thrust},
      {"validate", cmd_validate}, {"report", cmd_report},       {"campaign", cmd_campaign}};
  for (const auto& [name, handler] : table)
    if (app.got_subcommand(name)) return handler(o);
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flexured gimbal torque-sensor campaign tool"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  const char* env_out = std::getenv("FLEXGIMBAL_OUT_DIR");
  o.out = env_out && *env_out ? env_out : "flexgimbal_out";

  app.add_flag("-v,--verbose", o.verbose, "Progress messages on stderr");
  app.add_option("--out", o.out, "Output directory (default $FLEXGIMBAL_OUT_DIR or ./flexgimbal_out)");

  auto manifest = [&](CLI::App* s, bool required) {
    auto* opt = s->add_option("--manifest", o.manifest, "Trial manifest")->check(CLI::ExistingFile);
    if (required) opt->required();
  };
  auto seed = [&](CLI::App* s) {
    s->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { o.seed = v; }, "Override manifest seed");
  };
  auto strict = [&](CLI::App* s) {
    s->add_flag("--strict-paper", o.strict, "Disable the thrust tilt correction");
  };
  auto report = [&](CLI::App* s) {
    s->add_option("--report", o.report, "Mapping report JSON")->required()->check(CLI::ExistingFile);
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate one trace per grid point");
  manifest(simulate, true);
  seed(simulate);
  strict(simulate);
  simulate->add_option("--jobs", o.jobs, "Worker threads (default: all cores)");

  auto* calibrate = app.add_subcommand("calibrate", "Fit k_s per axis from calibration points");
  calibrate->add_option("--points", o.points, "Points CSV")->required()->check(CLI::ExistingFile);
  manifest(calibrate, false);

  auto* trim = app.add_subcommand("trim", "Integral trim: bias torques and trim voltages");
  manifest(trim, true);
  seed(trim);
  trim->add_option("--trace", o.trace, "Recorded closed-loop trace instead of simulation")
      ->check(CLI::ExistingFile);

  auto* map = app.add_subcommand("map", "Fit voltage-torque mapping from traces");
  map->add_option("--traces", o.traces, "Simulation directory with trials.csv")->required()->check(CLI::ExistingDirectory);
  map->add_option("--calibration", o.calibration, "Calibration JSON")->check(CLI::ExistingFile);
  manifest(map, false);

  auto* coupling = app.add_subcommand("coupling", "Cross-axis coupling from a mapping report");
  report(coupling);
  auto* thrust = app.add_subcommand("thrust", "Thrust variation from a mapping report");
  report(thrust);

  auto* validate = app.add_subcommand("validate", "Compare the mapping with free-flight trims");
  report(validate);
  validate->add_option("--freeflight", o.freeflight, "Free-flight points CSV")->required()->check(CLI::ExistingFile);
  validate->add_option("--tether-margin", o.tether_margin_uNm, "Tether torque subtracted from errors, uNm");

  auto* plot = app.add_subcommand("report", "Plot-ready CSV tables from a mapping report");
  report(plot);

  auto* campaign = app.add_subcommand("campaign", "simulate, map, coupling, thrust and report in one run");
  manifest(campaign, true);
  seed(campaign);
  strict(campaign);
  campaign->add_option("--jobs", o.jobs, "Worker threads (default: all cores)");
  campaign->add_option("--calibration", o.calibration, "Calibration JSON")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    return run(app, o);
  } catch (const ManifestError& e) {
    std::cerr << "manifest error: " << e.what() << '\n';
    return kManifest;
  } catch (const UnitError& e) {
    std::cerr << "unit error: " << e.what() << '\n';
    return kManifest;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kParse;
  } catch (const ConvergenceFailure& e) {
    std::cerr << "convergence failure: " << e.what() << '\n';
    return kConvergence;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kConvergence;
  } catch (const RankDeficiency& e) {
    std::cerr << "rank deficiency: " << e.what() << '\n';
    return kRank;
  } catch (const InsufficientData& e) {
    std::cerr << "insufficient data: " << e.what() << '\n';
    return kRank;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
