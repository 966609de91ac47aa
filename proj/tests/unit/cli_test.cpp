#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "flexgimbal/io/csv.hpp"
#include "flexgimbal/io/report.hpp"

namespace fs = std::filesystem;
using namespace flexgimbal;

namespace {

const std::string kCli = FLEXGIMBAL_CLI;
const std::string kManifests = FLEXGIMBAL_MANIFEST_DIR;

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("flexgimbal_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return io::read_text_file(p.string()); }

void write(const fs::path& p, const std::string& text) { io::write_text_file(p.string(), text); }

std::string manifest_with(const std::string& extra) {
  return R"([device.roll]
k_f = "100 uNm/rad"
[device.pitch]
k_f = "100 uNm/rad"
[plant]
roll_gain = "0.247 uNm/V"
pitch_gain = "0.162 uNm/V"
)" + extra;
}

}  // namespace

TEST(Cli, SimulateWritesOneTracePerGridPoint) {
  const auto out = temp_dir("simulate");
  ASSERT_EQ(run("simulate --manifest " + kManifests + "/mapping_grid.toml --out " + out.string()), 0);
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(out / "traces")) n += e.path().extension() == ".csv";
  EXPECT_EQ(n, 45u);
}

TEST(Cli, EmptyGridIsAManifestError) {
  const auto dir = temp_dir("empty");
  write(dir / "m.toml", manifest_with("[grid]\nroll = []\npitch = [\"0 V\"]\n"));
  EXPECT_EQ(run("simulate --manifest " + (dir / "m.toml").string() + " --out " + dir.string()), 3);
}

TEST(Cli, CampaignIsByteIdenticalAcrossRunsAndJobCounts) {
  const auto a = temp_dir("det_a"), b = temp_dir("det_b");
  const std::string m = " --manifest " + kManifests + "/mapping_grid.toml --seed 5";
  ASSERT_EQ(run("campaign" + m + " --jobs 1 --out " + a.string()), 0);
  ASSERT_EQ(run("campaign" + m + " --jobs 3 --out " + b.string()), 0);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++compared;
  }
  EXPECT_EQ(compared, 45u + 1u + 1u + 3u);
}

TEST(Cli, StagedPipelineMatchesCampaign) {
  const auto dir = temp_dir("staged");
  const std::string manifest = kManifests + "/mapping_grid.toml";
  ASSERT_EQ(run("simulate --manifest " + manifest + " --out " + dir.string()), 0);
  write(dir / "cal.csv", "axis,torque_uNm,angle_rad\nroll,10,0.1\nroll,-10,-0.1\npitch,10,0.1\npitch,-10,-0.1\n");
  ASSERT_EQ(run("calibrate --points " + (dir / "cal.csv").string() + " --out " + dir.string()), 0);
  ASSERT_EQ(run("map --traces " + dir.string() + " --calibration " + (dir / "calibration.json").string() +
                " --manifest " + manifest + " --out " + dir.string()),
            0);
  const std::string report = (dir / "mapping_report.json").string();
  EXPECT_EQ(run("coupling --report " + report + " --out " + dir.string()), 0);
  EXPECT_EQ(run("thrust --report " + report + " --out " + dir.string()), 0);
  EXPECT_EQ(run("report --report " + report + " --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "plots" / "torque_pitch.csv"));
  EXPECT_TRUE(fs::exists(dir / "coupling.json"));
  const auto r = io::read_mapping_report(report);
  EXPECT_NEAR(r.fits.roll.slope, 0.247e-6, 0.02 * 0.247e-6);

  write(dir / "ff.csv", "axis,trim_V,torque_uNm\nroll,-20,0\nroll,-17,1.248\n");
  EXPECT_EQ(run("validate --report " + report + " --freeflight " + (dir / "ff.csv").string() + " --out " +
                dir.string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "validation.json"));
}

TEST(Cli, MapWithoutCalibrationFails) {
  const auto dir = temp_dir("nocal");
  ASSERT_EQ(run("simulate --manifest " + kManifests + "/mapping_grid.toml --out " + dir.string()), 0);
  EXPECT_EQ(run("map --traces " + dir.string() + " --out " + dir.string()), 3);
  EXPECT_EQ(run("report --out " + dir.string()), 2);
}

TEST(Cli, Calibrate) {
  const auto dir = temp_dir("calibrate");
  write(dir / "one.csv", "axis,torque_uNm,angle_rad\nroll,1.518,1\n");
  EXPECT_EQ(run("calibrate --points " + (dir / "one.csv").string() + " --out " + dir.string()), 6);
  write(dir / "both.csv",
        "axis,torque_uNm,angle_rad\nroll,0.1518,0.1\nroll,-0.1518,-0.1\npitch,0.1882,0.1\npitch,-0.1882,-0.1\n");
  ASSERT_EQ(run("calibrate --points " + (dir / "both.csv").string() + " --out " + dir.string()), 0);
  const auto cal = io::read_calibration((dir / "calibration.json").string());
  EXPECT_NEAR(cal.roll->sensitivity, 1.518e-6, 1e-15);
  EXPECT_NEAR(cal.pitch->sensitivity, 1.882e-6, 1e-15);
}

TEST(Cli, Trim) {
  const auto dir = temp_dir("trim");
  ASSERT_EQ(run("trim --manifest " + kManifests + "/trim_soft_device.toml --out " + dir.string()), 0);
  const auto j = io::json::parse(slurp(dir / "trim.json"));
  EXPECT_NEAR(j["trim_voltage_V"]["roll"].get<double>(), 34.0, 0.34);

  write(dir / "zero.toml", manifest_with("[grid]\nroll = [\"0 V\"]\npitch = [\"0 V\"]\n"));
  ASSERT_EQ(run("trim --manifest " + (dir / "zero.toml").string() + " --out " + dir.string()), 0);
  const auto z = io::json::parse(slurp(dir / "trim.json"));
  EXPECT_NEAR(z["trim_voltage_V"]["roll"].get<double>(), 0.0, 1e-6);
  EXPECT_NEAR(z["trim_voltage_V"]["pitch"].get<double>(), 0.0, 1e-6);

  write(dir / "unstable.toml",
        manifest_with("roll_bias = \"1 uNm\"\n[grid]\nroll = [\"0 V\"]\npitch = [\"0 V\"]\n"
                      "[trim]\nki_roll = \"1 Nm/rad/s\"\nki_pitch = \"1 Nm/rad/s\"\nduration = \"2 s\"\n"));
  EXPECT_EQ(run("trim --manifest " + (dir / "unstable.toml").string() + " --out " + dir.string()), 5);
}

TEST(Cli, InputErrors) {
  const auto dir = temp_dir("errors");
  write(dir / "badunit.toml", manifest_with("[grid]\nroll = [\"0 parsecs\"]\npitch = [\"0 V\"]\n"));
  EXPECT_EQ(run("simulate --manifest " + (dir / "badunit.toml").string() + " --out " + dir.string()), 3);
  write(dir / "syntax.toml", "[grid\n");
  EXPECT_EQ(run("simulate --manifest " + (dir / "syntax.toml").string() + " --out " + dir.string()), 4);
  EXPECT_EQ(run("simulate"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, InputsAreNotModified) {
  const auto dir = temp_dir("readonly");
  fs::copy_file(kManifests + "/mapping_grid.toml", dir / "m.toml");
  const auto before = slurp(dir / "m.toml");
  const auto stamp = fs::last_write_time(dir / "m.toml");
  ASSERT_EQ(run("campaign --manifest " + (dir / "m.toml").string() + " --out " + (dir / "out").string()), 0);
  EXPECT_EQ(slurp(dir / "m.toml"), before);
  EXPECT_EQ(fs::last_write_time(dir / "m.toml"), stamp);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const auto dir = temp_dir("env");
  const std::string cmd = "FLEXGIMBAL_OUT_DIR=" + dir.string() + " " + kCli + " simulate --manifest " + kManifests +
                          "/mapping_grid.toml > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "trials.csv"));
}
