#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kBinary = TTPARK_BINARY;
const std::string kData = TTPARK_DATA_DIR;

int run(const std::string& args) {
  const int rc = std::system((kBinary + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("ttpark_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// A short scenario with a small controller so the test stays quick.
void write_fixture(const fs::path& dir) {
  nlohmann::json sc = {
      {"name", "short"},
      {"initial_state", {{"px", 0.0}, {"py", 0.5}, {"v", 0.5}}},
      {"obstacles", nlohmann::json::array({{{"cx", 6.0}, {"cy", 3.5}, {"ax", 1.0}, {"ay", 1.0}}})},
      {"reference", nlohmann::json::array({{0, 0}, {2, 0}, {4, 0}, {6, 0}, {8, 0}, {10, 0}})},
      {"max_episode_time", 0.4}};
  std::ofstream(dir / "short.json") << sc.dump(2);
  nlohmann::json cfg = {{"controller", {{"S", 32}, {"H", 10}}}};
  std::ofstream(dir / "small.json") << cfg.dump(2);
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("run"), 1);
  EXPECT_EQ(run("run --scenario /nonexistent.json"), 1);
  EXPECT_EQ(run("frobnicate"), 1);
}

TEST(Cli, BadConfigIsExitOne) {
  const fs::path d = scratch("badcfg");
  write_fixture(d);
  std::ofstream(d / "bad.json") << R"({"controller": {"lambda": -1}})";
  EXPECT_EQ(run("run --scenario " + (d / "short.json").string() + " --config " + (d / "bad.json").string() +
                " --out-dir " + (d / "out").string()),
            1);
  EXPECT_EQ(run("run --scenario " + (d / "short.json").string() + " --controller pid --out-dir " +
                (d / "out").string()),
            1);
  EXPECT_EQ(run("run --scenario " + (d / "short.json").string() + " --seeds 3-1 --out-dir " +
                (d / "out").string()),
            1);
  fs::remove_all(d);
}

TEST(Cli, RunWritesOutputsAndIsRepeatable) {
  const fs::path d = scratch("run");
  write_fixture(d);
  const std::string base = "run --scenario " + (d / "short.json").string() + " --controller all --config " +
                           (d / "small.json").string() + " --seeds 0,1 --out-dir ";
  ASSERT_EQ(run(base + (d / "a").string()), 0);
  ASSERT_EQ(run(base + (d / "b").string()), 0);
  for (const char* f : {"summary.csv", "summary.json", "summary_table.csv", "timing.csv"})
    EXPECT_TRUE(fs::exists(d / "a" / f)) << f;
  EXPECT_TRUE(fs::exists(d / "a" / "episodes" / "short_br-mppi_seed1.csv"));
  EXPECT_TRUE(fs::exists(d / "a" / "plots" / "short_mppi_seed0.csv"));
  EXPECT_EQ(slurp(d / "a" / "summary.json"), slurp(d / "b" / "summary.json"));
  EXPECT_EQ(slurp(d / "a" / "summary.csv"), slurp(d / "b" / "summary.csv"));
  EXPECT_EQ(slurp(d / "a" / "summary_table.csv"), slurp(d / "b" / "summary_table.csv"));
  for (const auto& e : fs::directory_iterator(d / "a" / "episodes"))
    EXPECT_EQ(slurp(e.path()), slurp(d / "b" / "episodes" / e.path().filename())) << e.path();

  const auto doc = nlohmann::json::parse(slurp(d / "a" / "summary.json"));
  EXPECT_EQ(doc["episodes"].size(), 6u);
  EXPECT_EQ(doc["table"].size(), 3u);
  EXPECT_EQ(doc["episodes"][0]["status"], "timeout");
  fs::remove_all(d);
}

TEST(Cli, BenchPrintsTable) {
  const fs::path d = scratch("bench");
  ASSERT_EQ(run("bench --controller br-mppi --S 16 --H 8 --obstacles 0,2 --steps 2 --out " +
                (d / "bench.csv").string()),
            0);
  const std::string csv = slurp(d / "bench.csv");
  EXPECT_EQ(csv.rfind("controller,S,H,obstacles,steps,mean_ms,p95_ms\n", 0), 0u);
  EXPECT_NE(csv.find("br-mppi,16,8,2,2,"), std::string::npos);
  EXPECT_EQ(run("bench --steps 0"), 1);
  fs::remove_all(d);
}

namespace {

double bench_mean(const std::string& csv, const std::string& prefix) {
  const auto at = csv.find(prefix);
  if (at == std::string::npos) return -1.0;
  std::istringstream row(csv.substr(at, csv.find('\n', at) - at));
  std::string cell;
  for (int i = 0; i < 6; ++i) std::getline(row, cell, ',');
  return std::stod(cell);
}

}  // namespace

TEST(Cli, BenchScalesWithWork) {
  const fs::path d = scratch("scale");
  ASSERT_EQ(run("bench --controller br-mppi --S 64,1024 --H 30 --obstacles 0,8 --steps 4 --out " +
                (d / "bench.csv").string()),
            0);
  const std::string csv = slurp(d / "bench.csv");
  EXPECT_LT(bench_mean(csv, "br-mppi,64,30,0,"), bench_mean(csv, "br-mppi,1024,30,0,"));
  EXPECT_LT(bench_mean(csv, "br-mppi,1024,30,0,"), bench_mean(csv, "br-mppi,1024,30,8,"));
  fs::remove_all(d);
}

TEST(Cli, ShippedScenarioValidates) {
  const fs::path d = scratch("shipped");
  EXPECT_EQ(run("run --scenario " + kData + "/scenarios/forward_parking.json --config " + kData +
                "/configs/acceptance.json --seeds 0-x --out-dir " + d.string()),
            1);
  fs::remove_all(d);
}
