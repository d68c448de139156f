#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "covsteer/cli/commands.hpp"
#include "covsteer/cli/config.hpp"
#include "covsteer/cli/csv.hpp"

namespace covsteer::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / "covsteer_cli_test" / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunOptions Out(const std::string& sub) const { return {dir_ / sub, 1}; }

  fs::path dir_;
  std::ostringstream log_;
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Data rows of a CSV file, header comment and column row removed.
std::vector<std::vector<std::string>> Rows(const fs::path& p, std::vector<std::string>* header = nullptr) {
  std::ifstream in(p, std::ios::binary);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!seen_header) {
      seen_header = true;
      if (header) *header = cells;
      continue;
    }
    rows.push_back(cells);
  }
  return rows;
}

int RunBinary(const std::string& args) {
  const std::string cmd = std::string(COVSTEER_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(ConfigTest, RoundTripEveryPreset) {
  for (const auto& name : preset_names()) {
    const RunConfig c = load_config(std::nullopt, name);
    const RunConfig back = config_from_json(json::parse(to_json(c).dump()));
    EXPECT_TRUE(c == back) << name;
    EXPECT_EQ(config_hash(c), config_hash(back));
  }
}

TEST(ConfigTest, RoundTripPiecewiseAndSampled) {
  json j = preset_json("inertial-q1");
  j["problem"]["Q"] = {{"type", "piecewise"},
                       {"breakpoints", {0.0, 0.5, 1.0}},
                       {"values", {{{1, 0}, {0, 1}}, {{2, 0}, {0, 2}}}}};
  j["problem"]["A"] = {{"type", "sampled"},
                       {"times", {0.0, 1.0}},
                       {"values", {{{0, 1}, {0, 0}}, {{0, 1.5}, {0, 0}}}}};
  const RunConfig c = config_from_json(j);
  EXPECT_TRUE(c == config_from_json(to_json(c)));
  const auto problem = build_problem(c);
  EXPECT_DOUBLE_EQ(problem.sys.Q(0.7)(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(problem.sys.A(0.5)(0, 1), 1.25);
}

TEST(ConfigTest, ErrorsCarryFieldPaths) {
  json j = preset_json("inertial-q1");
  j["problem"]["A"] = json::parse("[[0, 1, 2], [0, 0, 0]]");
  try {
    build_problem(config_from_json(j));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("$.problem"), std::string::npos) << e.what();
  }
  j = preset_json("inertial-q1");
  j["grid_size"] = -3;
  try {
    config_from_json(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("$.grid_size"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_config(std::nullopt, std::string("no-such-preset")), ConfigError);
}

TEST(ConfigTest, PresetValues) {
  const auto q10 = build_problem(load_config(std::nullopt, "inertial-q10"));
  EXPECT_DOUBLE_EQ(q10.sys.Q(0.0)(1, 1), 10.0);
  EXPECT_DOUBLE_EQ(q10.sigma0(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(q10.sigma1(1, 1), 0.25);
  EXPECT_DOUBLE_EQ(load_config(std::nullopt, "inertial-eps0.1").epsilon, 0.1);
}

TEST(CsvTest, QuotesAndPrecision) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  const fs::path p = fs::temp_directory_path() / "covsteer_csv_test.csv";
  {
    CsvWriter w(p, "abc", {"a,b", "say \"hi\""});
    w.row(std::vector<double>{0.5, -2.0});
  }
  const std::string text = Slurp(p);
  EXPECT_EQ(text.rfind("# covsteer 0.1.0 schema=1 config=abc\r\n", 0), 0u);
  EXPECT_NE(text.find("\"a,b\",\"say \"\"hi\"\"\"\r\n0.5,-2\r\n"), std::string::npos);
  fs::remove(p);
}

TEST_F(CliTest, SolveWritesAllFiles) {
  for (const std::string name : {"inertial-q1", "inertial-q10", "inertial-qneg5"}) {
    const RunConfig c = load_config(std::nullopt, name);
    ASSERT_EQ(run_solve(c, Out(name), log_), kExitOk) << name;
    for (const char* f : {"gains.csv", "pi.csv", "h.csv", "sigma.csv", "report.txt"})
      EXPECT_TRUE(fs::exists(dir_ / name / f)) << name << "/" << f;
    std::vector<std::string> header;
    const auto rows = Rows(dir_ / name / "sigma.csv", &header);
    EXPECT_EQ(header, (std::vector<std::string>{"t", "Sigma_0_0", "Sigma_0_1", "Sigma_1_1"}));
    ASSERT_EQ(rows.size(), 2001u);
    const auto& last = rows.back();
    EXPECT_NEAR(std::stod(last[1]), 0.25, 1e-6);
    EXPECT_NEAR(std::stod(last[2]), 0.0, 1e-6);
    const std::string report = Slurp(dir_ / name / "report.txt");
    EXPECT_NE(report.find("status = ok"), std::string::npos);
    EXPECT_NE(report.find("branch = Z_minus"), std::string::npos);
  }
}

TEST_F(CliTest, ScalarZeroNoiseCovarianceStaysAtOne) {
  RunConfig c = load_config(std::nullopt, "scalar-trivial");
  c.epsilon = 0.0;
  ASSERT_EQ(run_solve(c, Out("s"), log_), kExitOk);
  for (const auto& row : Rows(dir_ / "s" / "sigma.csv")) EXPECT_NEAR(std::stod(row[1]), 1.0, 1e-12);
  for (const auto& row : Rows(dir_ / "s" / "gains.csv")) EXPECT_NEAR(std::stod(row[1]), 0.0, 1e-12);
}

TEST_F(CliTest, ScalarGainsFollowRiccati) {
  const RunConfig c = load_config(std::nullopt, "scalar-trivial");
  ASSERT_EQ(run_solve(c, Out("s"), log_), kExitOk);
  const double p0 = 1.5 - std::sqrt(5.0) / 2.0;
  for (const auto& row : Rows(dir_ / "s" / "gains.csv")) {
    const double t = std::stod(row[0]);
    EXPECT_NEAR(std::stod(row[1]), p0 / (1.0 - p0 * t), 1e-10);
  }
  const auto sigma = Rows(dir_ / "s" / "sigma.csv");
  EXPECT_NEAR(std::stod(sigma.front()[1]), 1.0, 1e-14);
  EXPECT_NEAR(std::stod(sigma.back()[1]), 1.0, 1e-10);
}

TEST_F(CliTest, SimulateTubeAndDeterminism) {
  RunConfig c = load_config(std::nullopt, "inertial-q1");
  c.monte_carlo.n_paths = 200;
  c.monte_carlo.n_steps = 200;
  c.monte_carlo.seed = 11;
  ASSERT_EQ(run_simulate(c, Out("a"), log_), kExitOk);
  ASSERT_EQ(run_simulate(c, {dir_ / "b", 3}, log_), kExitOk);
  EXPECT_EQ(Slurp(dir_ / "a" / "paths.csv"), Slurp(dir_ / "b" / "paths.csv"));
  for (const char* f : {"paths.csv", "empirical_cov.csv", "tube.csv", "cost.txt"})
    EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;

  double max_radius = 0.0;
  for (const auto& row : Rows(dir_ / "a" / "tube.csv")) {
    if (std::stod(row[0]) != 0.0) break;
    max_radius = std::max(max_radius, std::hypot(std::stod(row[2]), std::stod(row[3])));
    EXPECT_EQ(row[4], "3");
  }
  EXPECT_NEAR(max_radius, 3.0 * std::sqrt(2.0), 1e-12);
  EXPECT_EQ(Rows(dir_ / "a" / "paths.csv").size(), 200u * 11u);
}

TEST_F(CliTest, SimulateSmokeTwoPaths) {
  RunConfig c = load_config(std::nullopt, "inertial-q1");
  c.monte_carlo.n_paths = 2;
  c.monte_carlo.n_steps = 50;
  ASSERT_EQ(run_simulate(c, Out("a"), log_), kExitOk);
  EXPECT_EQ(Rows(dir_ / "a" / "paths.csv").size(), 22u);
  EXPECT_EQ(Rows(dir_ / "a" / "empirical_cov.csv").size(), 11u);
}

TEST_F(CliTest, SimulateRequiresSeed) {
  RunConfig c = load_config(std::nullopt, "inertial-q1");
  c.monte_carlo.seed.reset();
  EXPECT_THROW(run_simulate(c, Out("a"), log_), ConfigError);
}

TEST_F(CliTest, SweepScalarGaps) {
  const RunConfig c = load_config(std::nullopt, "scalar-trivial");
  ASSERT_EQ(run_sweep(c, Out("w"), log_), kExitOk);
  const auto rows = Rows(dir_ / "w" / "sweep.csv");
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& row : rows) {
    const double eps = std::stod(row[0]);
    EXPECT_NEAR(std::stod(row[1]), eps / 2.0 + 1.0 - std::sqrt(eps * eps / 4.0 + 1.0), 1e-12);
  }
  EXPECT_EQ(std::stod(rows.back()[1]), 0.0);
}

TEST_F(CliTest, SweepInertialMonotoneAndSingleRow) {
  RunConfig c = load_config(std::nullopt, "inertial-q1");
  c.sweep_epsilons = {10.0, 1.0, 0.1, 0.0};
  c.grid_size = 500;
  ASSERT_EQ(run_sweep(c, Out("w"), log_), kExitOk);
  const auto rows = Rows(dir_ / "w" / "sweep.csv");
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 1; i < rows.size(); ++i)
    EXPECT_LE(std::stod(rows[i][1]), std::stod(rows[i - 1][1]));

  c.sweep_epsilons = {0.0};
  ASSERT_EQ(run_sweep(c, Out("one"), log_), kExitOk);
  EXPECT_EQ(Rows(dir_ / "one" / "sweep.csv").size(), 1u);
}

TEST_F(CliTest, VerifyDefaultPasses) {
  const RunConfig c = load_config(std::nullopt, "inertial-q1");
  std::ostringstream out;
  EXPECT_EQ(run_verify(c, Out("v"), out), kExitOk) << out.str();
  EXPECT_EQ(out.str().find("\nFAIL"), std::string::npos);
}

TEST_F(CliTest, VerifyTightToleranceFails) {
  RunConfig c = load_config(std::nullopt, "inertial-q1");
  c.verify.tolerance = 1e-14;
  std::ostringstream out;
  EXPECT_EQ(run_verify(c, Out("v"), out), kExitVerifyFailure);
  EXPECT_NE(out.str().find("FAIL"), std::string::npos);
}

TEST_F(CliTest, VerifyForcedPlusBranchIsExpectedFail) {
  RunConfig c = load_config(std::nullopt, "inertial-q1");
  c.verify.force_plus_branch = true;
  bool found = false;
  for (const auto& check : verify_checks(c)) {
    if (check.name.find("z_plus") != std::string::npos &&
        check.status == CheckStatus::kExpectedFail)
      found = true;
    EXPECT_NE(check.status, CheckStatus::kFail) << check.name;
  }
  EXPECT_TRUE(found);
}

TEST_F(CliTest, BinaryExitCodes) {
  const std::string out = " --out " + (dir_ / "x").string();
  EXPECT_EQ(RunBinary("solve --preset inertial-q1" + out), 0);
  EXPECT_EQ(RunBinary("solve --preset no-such-preset" + out), 1);

  const fs::path bad = dir_ / "bad.json";
  std::ofstream(bad) << "{ not json";
  EXPECT_EQ(RunBinary("solve --config " + bad.string() + out), 1);

  json j = preset_json("inertial-q1");
  j["problem"]["B"] = json::parse("[[0], [0]]");
  const fs::path uncontrollable = dir_ / "uncontrollable.json";
  std::ofstream(uncontrollable) << j.dump();
  EXPECT_EQ(RunBinary("solve --config " + uncontrollable.string() + out), 2);

  json tight = {{"verify", {{"tolerance", 1e-14}}}};
  const fs::path tight_path = dir_ / "tight.json";
  std::ofstream(tight_path) << tight.dump();
  EXPECT_EQ(RunBinary("verify --preset inertial-q1 --config " + tight_path.string() + out), 3);
}

TEST_F(CliTest, BinarySeedOverrideIsReproducible) {
  const std::string common = " --preset inertial-q1 --paths 50 --steps 200 --seed 5 --out ";
  ASSERT_EQ(RunBinary("simulate" + common + (dir_ / "a").string()), 0);
  ASSERT_EQ(RunBinary("simulate" + common + (dir_ / "b").string()), 0);
  EXPECT_EQ(Slurp(dir_ / "a" / "paths.csv"), Slurp(dir_ / "b" / "paths.csv"));
}

}  // namespace
}  // namespace covsteer::cli
