#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "estkit/cli/commands.hpp"
#include "estkit/cli/report_io.hpp"
#include "estkit/cli/scenario_document.hpp"

using namespace estkit;
using namespace estkit::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("estkit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  // Runs the installed binary; returns its exit status and captures stderr.
  int spawn(const std::string& args, std::string* err = nullptr) {
    const fs::path err_file = dir_ / "stderr.txt";
    const std::string cmd = std::string("'") + ESTKIT_BINARY + "' " + args + " > '" + (dir_ / "stdout.txt").string() +
                            "' 2> '" + err_file.string() + "'";
    const int status = std::system(cmd.c_str());
    if (err != nullptr) *err = read(err_file);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

const char* kLinear1DConfig = R"({
  "schema_version": 1,
  "model": "linear-1d",
  "model_params": {"sigma2_motion": 0.5, "sigma2_obs": 1.0},
  "horizon": 25,
  "seed": 7,
  "filters": ["kf"]
})";

const char* kRangeBearingConfig = R"({
  "schema_version": 1,
  "model": "range-bearing-2d",
  "horizon": 40,
  "seed": 3,
  "initial_belief": {"mean": [0, 0, 0], "cov": [[0.05, 0, 0], [0, 0.05, 0], [0, 0, 0.01]]},
  "sample_initial_truth": true,
  "iteration": {"epsilon": 1e-10, "max_iters": 1}
})";

CommandOptions options(const fs::path& config, const fs::path& out) {
  CommandOptions o;
  o.config = config;
  o.out = out;
  return o;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Rows of the per-step table, without the summary block.
std::vector<std::vector<std::string>> step_rows(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  const auto all = lines(csv);
  for (std::size_t i = 1; i < all.size() && all[i] != "# summary"; ++i) rows.push_back(split(all[i]));
  return rows;
}

}  // namespace

TEST(ScenarioDocument, ParsesFullDocument) {
  const ScenarioDocument doc = parse_scenario_document(R"({
    "schema_version": 1,
    "model": "heading-robot-se2-lite",
    "model_params": {"dt": 0.2, "motion_noise": [1e-3, 2e-3, 3e-4], "landmarks": [[1, 2], [3, 4], [5, 6]],
                     "initial_state": [0.5, 0.5, 0.1]},
    "horizon": 3,
    "seed": 18446744073709551615,
    "controls": [[1, 0.1], [1, 0.2], [1, 0.3]],
    "filters": ["eskf", "ieskf", "dr"],
    "iteration": {"epsilon": 1e-9, "max_iters": 7, "recompute_retraction_jacobian": false}
  })");
  EXPECT_EQ(doc.scenario.model_id, "heading-robot-se2-lite");
  EXPECT_DOUBLE_EQ(doc.scenario.params.dt, 0.2);
  EXPECT_EQ(doc.scenario.params.landmarks.size(), 3u);
  EXPECT_EQ(doc.scenario.seed, 18446744073709551615ull);
  EXPECT_EQ(doc.scenario.controls.size(), 3u);
  EXPECT_EQ(doc.filters.size(), 3u);
  EXPECT_EQ(doc.iteration.max_iters, 7);
  EXPECT_FALSE(doc.iteration.recompute_retraction_jacobian);
}

struct BadDocument {
  std::string name;
  std::string json;
  std::string field;
};

class ScenarioDocumentErrors : public ::testing::TestWithParam<BadDocument> {};

TEST_P(ScenarioDocumentErrors, ReportFieldPath) {
  try {
    parse_scenario_document(GetParam().json);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), GetParam().field) << e.what();
  }
}

INSTANTIATE_TEST_SUITE_P(
    Cases, ScenarioDocumentErrors,
    ::testing::Values(
        BadDocument{"NegativeVariance", R"({"schema_version":1,"model":"linear-1d","model_params":{"sigma2_obs":-1}})",
                    "model_params.sigma2_obs"},
        BadDocument{"UnknownTopLevelKey", R"({"schema_version":1,"model":"linear-1d","colour":"red"})", "colour"},
        BadDocument{"UnknownNestedKey", R"({"schema_version":1,"model":"linear-1d","iteration":{"eps":1}})",
                    "iteration.eps"},
        BadDocument{"MissingVersion", R"({"model":"linear-1d"})", "schema_version"},
        BadDocument{"FutureVersion", R"({"schema_version":2,"model":"linear-1d"})", "schema_version"},
        BadDocument{"UnknownModel", R"({"schema_version":1,"model":"quadrotor"})", "model"},
        BadDocument{"IncompatibleFilter", R"({"schema_version":1,"model":"range-bearing-2d","filters":["kf"]})",
                    "filters[0]"},
        BadDocument{"UnknownFilter", R"({"schema_version":1,"model":"linear-1d","filters":["kf","ukf"]})",
                    "filters[1]"},
        BadDocument{"ControlDimension",
                    R"({"schema_version":1,"model":"linear-cv-2d","horizon":2,"controls":[[0,0],[1]]})",
                    "controls[1]"},
        BadDocument{"ControlCount", R"({"schema_version":1,"model":"linear-1d","horizon":3,"controls":[[1]]})",
                    "controls"},
        BadDocument{"BeliefNotPsd",
                    R"({"schema_version":1,"model":"linear-1d","initial_belief":{"mean":[0],"cov":[[-1]]}})",
                    "initial_belief.cov"},
        BadDocument{"BadLandmark",
                    R"({"schema_version":1,"model":"range-bearing-2d","model_params":{"landmarks":[[1,2],[3]]}})",
                    "model_params.landmarks[1]"},
        BadDocument{"NegativeSeed", R"({"schema_version":1,"model":"linear-1d","seed":-4})", "seed"},
        BadDocument{"ZeroHorizon", R"({"schema_version":1,"model":"linear-1d","horizon":0})", "horizon"},
        BadDocument{"StringNumber", R"({"schema_version":1,"model":"linear-1d","model_params":{"dt":"0.1"}})",
                    "model_params.dt"},
        BadDocument{"MalformedJson", R"({"schema_version":1,)", ""}),
    [](const auto& info) { return info.param.name; });

TEST(ReportIo, SeventeenSignificantDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(std::stod(format_double(M_PI)), M_PI);
}

TEST(ReportIo, TrajectoryTableLayout) {
  Trajectory t;
  t.truth_states = {Vector::Constant(1, 0.0), Vector::Constant(1, 1.5)};
  t.controls = {Vector::Constant(1, 1.0)};
  t.measurements = {Vector::Constant(1, 1.25)};
  std::ostringstream out;
  write_trajectory_csv(out, t);
  EXPECT_EQ(out.str(), "step,x_0,u_0,z_0\n0,0,,\n1,1.5,1,1.25\n");
}

TEST_F(CliTest, SimulateWritesTruthRows) {
  const fs::path cfg = write("c.json", kLinear1DConfig);
  CommandOptions opts = options(cfg, dir_ / "traj.csv");
  opts.quiet = true;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_simulate(opts, out, err), kExitOk) << err.str();
  const auto rows = lines(read(dir_ / "traj.csv"));
  ASSERT_EQ(rows.size(), 27u);
  EXPECT_EQ(rows[0], "step,x_0,u_0,z_0");
  EXPECT_EQ(rows[1], "0,0,,");
  EXPECT_EQ(split(rows[26]).size(), 4u);
}

TEST_F(CliTest, SimulateIsByteIdenticalAcrossRuns) {
  const fs::path cfg = write("c.json", kRangeBearingConfig);
  std::ostringstream out, err;
  CommandOptions a = options(cfg, dir_ / "a.csv");
  CommandOptions b = options(cfg, dir_ / "b.csv");
  ASSERT_EQ(cmd_simulate(a, out, err), kExitOk);
  ASSERT_EQ(cmd_simulate(b, out, err), kExitOk);
  EXPECT_EQ(read(dir_ / "a.csv"), read(dir_ / "b.csv"));
  CommandOptions c = options(cfg, dir_ / "c.csv");
  c.seed = 4;
  ASSERT_EQ(cmd_simulate(c, out, err), kExitOk);
  EXPECT_NE(read(dir_ / "a.csv"), read(dir_ / "c.csv"));
}

TEST_F(CliTest, RunWritesRowsAndSummary) {
  const fs::path cfg = write("c.json", kLinear1DConfig);
  CommandOptions opts = options(cfg, dir_ / "run.csv");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(opts, out, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("kf: rmse="), std::string::npos);
  const std::string csv = read(dir_ / "run.csv");
  const auto all = lines(csv);
  EXPECT_EQ(all[0], "step,filter,x_hat_0,P_diag_0,nees,iterations,innovation_norm");
  EXPECT_EQ(step_rows(csv).size(), 25u);
  const auto summary = std::find(all.begin(), all.end(), "# summary");
  ASSERT_NE(summary, all.end());
  EXPECT_EQ(*(summary + 1), "filter,rmse_0,mean_nees,mean_iterations");
  const auto fields = split(*(summary + 2));
  ASSERT_EQ(fields.size(), 4u);
  EXPECT_EQ(fields[0], "kf");
  EXPECT_TRUE(std::isfinite(std::stod(fields[1])));
}

TEST_F(CliTest, SingleIterationIekfMatchesEkfColumns) {
  const fs::path cfg = write("c.json", kRangeBearingConfig);
  std::ostringstream out, err;
  CommandOptions ekf = options(cfg, dir_ / "ekf.csv");
  ekf.filters = {"ekf"};
  CommandOptions iekf = options(cfg, dir_ / "iekf.csv");
  iekf.filters = {"iekf"};
  ASSERT_EQ(cmd_run(ekf, out, err), kExitOk) << err.str();
  ASSERT_EQ(cmd_run(iekf, out, err), kExitOk) << err.str();
  const auto a = step_rows(read(dir_ / "ekf.csv"));
  const auto b = step_rows(read(dir_ / "iekf.csv"));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    // step, filter, then 3 estimates and 3 covariance diagonals.
    for (std::size_t c = 2; c < 8; ++c) EXPECT_EQ(a[r][c], b[r][c]) << "row " << r << " col " << c;
  }
}

TEST_F(CliTest, IeskfIterationsBoundedByCap) {
  const fs::path cfg = write("c.json", R"({
    "schema_version": 1, "model": "heading-robot-se2-lite", "seed": 11, "horizon": 50,
    "filters": ["ieskf"], "iteration": {"epsilon": 1e-15, "max_iters": 4}
  })");
  CommandOptions opts = options(cfg, dir_ / "run.csv");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run(opts, out, err), kExitOk) << err.str();
  for (const auto& row : step_rows(read(dir_ / "run.csv"))) {
    const int it = std::stoi(row[9]);
    EXPECT_GE(it, 1);
    EXPECT_LE(it, 4);
  }
}

TEST_F(CliTest, RunRequiresExactlyOneFilter) {
  const fs::path cfg = write("c.json", R"({"schema_version": 1, "model": "linear-1d"})");
  CommandOptions opts = options(cfg, dir_ / "run.csv");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run(opts, out, err), kExitUsage);
  EXPECT_FALSE(fs::exists(dir_ / "run.csv"));
  const auto e = nlohmann::json::parse(err.str());
  EXPECT_EQ(e["error"]["exit_code"], kExitUsage);
}

TEST_F(CliTest, CompareSharesTrajectoryAcrossFilters) {
  const fs::path cfg = write("c.json", kRangeBearingConfig);
  CommandOptions opts = options(cfg, dir_ / "cmp.csv");
  opts.filters = {"ekf", "iekf", "dr"};
  opts.quiet = true;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_compare(opts, out, err), kExitOk) << err.str();
  EXPECT_TRUE(out.str().empty());
  const auto rows = step_rows(read(dir_ / "cmp.csv"));
  ASSERT_EQ(rows.size(), 120u);
  EXPECT_EQ(rows[0][1], "ekf");
  EXPECT_EQ(rows[40][1], "iekf");
  EXPECT_EQ(rows[80][1], "dr");
}

TEST_F(CliTest, CompareDefaultsToEveryCompatibleFilter) {
  const fs::path cfg = write("c.json", R"({"schema_version": 1, "model": "linear-1d", "horizon": 5})");
  CommandOptions opts = options(cfg, {});
  std::ostringstream out, err;
  ASSERT_EQ(cmd_compare(opts, out, err), kExitOk) << err.str();
  EXPECT_EQ(step_rows(out.str()).size(), 35u);
}

TEST_F(CliTest, ValidatePrintsChecks) {
  CommandOptions opts;
  opts.suite = "linear-collapse";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_validate(opts, out, err), kExitOk);
  EXPECT_NE(out.str().find("PASS  max per-step deviation from kf on linear-1d"), std::string::npos);
  EXPECT_NE(out.str().find("suite linear-collapse: PASS"), std::string::npos);
}

TEST(ValidationExitCode, FailingCheckGivesOne) {
  EXPECT_EQ(validation_exit_code(SuiteResult{"s", {check_below("a", 1.0, 2.0)}}), kExitOk);
  EXPECT_EQ(validation_exit_code(SuiteResult{"s", {check_below("a", 3.0, 2.0)}}), kExitValidationFailed);
}

TEST_F(CliTest, BinaryExitCodes) {
  const fs::path good = write("good.json", kLinear1DConfig);
  const fs::path negative =
      write("neg.json", R"({"schema_version":1,"model":"linear-1d","model_params":{"sigma2_obs":-2}})");
  const fs::path singular = write("singular.json", R"({
    "schema_version": 1, "model": "linear-1d", "filters": ["kf"],
    "model_params": {"sigma2_motion": 0, "sigma2_obs": 0},
    "initial_belief": {"mean": [0], "cov": [[0]]}
  })");
  const std::string out = " --out '" + (dir_ / "o.csv").string() + "'";

  std::string err;
  EXPECT_EQ(spawn("simulate --quiet --config '" + good.string() + "'" + out), kExitOk);
  EXPECT_EQ(spawn("run --config '" + good.string() + "'" + out), kExitOk);
  EXPECT_EQ(spawn("validate --suite jacobians --quiet"), kExitOk);

  EXPECT_EQ(spawn("simulate --config '" + negative.string() + "'" + out, &err), kExitUsage);
  EXPECT_EQ(nlohmann::json::parse(err)["error"]["field"], "model_params.sigma2_obs");

  EXPECT_EQ(spawn("validate --suite nonsense", &err), kExitUsage);
  for (const char* suite : {"grid-vs-kf", "gn-vs-iekf", "cost-vs-ieskf", "linear-collapse", "jacobians"}) {
    EXPECT_NE(err.find(suite), std::string::npos);
  }

  EXPECT_EQ(spawn("run --config '" + singular.string() + "'" + out, &err), kExitRuntime);
  EXPECT_EQ(nlohmann::json::parse(err)["error"]["kind"], "singular_matrix");

  EXPECT_EQ(spawn("run --config '" + good.string() + "' --filter ekf --filter iekf" + out), kExitUsage);
  EXPECT_EQ(spawn("run --config '" + good.string() + "' --filter eskf-typo" + out), kExitUsage);
  EXPECT_EQ(spawn("simulate --config '" + (dir_ / "missing.json").string() + "'"), kExitUsage);
  EXPECT_EQ(spawn(""), kExitUsage);
  EXPECT_EQ(spawn("frobnicate"), kExitUsage);
}
