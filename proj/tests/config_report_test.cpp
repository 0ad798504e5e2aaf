#include "exrisk/config.hpp"
#include "exrisk/report.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "exrisk/errors.hpp"
#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;

using exrisk::ConfigError;
using exrisk::ExperimentConfig;
using exrisk::ExperimentResult;
using exrisk::format_g17;
using exrisk::parse_config_text;
using exrisk::parse_double;
using exrisk::Regime;
using exrisk::RiskRecord;
using exrisk::run_experiment;
using exrisk::serialize_config;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* kMinimalConfig = R"(
[problem]
noise.values = 1.0

[experiment]
grid = 256:4
regime = small
)";

TEST(Config, MinimalValidConfigParses) {
  const ExperimentConfig config = parse_config_text(kMinimalConfig);
  EXPECT_EQ(config.grid.size(), 1u);
  EXPECT_EQ(config.grid[0].n, 256u);
  EXPECT_EQ(config.grid[0].dim, 4u);
  EXPECT_EQ(config.degree, 0);
  EXPECT_EQ(config.trials, 100u);
  EXPECT_EQ(config.regime, Regime::kSmall);
  // Default target is 0 and the envelope defaults to sigma_max * radius.
  EXPECT_DOUBLE_EQ(config.problem.bound_a(), 1.0);
}

TEST(Config, FullRoundTrip) {
  const char* text = R"(
# full example
[problem]
target.breakpoints = 0 0.5 1
target.piece.0 = 0.1 0.4
target.piece.1 = 0.3
noise.family = piecewise_constant
noise.breakpoints = 0 0.25 1
noise.values = 0.5 0.25
noise.shape = uniform
density.family = piecewise_constant
density.breakpoints = 0 0.5 1
density.values = 1.5 0.5
bound_a = 2.0

[model]
degree = 1
partition = equal

[experiment]
grid = 512:8 1024:8
trials = 40
regime = mid
a_minus = 0.05
a_plus = 3
alpha = 0.02
seed = 99
threads = 2
)";
  const ExperimentConfig config = parse_config_text(text);
  EXPECT_EQ(config.degree, 1);
  EXPECT_EQ(config.seed, 99u);
  EXPECT_EQ(config.problem.noise_shape(), exrisk::NoiseShape::kUniform);
  // Canonical serialization parses back to the same canonical form.
  const std::string canonical = serialize_config(config);
  const ExperimentConfig reparsed = parse_config_text(canonical);
  EXPECT_EQ(serialize_config(reparsed), canonical);
}

TEST(Config, RegimeGuardRejection) {
  const char* text = R"(
[problem]
[experiment]
grid = 1024:1024
regime = mid
)";
  try {
    parse_config_text(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("regime"), std::string::npos);
  }
}

TEST(Config, DensityPositivityRejection) {
  const char* text = R"(
[problem]
density.family = piecewise_constant
density.breakpoints = 0 0.5 1
density.values = 2.0 0.0

[experiment]
grid = 256:4
regime = small
)";
  try {
    parse_config_text(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("positive"), std::string::npos);
  }
}

TEST(Config, ErrorsCarryLineNumbers) {
  try {
    parse_config_text("[problem]\nwhatever = 1\n[experiment]\ngrid = 16:2\nregime = small\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_config_text("[experiment]\ngrid = banana\n"), ConfigError);
  EXPECT_THROW(parse_config_text("key_outside = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[experiment]\ngrid = 16:2\ngrid = 32:2\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[unknown]\n"), ConfigError);
}

TEST(Report, SeventeenDigitRoundTrip) {
  exrisk::Rng rng(3);
  for (int rep = 0; rep < 2000; ++rep) {
    // Stretch across magnitudes, including negatives and tiny values.
    const double mag = std::pow(10.0, testutil::uniform_in(rng, -300.0, 300.0));
    const double v = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * mag * rng.uniform01();
    double back = 0.0;
    ASSERT_TRUE(parse_double(format_g17(v), back));
    std::uint64_t a = 0, b = 0;
    std::memcpy(&a, &v, sizeof(a));
    std::memcpy(&b, &back, sizeof(b));
    EXPECT_EQ(a, b) << format_g17(v);
  }
  double nan_back = 0.0;
  ASSERT_TRUE(parse_double(format_g17(exrisk::kNaN), nan_back));
  EXPECT_TRUE(std::isnan(nan_back));
}

TEST(Report, EmptyResultWritesHeadersOnly) {
  ExperimentResult result;
  result.config = ExperimentConfig{testutil::make_problem()};
  const std::string dir = (fs::temp_directory_path() / "exrisk_empty_out").string();
  fs::remove_all(dir);
  exrisk::emit_outputs(result, dir);
  const std::string trials = read_file(dir + "/trials.csv");
  EXPECT_EQ(trials, "n,D,r,trial,true_excess,empirical_excess,ratio,sup_dist,chi,degenerate\n");
  const std::string summary = read_file(dir + "/summary.csv");
  EXPECT_EQ(summary.find('\n'), summary.size() - 1);
}

TEST(Report, SingleTrialRowPopulated) {
  ExperimentConfig config{testutil::make_problem()};
  config.grid = {{128, 2}};
  config.trials = 1;
  config.regime = Regime::kSmall;
  const ExperimentResult result = run_experiment(config);
  const std::string dir = (fs::temp_directory_path() / "exrisk_single_out").string();
  fs::remove_all(dir);
  exrisk::emit_outputs(result, dir);
  const std::string trials = read_file(dir + "/trials.csv");
  std::size_t lines = 0;
  for (char c : trials) lines += c == '\n';
  EXPECT_EQ(lines, 2u);
  EXPECT_NE(trials.find("128,2,0,0,"), std::string::npos);
}

TEST(Report, DegenerateOnlyCellWritesNanCoverage) {
  std::vector<RiskRecord> records(5);
  for (auto& r : records) r.degenerate = true;
  const auto summary = exrisk::summarize_cell(16, 4, 0, 4.0, 0.015, 0.0, 0.01, records);
  EXPECT_EQ(summary.degenerate_count, 5u);
  EXPECT_TRUE(std::isnan(summary.cov_true[0]));
  EXPECT_TRUE(std::isnan(summary.mean_true));
}

TEST(Report, RunReportRoundTripAndDeterminism) {
  exrisk::Rng rng(31);
  ExperimentConfig config{testutil::make_problem(testutil::random_target(rng))};
  config.grid = {{64, 4}, {256, 4}};
  config.trials = 30;
  config.regime = Regime::kSmall;
  config.seed = 123;
  const ExperimentResult result = run_experiment(config);

  const std::string dir_a = (fs::temp_directory_path() / "exrisk_run_a").string();
  const std::string dir_b = (fs::temp_directory_path() / "exrisk_run_b").string();
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  exrisk::emit_outputs(result, dir_a, 1.0);
  exrisk::emit_outputs(run_experiment(config), dir_b, 2.0);

  // Byte-identical data files across reruns (the manifest carries timing).
  for (const char* name : {"config_echo.cfg", "trials.csv", "summary.csv", "ratio_vs_n.csv",
                           "coverage_vs_n.csv", "supnorm_rate.csv"}) {
    EXPECT_EQ(read_file(dir_a + "/" + name), read_file(dir_b + "/" + name)) << name;
  }

  // Summary regeneration from the stored records is byte-identical too.
  const std::string before = read_file(dir_a + "/summary.csv");
  const std::string coverage_before = read_file(dir_a + "/coverage_vs_n.csv");
  fs::remove(dir_a + "/summary.csv");
  exrisk::regenerate_summaries(dir_a);
  EXPECT_EQ(read_file(dir_a + "/summary.csv"), before);
  EXPECT_EQ(read_file(dir_a + "/coverage_vs_n.csv"), coverage_before);
}

}  // namespace
