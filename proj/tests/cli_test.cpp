#include "cli.hpp"

#include "zacgm/bench.hpp"
#include "zacgm/io.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

namespace zac::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("zacgm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    write_file_atomic(path(name), text);
    return path(name);
  }

  int call(const std::vector<std::string>& args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

Matrix ten_points() {
  Matrix M(10, 2);
  for (Index i = 0; i < 10; ++i) M.row(i) << std::cos(0.7 * i) * (1 + 0.1 * i), std::sin(0.7 * i);
  return M;
}

TEST(ParseArgs, Match) {
  const Command c = parse_args({"match", "--a", "a.json", "--b", "b.json", "--k", "10", "--method", "zac"});
  EXPECT_EQ(c.verb, Verb::match);
  EXPECT_EQ(c.k, 10);
  EXPECT_EQ(c.method, "zac");
  EXPECT_EQ(c.a, "a.json");
}

TEST(ParseArgs, NegativeKIsAUsageError) {
  try {
    parse_args({"match", "--a", "a.json", "--b", "b.json", "--k", "-3"});
    FAIL() << "accepted k = -3";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("--k"), std::string::npos);
  }
}

TEST(ParseArgs, Bench) {
  const Command c = parse_args({"bench", "--suite", "outlier-sweep-rigid", "--seed", "42", "--out", "r.csv"});
  EXPECT_EQ(c.verb, Verb::bench);
  EXPECT_EQ(c.suite, "outlier-sweep-rigid");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.out, "r.csv");
}

TEST(ParseArgs, UnknownFlagNamesTheToken) {
  try {
    parse_args({"match", "--a", "a", "--b", "b", "--k", "2", "--frobnicate"});
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("--frobnicate"), std::string::npos);
  }
  EXPECT_THROW(parse_args({"match", "--b", "b", "--k", "2"}), UsageError);
  EXPECT_THROW(parse_args({"match", "--a", "a", "--b", "b"}), UsageError);
  EXPECT_THROW(parse_args({"frobnicate"}), UsageError);
  EXPECT_THROW(parse_args({}), UsageError);
}

TEST(ParseArgs, CanonicalRoundTrip) {
  const std::vector<std::vector<std::string>> lines{
      {"match", "--a", "x.json", "--b", "y.json", "--ratio", "0.35", "--lambda1", "10", "--removal", "off"},
      {"dgm", "--a", "x", "--b", "y", "--mode", "nonrigid", "--beta", "1.5", "--lambdaR", "0.2", "--timing"},
      {"bench", "--suite", "rotation-sweep", "--trials", "3", "--seed", "7"},
      {"verify", "--max-disturb", "4", "--out", "c.csv"}};
  for (const auto& line : lines) {
    const Command c = parse_args(line);
    EXPECT_EQ(parse_args(c.canonical()), c);
  }
}

TEST(ParseArgs, SeedFromEnvironment) {
  ::setenv("ZAC_SEED", "1234", 1);
  EXPECT_EQ(parse_args({"bench", "--suite", "condition-verify"}).seed, 1234u);
  EXPECT_EQ(parse_args({"bench", "--suite", "condition-verify", "--seed", "5"}).seed, 5u);
  ::unsetenv("ZAC_SEED");
  EXPECT_EQ(parse_args({"bench", "--suite", "condition-verify"}).seed, 42u);
}

TEST(ProblemConfig, LambdaOverride) {
  const Command c = parse_args({"match", "--a", "a", "--b", "b", "--k", "3", "--lambda1", "10"});
  const ProblemConfig pcfg = problem_config(c);
  EXPECT_EQ(pcfg.weights.lambda1, 10.0);
  EXPECT_EQ(pcfg.weights.lambda2, 1.0);
  EXPECT_EQ(pcfg.weights.lambda0, 1.0);
}

TEST_F(CliTest, MatchIdenticalSetsFullRecall) {
  const std::string pts = point_set_json(PointSet(ten_points()));
  const auto a = write("a.json", pts), b = write("b.json", pts);
  std::string gt = R"({"pairs": [)";
  for (int i = 0; i < 10; ++i) gt += (i ? "," : "") + std::string("[") + std::to_string(i) + "," + std::to_string(i) + "]";
  gt += "]}";
  const auto g = write("gt.json", gt);
  ASSERT_EQ(call({"match", "--a", a, "--b", b, "--gt", g, "--k", "10"}), 0) << err_.str();
  const auto doc = nlohmann::json::parse(out_.str());
  EXPECT_EQ(doc.at("metrics").at("recall"), 1.0);
  EXPECT_EQ(doc.at("pairs").size(), 10u);
  EXPECT_EQ(doc.at("k"), 10);
}

TEST_F(CliTest, MatchWritesFileAndIsDeterministic) {
  const auto a = write("a.json", point_set_json(PointSet(ten_points())));
  const auto b = write("b.json", point_set_json(PointSet(ten_points().array() * 2.0)));
  ASSERT_EQ(call({"match", "--a", a, "--b", b, "--ratio", "0.5", "--out", path("r1.json")}), 0);
  ASSERT_EQ(call({"match", "--a", a, "--b", b, "--ratio", "0.5", "--out", path("r2.json")}), 0);
  EXPECT_EQ(read_text_file(path("r1.json")), read_text_file(path("r2.json")));
  EXPECT_EQ(nlohmann::json::parse(read_text_file(path("r1.json"))).at("k"), 5);
}

TEST_F(CliTest, NaNInputExitsTwoNamingTheField) {
  const auto a = write("a.json", R"({"points": [[0, 0], [1, 0], [NaN, 2]]})");
  const auto b = write("b.json", point_set_json(PointSet(ten_points())));
  EXPECT_EQ(call({"match", "--a", a, "--b", b, "--k", "2"}), 2);
  EXPECT_NE(err_.str().find("points[2][0]"), std::string::npos);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(call({"match", "--a", path("missing.json"), "--b", path("missing.json"), "--k", "2"}), 2);
  EXPECT_EQ(call({"match", "--k", "2"}), 1);
  const auto a = write("a.json", "{broken");
  EXPECT_EQ(call({"match", "--a", a, "--b", a, "--k", "1"}), 2);
}

TEST_F(CliTest, VerifyCurveHasSixNonDecreasingRows) {
  ASSERT_EQ(call({"verify", "--max-disturb", "5", "--out", path("c.csv")}), 0) << err_.str();
  std::istringstream in(read_text_file(path("c.csv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "disturbed,min_objective");
  std::vector<double> values;
  while (std::getline(in, line)) values.push_back(std::stod(line.substr(line.find(',') + 1)));
  ASSERT_EQ(values.size(), 6u);
  for (std::size_t d = 1; d < values.size(); ++d) EXPECT_GE(values[d], values[d - 1]);
}

TEST_F(CliTest, DgmReportHasTransform) {
  const Matrix X = ten_points();
  const auto a = write("a.json", point_set_json(PointSet(X)));
  const auto b = write("b.json", point_set_json(PointSet((X.array() + 1.0).matrix())));
  ASSERT_EQ(call({"dgm", "--a", a, "--b", b, "--k", "10"}), 0) << err_.str();
  const auto doc = nlohmann::json::parse(out_.str());
  EXPECT_EQ(doc.at("transform").at("type"), "rigid");
  EXPECT_GE(doc.at("dgmIterations").get<int>(), 1);
}

TEST_F(CliTest, BenchCsvRowsPerTrialAndMetric) {
  ASSERT_EQ(call({"bench", "--suite", "outlier-sweep-rigid", "--trials", "1", "--out", path("r.csv")}), 0)
      << err_.str();
  const std::string csv = read_text_file(path("r.csv"));
  // 2 templates x 6 ratios x 1 trial x 3 metrics, plus the header.
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2 * 6 * 3 + 1);
  ASSERT_EQ(call({"bench", "--suite", "outlier-sweep-rigid", "--trials", "1", "--out", path("r2.csv")}), 0);
  EXPECT_EQ(read_text_file(path("r2.csv")), csv);
}

}  // namespace
}  // namespace zac::cli
