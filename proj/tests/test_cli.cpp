#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "koopdim/cli.hpp"
#include "koopdim/config.hpp"
#include "koopdim/error.hpp"
#include "koopdim/report.hpp"

using namespace koopdim;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("koopdim-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  // Runs the built binary; returns its exit status and fills stderr_.
  int invoke(const std::string& args) {
    fs::path err = dir_ / "stderr.txt";
    std::string cmd = std::string(KOOPDIM_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2> " +
                      err.string();
    int status = std::system(cmd.c_str());
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    stderr_ = ss.str();
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
  std::string stderr_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_F(CliTest, EntropyDoublingIsLogTwo) {
  auto cfg = write("e.ini", "system = doubling\npartition = dyadic:3\nn_max = 10\n");
  ASSERT_EQ(invoke("entropy --config " + cfg.string() + " --out " + (dir_ / "out").string()), 0) << stderr_;
  auto rows = read_csv(dir_ / "out" / "entropy.csv");
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_EQ(rows[0][0], "n");
  EXPECT_EQ(rows[0][1], "rate");
  EXPECT_EQ(rows[0][3], "increment");
  // the depth-n refinement of dyadic:3 is dyadic:(n+2): rate (n+2)/n log 2, increments log 2 after the first
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double n = static_cast<double>(i);
    EXPECT_NEAR(std::stod(rows[i][1]), (n + 2.0) / n * std::log(2.0), 1e-12);
    if (i > 1) EXPECT_NEAR(std::stod(rows[i][3]), std::log(2.0), 1e-12);
  }
  auto manifest = nlohmann::json::parse(slurp(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(manifest["experiment"], "entropy");
  EXPECT_EQ(manifest["exactness"]["rate"], "exact");
  EXPECT_EQ(manifest["exit_code"], 0);
}

TEST_F(CliTest, DmdBoundRotationIsEntropyZero) {
  auto cfg = write("d.ini", "system = rotation:golden\npartition = arcs:2\n");
  ASSERT_EQ(invoke("dmd-bound --config " + cfg.string() + " --out " + (dir_ / "out").string()), 0) << stderr_;
  auto rows = read_csv(dir_ / "out" / "dmd_bound.csv");
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0].back(), "verdict");
  EXPECT_EQ(rows[1].back(), "entropy-zero regime");
}

TEST_F(CliTest, DmdBoundDoublingHolds) {
  auto cfg = write("d.ini", "[dmd-bound]\nsystem = doubling\npartition = dyadic:3\neps = 0.1\n");
  EXPECT_EQ(invoke("dmd-bound --config " + cfg.string() + " --out " + (dir_ / "out").string()), 0) << stderr_;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "delta_construction.csv"));
}

TEST_F(CliTest, MalformedSystemExitsOne) {
  auto cfg = write("bad.ini", "system = doubling-ish\n");
  EXPECT_EQ(invoke("entropy --config " + cfg.string() + " --out " + (dir_ / "out").string()), 1);
  EXPECT_NE(stderr_.find("system"), std::string::npos) << stderr_;
  EXPECT_EQ(std::count(stderr_.begin(), stderr_.end(), '\n'), 1);
}

TEST_F(CliTest, UnknownKeyNamesField) {
  auto cfg = write("bad.ini", "sytem = doubling\n");
  EXPECT_EQ(invoke("entropy --config " + cfg.string() + " --out " + (dir_ / "out").string()), 1);
  EXPECT_NE(stderr_.find("sytem"), std::string::npos) << stderr_;
}

TEST_F(CliTest, MonteCarloNeedsSeedAndIsDeterministic) {
  auto cfg = write("mc.ini", "system = doubling\npartition = dyadic:1\nmode = monte-carlo\nsamples = 20000\nn_max = 4\n");
  EXPECT_EQ(invoke("entropy --config " + cfg.string() + " --out " + (dir_ / "a").string()), 1);
  ASSERT_EQ(invoke("entropy --config " + cfg.string() + " --seed 5 --out " + (dir_ / "a").string()), 0) << stderr_;
  ASSERT_EQ(invoke("entropy --config " + cfg.string() + " --seed 5 --out " + (dir_ / "b").string()), 0) << stderr_;
  EXPECT_EQ(slurp(dir_ / "a" / "entropy.csv"), slurp(dir_ / "b" / "entropy.csv"));
  auto rows = read_csv(dir_ / "a" / "entropy.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(std::abs(std::stod(rows[i][1]) - std::log(2.0)), 3.0 * std::stod(rows[i][4]) + 1e-12);
  }
}

TEST_F(CliTest, EmptySuiteExitsZero) {
  auto suite = write("empty.ini", "# nothing here\n");
  ASSERT_EQ(invoke("reproduce-all --config " + suite.string() + " --out " + (dir_ / "out").string()), 0) << stderr_;
  auto rows = read_csv(dir_ / "out" / "summary.csv");
  EXPECT_EQ(rows.size(), 1u);
}

TEST_F(CliTest, SuiteTinyEpsilonWarns) {
  auto suite = write("suite.ini",
                     "system = doubling\n"
                     "[tiny]\nexperiment = dmd-bound\npartition = dyadic:2\neps = 1e-6\n"
                     "[rates]\nexperiment = entropy\npartition = dyadic:2\nn_max = 4\n");
  int code = invoke("reproduce-all --config " + suite.string() + " --out " + (dir_ / "out").string());
  EXPECT_EQ(code, 0) << stderr_;
  auto rows = read_csv(dir_ / "out" / "summary.csv");
  ASSERT_EQ(rows.size(), 3u);
  auto manifest = nlohmann::json::parse(slurp(dir_ / "out" / "tiny" / "manifest.json"));
  EXPECT_FALSE(manifest["warnings"].empty());
  EXPECT_TRUE(fs::exists(dir_ / "out" / "rates" / "entropy.csv"));
}

TEST_F(CliTest, DelayShift) {
  auto cfg = write("s.ini", "system = shift\ndictionary = unit:0\nn = 4\norbit_n = 1,2,4,8,16\n");
  ASSERT_EQ(invoke("delay --config " + cfg.string() + " --out " + (dir_ / "out").string()), 0) << stderr_;
  auto rows = read_csv(dir_ / "out" / "delay.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][2], "5");
}

TEST_F(CliTest, AprShift) {
  auto cfg = write("a.ini", "system = shift\ndictionary = unit:0\nn_max = 16\ndelta = 0.5\n");
  ASSERT_EQ(invoke("apr --config " + cfg.string() + " --out " + (dir_ / "out").string()), 0) << stderr_;
  auto rows = read_csv(dir_ / "out" / "apr.csv");
  ASSERT_EQ(rows.size(), 17u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double n = std::stod(rows[i][0]);
    EXPECT_GE(std::stod(rows[i][1]), std::ceil(0.75 * n));
    EXPECT_LE(std::stod(rows[i][2]), n);
  }
}

TEST_F(CliTest, SpectralSkew) {
  auto cfg = write("sp.ini", "system = skew:golden\ndictionary = character:0,1\nk_max = 128\ngrid = 128\n");
  ASSERT_EQ(invoke("spectral --config " + cfg.string() + " --out " + (dir_ / "out").string()), 0) << stderr_;
  for (const char* f : {"autocorrelation.csv", "wiener.csv", "density.csv", "spectral_summary.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  auto rows = read_csv(dir_ / "out" / "wiener.csv");
  EXPECT_EQ(rows[0][0], "n");
  EXPECT_NEAR(std::stod(rows[4][1]), 0.25, 1e-15);
  auto summary = read_csv(dir_ / "out" / "spectral_summary.csv");
  EXPECT_EQ(summary[1][3], "continuous (ac+sc)");
}

TEST_F(CliTest, ContinuityDiagnostic) {
  auto cfg = write("l.ini", "kappa = 4\ntrials = 10\np = 2\neps = 0.1\n");
  EXPECT_EQ(invoke("lemma-2-2 --config " + cfg.string() + " --out " + (dir_ / "out").string()), 1);
  ASSERT_EQ(invoke("lemma-2-2 --config " + cfg.string() + " --seed 3 --out " + (dir_ / "out").string()), 0) << stderr_;
  EXPECT_EQ(read_csv(dir_ / "out" / "lemma_2_2.csv").size(), 11u);
}

TEST_F(CliTest, UnknownSubcommandExitsOne) { EXPECT_EQ(invoke("frobnicate"), 1); }

TEST(Config, ParsesSectionsCommentsAndQuotes) {
  std::istringstream in("# top\nsystem = baker  # trailing\n[apr]\npartition = \"grid:1,1 # not a comment\"\n");
  ConfigFile f = parse_config(in);
  ConfigSection m = f.merged("apr");
  EXPECT_EQ(m.require("system"), "baker");
  EXPECT_EQ(m.require("partition"), "grid:1,1 # not a comment");
}

TEST(Config, Errors) {
  std::istringstream dup("eps = 0.1\neps = 0.2\n");
  EXPECT_THROW(parse_config(dup), Error);
  ConfigSection s;
  s.values["eps"] = "-1";
  try {
    make_run_config(s, Experiment::Entropy);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigParse);
    EXPECT_NE(std::string(e.what()).find("eps"), std::string::npos);
  }
  ConfigSection mode;
  mode.values["mode"] = "approximate";
  EXPECT_THROW(make_run_config(mode, Experiment::Entropy), Error);
}

TEST(Config, SeedOverride) {
  ConfigSection s;
  s.values["seed"] = "4";
  EXPECT_EQ(*make_run_config(s, Experiment::Entropy, 9).seed, 9u);
  EXPECT_EQ(*make_run_config(s, Experiment::Entropy).seed, 4u);
}

TEST(OutDir, Precedence) {
  ::unsetenv("KOOPDIM_OUT");
  EXPECT_EQ(resolve_out_dir(std::nullopt, ""), fs::path("koopdim-out"));
  EXPECT_EQ(resolve_out_dir(std::nullopt, "cfg"), fs::path("cfg"));
  ::setenv("KOOPDIM_OUT", "env", 1);
  EXPECT_EQ(resolve_out_dir(std::nullopt, "cfg"), fs::path("env"));
  EXPECT_EQ(resolve_out_dir(std::string("flag"), "cfg"), fs::path("flag"));
  ::unsetenv("KOOPDIM_OUT");
}

TEST(Report, CsvAndNumbers) {
  CsvTable t({"a", "b"});
  t.add_row({std::string("x,y"), 0.5});
  t.add_row({std::int64_t{3}, std::nan("")});
  EXPECT_EQ(t.render(), "a,b\r\n\"x,y\",0.5\r\n3,nan\r\n");
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
}
