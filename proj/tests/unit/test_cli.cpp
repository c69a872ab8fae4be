#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using magidyn::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("magidyn_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) m[fs::relative(e.path(), root).string()] = slurp(e.path());
  return m;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(call({}).code, magidyn::cli::kExitUsage);
  EXPECT_EQ(call({"frobnicate"}).code, magidyn::cli::kExitUsage);
  EXPECT_EQ(call({"pmagi", "--hmc-steps", "abc"}).code, magidyn::cli::kExitUsage);
  EXPECT_EQ(call({"pmsp", "--mode", "XP", "--out", scratch("mode").string()}).code, magidyn::cli::kExitUsage);
  EXPECT_EQ(call({"--version"}).code, magidyn::cli::kExitOk);
}

TEST(Cli, MissingFileIsDataError) {
  const fs::path out = scratch("missing");
  EXPECT_EQ(call({"classify", "--draws", (out / "none.csv").string(), "--out", out.string()}).code,
            magidyn::cli::kExitData);
  EXPECT_EQ(call({"pmagi", "--data", (out / "none.csv").string(), "--out", out.string()}).code,
            magidyn::cli::kExitData);
}

TEST(Cli, GenerateCountsAndIdempotence) {
  const fs::path out = scratch("gen");
  const std::vector<std::string> args{"generate", "--regime", "stable_canonical", "--tmax", "2",
                                      "--dobs", "10", "--alpha", "0.0015",
                                      "--seeds", "1,2,3,4,5,6,7,8,9,10", "--out", out.string()};
  ASSERT_EQ(call(args).code, 0);
  const auto first = tree(out);
  EXPECT_EQ(first.size(), 10u);
  ASSERT_EQ(call(args).code, 0);
  EXPECT_EQ(tree(out), first);
}

TEST(Cli, GenerateRejectsDensityBeforeWriting) {
  const fs::path out = scratch("gen_bad");
  const Result r = call({"generate", "--dobs", "40,7", "--out", out.string()});
  EXPECT_EQ(r.code, magidyn::cli::kExitUsage);
  EXPECT_TRUE(fs::is_empty(out));
}

TEST(Cli, ClassifyAllStable) {
  const fs::path out = scratch("classify");
  {
    std::ofstream f(out / "draws.csv");
    f << "beta,rho,sigma\n2.6667,6,10\n2.7,5.9,10.1\n2.6,23,10\n";
  }
  ASSERT_EQ(call({"classify", "--draws", (out / "draws.csv").string(), "--out", out.string()}).code, 0);
  const auto j = nlohmann::json::parse(slurp(out / "classify" / "classify.json"));
  EXPECT_EQ(j.at("stability_probability"), 1.0);
  EXPECT_EQ(j.at("schema"), "magidyn.metrics/1");
}

TEST(Cli, MetricsSelfComparisonIsZero) {
  const fs::path out = scratch("metrics");
  {
    std::ofstream f(out / "traj.csv");
    f << "t,x,y,z\n0,1,2,3\n0.5,-1,0,2\n1,4,5,6\n";
  }
  const std::string p = (out / "traj.csv").string();
  ASSERT_EQ(call({"metrics", "--pred", p, "--truth", p, "--out", out.string()}).code, 0);
  const auto j = nlohmann::json::parse(slurp(out / "metrics" / "metrics.json"));
  for (const auto& v : j.at("smae").at("value")) EXPECT_EQ(v.get<double>(), 0.0);
  EXPECT_EQ(j.at("smae").at("excluded")[1], 1);
}

TEST(Cli, ConfigExpansion) {
  const fs::path dir = scratch("config");
  {
    std::ofstream f(dir / "run.cfg");
    f << "# comment\nhmc_steps = 11\nseeds=1,2\nburn-in=0.3\n";
  }
  const auto a = magidyn::cli::expand_config(
      {"generate", "--burn-in", "0.4", "--config", (dir / "run.cfg").string()});
  const std::vector<std::string> expect{"generate", "--hmc-steps", "11", "--seeds", "1", "--seeds", "2",
                                        "--burn-in", "0.4"};
  EXPECT_EQ(a, expect);
}

TEST(Cli, ConfigDrivesGenerate) {
  const fs::path out = scratch("config_gen");
  {
    std::ofstream f(out / "gen.cfg");
    f << "regime=chaotic_butterfly\ntmax=1\ndobs=5\nseeds=3,4\n";
  }
  ASSERT_EQ(call({"generate", "--config", (out / "gen.cfg").string(), "--out", (out / "o").string()}).code, 0);
  EXPECT_EQ(tree(out / "o").size(), 2u);
}

TEST(Cli, EnvironmentOutputRoot) {
  const fs::path out = scratch("env");
  ::setenv("MAGIDYN_OUT", out.string().c_str(), 1);
  const Result r = call({"generate", "--regime", "stable_canonical", "--tmax", "1", "--dobs", "5", "--seed", "1"});
  ::unsetenv("MAGIDYN_OUT");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(tree(out).size(), 1u);
}

TEST(Cli, PmagiWritesOutputs) {
  const fs::path out = scratch("pmagi");
  const std::vector<std::string> args{"pmagi", "--tmax", "1", "--dobs", "10", "--pilot-len", "0.5",
                                      "--pilot-hmc-steps", "21", "--hmc-steps", "21", "--leapfrog", "5",
                                      "--out", out.string(), "--name", "run"};
  const Result r = call(args);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"posterior.json", "trajectory.csv", "theta_draws.csv", "timing.json"})
    EXPECT_TRUE(fs::exists(out / "run" / f)) << f;
  const auto j = nlohmann::json::parse(slurp(out / "run" / "posterior.json"));
  EXPECT_EQ(j.at("schema"), "magidyn.posterior/1");
  const std::string first = slurp(out / "run" / "posterior.json");
  ASSERT_EQ(call(args).code, 0);
  EXPECT_EQ(slurp(out / "run" / "posterior.json"), first);
}

TEST(Cli, PmspSingleCheckpoint) {
  const fs::path out = scratch("pmsp");
  const Result r = call({"pmsp", "--tmax", "1", "--dobs", "10", "--mode", "LP", "--dt-pred", "0.25",
                         "--dt-step", "0.25", "--pilot-hmc-steps", "21", "--hmc-steps", "21",
                         "--leapfrog", "5", "--out", out.string(), "--name", "run"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(out / "run" / "checkpoints")) n += e.is_regular_file();
  EXPECT_EQ(n, 1u);
  EXPECT_TRUE(fs::exists(out / "run" / "pmsp.json"));
  EXPECT_TRUE(fs::exists(out / "run" / "prediction.csv"));
}

TEST(Cli, BenchRowsPerRun) {
  const fs::path out = scratch("bench");
  const Result r = call({"bench", "--method", "pmagi", "--regime", "stable_canonical,chaotic_butterfly",
                         "--seeds", "1,2", "--tmax", "1", "--dobs", "10", "--pilot-len", "0.5",
                         "--hmc-steps", "11", "--pilot-hmc-steps", "11", "--jobs", "2", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(out / "bench.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("run,method,regime", 0), 0u);
  std::set<std::string> runs;
  long rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    runs.insert(line.substr(0, line.find(',')));
  }
  EXPECT_EQ(runs.size(), 4u);
  EXPECT_GE(rows, 4);
}
