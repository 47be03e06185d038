#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with the given arguments, capturing stdout; stderr is discarded.
Result run_cli(const std::string& args) {
  const std::string cmd = std::string(CACHENET_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof(buf), pipe)) > 0;) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cachenet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, PlacementTable) {
  const auto r = run_cli("placement --K 5 --m-ratio 0.1,0.2");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out,
            "scheme,K,m_ratio,x_0,x_1,x_2,x_3,x_4,x_5\n"
            "centralized,5,0.1,0.5,0.1,0,0,0,0\n"
            "centralized,5,0.2,0,0.2,0,0,0,0\n");
}

TEST_F(CliTest, RateForOnePattern) {
  const auto r = run_cli("rate --K 9 --N 1000 --m-ratio 0.025 --pattern 3,3,3");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("0.025,nonadaptive,3-3-3,3,3.225,"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("0.025,simplified,3-3-3,3,3,"), std::string::npos) << r.out;
}

TEST_F(CliTest, RateNeedsSingleValue) {
  EXPECT_EQ(run_cli("rate --K 4 --m-ratio 0:0.1:0.5 --pattern 2,2").code, 1);
}

TEST_F(CliTest, InvalidConfigExitsWithOne) {
  EXPECT_EQ(run_cli("placement --K 13 --m-ratio 0.5").code, 1);
  EXPECT_EQ(run_cli("placement --K 4 --m-ratio 1.5").code, 1);
  EXPECT_EQ(run_cli("sweep --K 4 --m-ratio 0.5").code, 1);
  EXPECT_EQ(run_cli("placement --K 4 --m-ratio 0.5 --placement random").code, 1);
  EXPECT_EQ(run_cli("placement --bogus").code, 1);
  EXPECT_EQ(run_cli("").code, 1);
  const auto cfg = dir_ / "bad.json";
  std::ofstream(cfg) << R"({"K": 4, "m_ratio": 0.5, "colour": "red"})";
  EXPECT_EQ(run_cli("placement --config " + cfg.string()).code, 1);
  std::ofstream(dir_ / "broken.json") << "{not json";
  EXPECT_EQ(run_cli("placement --config " + (dir_ / "broken.json").string()).code, 1);
  EXPECT_EQ(run_cli("placement --config " + (dir_ / "missing.json").string()).code, 1);
}

TEST_F(CliTest, HelpExitsWithZero) {
  EXPECT_EQ(run_cli("--help").code, 0);
  EXPECT_EQ(run_cli("sweep --help").code, 0);
}

TEST_F(CliTest, DegenerateChainsAreNumericalFailures) {
  // One file and one cache: every chain is constant, so the convergence statistic is undefined.
  EXPECT_EQ(run_cli("simulate --K 1 --N 1 --r 0.5 --chains 2 --samples 10 --burn-in 0").code, 2);
}

TEST_F(CliTest, VerifyPasses) {
  const auto r = run_cli("verify --K 2 --N 2 --m-ratio 0.5 --F 2 --demands 1,2");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("0.5,adaptive,1-2,0.5,0.5,0.5,pass,"), std::string::npos) << r.out;
}

TEST_F(CliTest, VerifyNeedsFileLength) {
  EXPECT_EQ(run_cli("verify --K 2 --m-ratio 0.5 --demands 1,2").code, 1);
}

TEST_F(CliTest, SweepWritesArtifactsToDirectory) {
  const auto out = dir_ / "run";
  const auto r = run_cli("sweep --K 5 --N 100 --m-ratio 0.1:0.1:0.3 --r 0.7 --chains 2 --samples 50 --burn-in 10 --out " +
                         out.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  for (const char* name : {"placement.csv", "rates.csv", "bounds.csv", "samples.csv", "stats.csv", "diagnostics.csv"}) {
    EXPECT_TRUE(fs::exists(out / name)) << name;
  }
  EXPECT_EQ(read_file(out / "rates.csv").rfind("m_ratio,scheme,pattern,L,rate,bound,gap_reduction\n", 0), 0u);
  EXPECT_EQ(read_file(out / "samples.csv").rfind("sample_index,d_1,d_2,d_3,d_4,d_5\n", 0), 0u);
  EXPECT_EQ(read_file(out / "stats.csv").rfind("r,theta,rho_max,rho_avg,L_avg\n0.7,0,", 0), 0u);

  // Same seed, same bytes.
  const auto again = dir_ / "again";
  ASSERT_EQ(run_cli("sweep --K 5 --N 100 --m-ratio 0.1:0.1:0.3 --r 0.7 --chains 2 --samples 50 --burn-in 10 --jobs 4 --out " +
                    again.string())
                .code,
            0);
  for (const char* name : {"rates.csv", "samples.csv", "stats.csv"}) {
    EXPECT_EQ(read_file(out / name), read_file(again / name)) << name;
  }
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  const auto cfg = dir_ / "scenario.json";
  std::ofstream(cfg) << R"({"K": 9, "N": 1000, "m_ratio": 0.1, "pattern": [3, 3, 3], "delivery": "nonadaptive"})";
  const auto base = run_cli("rate --config " + cfg.string());
  ASSERT_EQ(base.code, 0);
  EXPECT_NE(base.out.find("0.1,nonadaptive,3-3-3,3,3.9,"), std::string::npos) << base.out;

  const auto over = run_cli("rate --config " + cfg.string() + " --m-ratio 0.025 --pattern 7,1,1 --delivery adaptive");
  ASSERT_EQ(over.code, 0);
  EXPECT_NE(over.out.find("0.025,adaptive,7-1-1,3,"), std::string::npos) << over.out;
  EXPECT_EQ(over.out.find("nonadaptive"), std::string::npos);

  // A different demand source on the command line replaces the file's pattern.
  const auto explicit_demand = run_cli("rate --config " + cfg.string() + " --demands 1,1,1,1,1,1,1,1,2");
  ASSERT_EQ(explicit_demand.code, 0);
  EXPECT_NE(explicit_demand.out.find(",nonadaptive,8-1,2,"), std::string::npos) << explicit_demand.out;
}

TEST_F(CliTest, SimulateWithEdgeListGraph) {
  const auto graph = dir_ / "star.txt";
  std::ofstream(graph) << "1 2\n1 3\n1 4\n";
  const auto r = run_cli("simulate --K 4 --N 50 --r 0.9 --chains 2 --samples 100 --burn-in 10 --graph " + graph.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("r,theta,rho_max,rho_avg,L_avg\n0.9,0,", 0), 0u) << r.out;
  EXPECT_EQ(run_cli("simulate --K 4 --N 50 --r 0.9 --graph " + (dir_ / "none.txt").string()).code, 1);
}

TEST_F(CliTest, ShippedConfigsRun) {
  for (const auto& entry : fs::directory_iterator(fs::path(CACHENET_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".json") continue;
    const auto r = run_cli("placement --config " + entry.path().string());
    EXPECT_EQ(r.code, 0) << entry.path();
  }
}
