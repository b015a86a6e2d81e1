#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("evonudge_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static int run(std::vector<std::string> args) {
    args.insert(args.begin(), "evonudge");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return evonudge::cli::dispatch(static_cast<int>(argv.size()), argv.data());
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  void small_suite() {
    ASSERT_EQ(run({"gen-suite", "--out", path("s.json"), "--seed", "7", "--size", "16", "--train", "4", "--validation",
                   "2", "--test", "4"}),
              0);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrors) {
  testing::internal::CaptureStdout();
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"gen-suite"}), 1);  // --out missing
  EXPECT_EQ(run({"gen-suite", "--out", path("x"), "--bogus", "1"}), 1);
  EXPECT_EQ(run({"run", "--help"}), 0);
  const std::string help = testing::internal::GetCapturedStdout();
  testing::internal::GetCapturedStderr();
  EXPECT_NE(help.find("--checkpoint"), std::string::npos);
}

TEST_F(Cli, GenSuiteWritesSuiteAndManifest) {
  ASSERT_EQ(run({"gen-suite", "--out", path("s.json"), "--seed", "7", "--size", "120"}), 0);
  const std::string suite = slurp(path("s.json"));
  EXPECT_FALSE(suite.empty());
  const std::string manifest = slurp(path("s.json.manifest.json"));
  EXPECT_NE(manifest.find("\"subcommand\": \"gen-suite\""), std::string::npos);
  EXPECT_NE(manifest.find("\"size\": \"120\""), std::string::npos);
  // The manifest alone reproduces the output.
  ASSERT_EQ(run({"gen-suite", "--config", path("s.json.manifest.json"), "--out", path("again.json")}), 0);
  EXPECT_EQ(slurp(path("again.json")), suite);
}

TEST_F(Cli, InformedRunNeedsCheckpoint) {
  small_suite();
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"run", "--suite", path("s.json"), "--variant", "IM", "--h", "2", "--out", path("r.csv")}), 2);
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("--checkpoint"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("r.csv")));
}

TEST_F(Cli, RunIsReproducible) {
  small_suite();
  const std::string suite_before = slurp(path("s.json"));
  std::vector<std::string> cmd = {"run",          "--suite", path("s.json"), "--population", "40", "--generations",
                                  "3",            "--seeds", "2",            "--timings",    "off", "--out"};
  auto a = cmd, b = cmd;
  a.push_back(path("a.csv"));
  b.push_back(path("b.csv"));
  b.insert(b.end(), {"--workers", "3"});
  testing::internal::CaptureStderr();
  ASSERT_EQ(run(a), 0);
  ASSERT_EQ(run(b), 0);
  testing::internal::GetCapturedStderr();
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_NE(slurp(path("a.csv")).find("problem_id,variant,h,seed"), std::string::npos);
  EXPECT_EQ(slurp(path("s.json")), suite_before);
}

TEST_F(Cli, ConfigFileAndOverrides) {
  small_suite();
  {
    std::ofstream cfg(path("cfg.json"));
    cfg << R"({"population": 30, "generations": 2, "seeds": 1, "timings": "off", "problems": ["g00001", "g00003"]})";
  }
  testing::internal::CaptureStderr();
  ASSERT_EQ(run({"run", "--suite", path("s.json"), "--config", path("cfg.json"), "--seeds", "2", "--out", path("r.csv")}), 0);
  testing::internal::GetCapturedStderr();
  const std::string csv = slurp(path("r.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 2);  // the flag wins over the config value
  const std::string manifest = slurp(path("r.csv.manifest.json"));
  EXPECT_NE(manifest.find("\"population\": \"30\""), std::string::npos);
  EXPECT_NE(manifest.find("\"seeds\": \"2\""), std::string::npos);

  {
    std::ofstream cfg(path("bad.json"));
    cfg << R"({"populaton": 30})";
  }
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"run", "--suite", path("s.json"), "--config", path("bad.json"), "--out", path("r2.csv")}), 2);
  EXPECT_NE(testing::internal::GetCapturedStderr().find("populaton"), std::string::npos);
}

TEST_F(Cli, DataErrors) {
  small_suite();
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"run", "--suite", path("missing.json"), "--out", path("r.csv")}), 2);
  EXPECT_EQ(run({"run", "--suite", path("s.json"), "--out", path("s.json")}), 2);
  EXPECT_EQ(run({"run", "--suite", path("s.json"), "--problems", "nope", "--out", path("r.csv")}), 2);
  {
    std::ofstream bad(path("bad.json"));
    bad << "[{";
  }
  EXPECT_EQ(run({"run", "--suite", path("bad.json"), "--out", path("r.csv")}), 2);
  testing::internal::GetCapturedStderr();
}

TEST_F(Cli, FullPipeline) {
  small_suite();
  testing::internal::CaptureStderr();
  ASSERT_EQ(run({"train", "--suite", path("s.json"), "--out", path("model.json"), "--max-epochs", "1", "--negative-pool",
                 "16", "--loss-negatives", "8", "--examples-per-step", "1", "--max-problems", "2"}),
            0);
  EXPECT_TRUE(fs::exists(path("model.json.log.csv")));
  EXPECT_TRUE(fs::exists(path("model.json.manifest.json")));
  ASSERT_EQ(run({"build-library", "--suite", path("s.json"), "--checkpoint", path("model.json"), "--budget", "2",
                 "--out", path("libs.json"), "--stats", path("libs.csv")}),
            0);
  EXPECT_NE(slurp(path("libs.json")).find("\"expr\""), std::string::npos);
  ASSERT_EQ(run({"bench", "--suite", path("s.json"), "--checkpoint", path("model.json"), "--methods", "GP,NUDGE,IM,EvoRnd-IM",
                 "--h", "1,2", "--population", "30", "--generations", "2", "--seeds", "1", "--budget", "2", "--out",
                 path("bench.csv"), "--library-stats", path("bench_libs.csv"), "--report", path("bench.txt")}),
            0);
  ASSERT_EQ(run({"report", "--results", path("bench.csv"), "--library-stats", path("bench_libs.csv"), "--out",
                 path("report.txt")}),
            0);
  ASSERT_EQ(run({"report", "--results", path("bench.csv"), "--format", "csv", "--out", path("report.csv")}), 0);
  testing::internal::GetCapturedStderr();
  const std::string report = slurp(path("report.txt"));
  for (const char* label : {"GP", "NUDGE", "EvoNUDGE-IM", "EvoRnd-IM"}) EXPECT_NE(report.find(label), std::string::npos);
  EXPECT_EQ(report, slurp(path("bench.txt")));
}
