#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <regex>
#include <sstream>
#include <string>
#include <thread>

#include "fuzzysail/harness.hpp"
#include "fuzzysail/wire.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell, capturing stdout; stderr goes to `err`.
Result run_cli(const std::string& args, const fs::path& err = "/dev/null") {
  const std::string cmd =
      std::string("\"") + FUZZYSAIL_CLI_PATH + "\" " + args + " 2>\"" + err.string() + "\"";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fuzzysail_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path path(const std::string& name) const { return dir_ / name; }
  std::string q(const std::string& name) const { return "\"" + path(name).string() + "\""; }

  fs::path dir_;
};

TEST_F(Cli, RunWritesTraceAndSummary) {
  const auto r = run_cli("run --controller t1 --noise low --seed 1 --out " + q("trace.csv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("controller=t1 noise=low seed=1 completed=1"), std::string::npos);
  const auto trace = slurp(path("trace.csv"));
  EXPECT_EQ(trace.substr(0, trace.find('\n')), "t,heading,desired,error,rudder,wind_dir,x,y");
  const auto summary = slurp(path("trace.csv.summary.csv"));
  EXPECT_EQ(summary.substr(0, summary.find('\n')), fuzzysail::kSummaryHeader);
  EXPECT_EQ(count_lines(summary), 2u);
}

TEST_F(Cli, RunDualSurfaceUsesFixedMovement) {
  const auto r = run_cli("run --controller ds --param 25 --noise med --seed 7 --out " + q("ds.csv"));
  ASSERT_EQ(r.code, 0);
  // Same run in process with movement 5 and threshold 25.
  fuzzysail::DualSurfaceController ds(fuzzysail::FuzzySystem{}, {25.0, 5.0});
  const auto rec = fuzzysail::run_episode(ds, fuzzysail::EpisodeConfig{},
                                          fuzzysail::NoiseLevel::kMedium, 7);
  std::ostringstream expected;
  fuzzysail::write_trace_csv(expected, rec.trace);
  EXPECT_EQ(slurp(path("ds.csv")), expected.str());
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run_cli("run --controller it2 --param -1").code, 1);
  EXPECT_EQ(run_cli("run --controller it2").code, 1);
  EXPECT_EQ(run_cli("run --controller t1 --param 3").code, 1);
  EXPECT_EQ(run_cli("run --controller pid").code, 1);
  EXPECT_EQ(run_cli("run --controller t1 --noise extreme").code, 1);
  EXPECT_EQ(run_cli("run --controller t1 --bogus").code, 1);
  EXPECT_EQ(run_cli("").code, 1);
  EXPECT_EQ(run_cli("surface --controller pi").code, 1);
  EXPECT_EQ(run_cli("stats --a x.csv").code, 1);
}

TEST_F(Cli, HelpDocumentsEveryFlag) {
  const auto top = run_cli("--help");
  EXPECT_EQ(top.code, 0);
  for (const char* sub : {"run", "batch", "sweep", "surface", "stats", "serve"}) {
    EXPECT_NE(top.out.find(sub), std::string::npos) << sub;
  }
  const auto run = run_cli("run --help");
  EXPECT_EQ(run.code, 0);
  for (const char* flag : {"--controller", "--param", "--noise", "--seed", "--out", "--summary",
                           "--fuzzy-config", "--physics-config", "--ns-shared"}) {
    EXPECT_NE(run.out.find(flag), std::string::npos) << flag;
  }
  const auto sweep = run_cli("sweep --help");
  for (const char* flag : {"--runs", "--seed-base", "--out-dir", "--threads", "--noise"}) {
    EXPECT_NE(sweep.out.find(flag), std::string::npos) << flag;
  }
}

TEST_F(Cli, QuickSweepIsFastAndDeterministic) {
  const auto start = std::chrono::steady_clock::now();
  const auto a = run_cli("sweep --runs 3 --seed-base 11 --out-dir " + q("a"));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(a.code, 0);
  EXPECT_LT(secs, 60.0);
  const auto b = run_cli("sweep --runs 3 --seed-base 11 --threads 1 --out-dir " + q("b"));
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(a.out, b.out);
  for (const char* level : {"low", "med", "high"}) {
    const std::string table = std::string("table_") + level + ".csv";
    const std::string runs = std::string("runs_") + level + ".csv";
    const auto ta = slurp(path("a") / table);
    EXPECT_EQ(ta, slurp(path("b") / table));
    EXPECT_EQ(slurp(path("a") / runs), slurp(path("b") / runs));
    // Header plus the 15 table rows.
    EXPECT_EQ(count_lines(ta), 16u);
    EXPECT_EQ(count_lines(slurp(path("a") / runs)), 1u + 15u * 3u);
  }
}

TEST_F(Cli, SurfaceRowsAndBounds) {
  const auto t1 = run_cli("surface --controller t1");
  ASSERT_EQ(t1.code, 0);
  EXPECT_EQ(count_lines(t1.out), 130322u);
  ASSERT_EQ(run_cli("surface --controller it2 --param 20 --out " + q("it2.csv")).code, 0);
  std::ifstream in(path("it2.csv"));
  const auto table = fuzzysail::csv::read(in);
  ASSERT_EQ(table.rows.size(), 130321u);
  const auto col = table.column("output");
  for (const auto& row : table.rows) {
    const double v = fuzzysail::csv::parse_double(row[col]);
    ASSERT_GE(v, -60.0);
    ASSERT_LE(v, 60.0);
  }
}

TEST_F(Cli, BatchAndStats) {
  ASSERT_EQ(run_cli("batch --controller t1 --noise high --runs 5 --out " + q("t1.csv")).code, 0);
  ASSERT_EQ(
      run_cli("batch --controller it2 --param 5 --noise high --runs 5 --out " + q("it2.csv")).code,
      0);
  const auto r = run_cli("stats --a " + q("t1.csv") + " --b " + q("it2.csv") +
                         " --metric rmse --out " + q("stats.csv"));
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  const auto table = fuzzysail::csv::read(in);
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_EQ(table.rows[0][table.column("n_a")], "5");
  EXPECT_EQ(table.rows[0][table.column("exact")], "1");
  const double p = fuzzysail::csv::parse_double(table.rows[0][table.column("p")]);
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);
  EXPECT_EQ(slurp(path("stats.csv")), r.out);
}

TEST_F(Cli, StatsMissingFileIsARuntimeError) {
  const auto r = run_cli("stats --a " + q("missing.csv") + " --b " + q("missing.csv"),
                         path("err.txt"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(slurp(path("err.txt")).find("missing.csv"), std::string::npos);
}

TEST_F(Cli, ServeOneEpisode) {
  const auto err = path("serve.err");
  auto server = std::async(std::launch::async, [&] {
    return run_cli("serve --port 0 --noise low --seed 1 --out " + q("served.csv"), err);
  });
  // Wait for the announced port.
  std::uint16_t port = 0;
  const std::regex re("listening on [0-9.]+:([0-9]+)");
  for (int i = 0; i < 500 && port == 0; ++i) {
    std::smatch m;
    const auto text = slurp(err);
    if (std::regex_search(text, m, re)) port = static_cast<std::uint16_t>(std::stoi(m[1]));
    else std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ASSERT_NE(port, 0);
  fuzzysail::PIController pi;
  const auto end = fuzzysail::wire::run_client("127.0.0.1", port, pi);
  const auto r = server.get();
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(end.completed);
  fuzzysail::PIController local;
  const auto rec = fuzzysail::run_episode(local, fuzzysail::EpisodeConfig{},
                                          fuzzysail::NoiseLevel::kLow, 1);
  std::ostringstream expected;
  fuzzysail::write_trace_csv(expected, rec.trace);
  EXPECT_EQ(slurp(path("served.csv")), expected.str());
}

TEST_F(Cli, ConfigFilesAreHonoured) {
  const std::string cfg = std::string(FUZZYSAIL_SOURCE_DIR) + "/configs/table1_printed.cfg";
  const auto alt = run_cli("surface --controller t1 --fuzzy-config \"" + cfg + "\"");
  const auto def = run_cli("surface --controller t1");
  ASSERT_EQ(alt.code, 0);
  EXPECT_NE(alt.out, def.out);
  {
    std::ofstream phys(path("phys.cfg"));
    phys << "timeout 20\n";
  }
  const auto r = run_cli("run --controller t1 --physics-config " + q("phys.cfg"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("completed=0 time=20 "), std::string::npos) << r.out;
  {
    std::ofstream bad(path("bad.cfg"));
    bad << "warp_drive 9\n";
  }
  EXPECT_EQ(run_cli("run --controller t1 --physics-config " + q("bad.cfg")).code, 2);
}

}  // namespace
