#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path workdir(const std::string& name) {
  const fs::path dir = fs::path(SLICEGAP_TEST_TMP) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CliResult run(const fs::path& dir, const std::string& args, const std::string& config) {
  const fs::path cfg = dir / "config.ini";
  std::ofstream(cfg) << config;
  const std::string cmd = std::string(SLICEGAP_CLI) + " " + args + " --config " + cfg.string() + " --out " +
                          (dir / "out").string() + " > " + (dir / "stdout").string() + " 2> " +
                          (dir / "stderr").string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(dir / "stdout");
  r.err = slurp(dir / "stderr");
  return r;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST(Cli, SampleWritesTraceWithHeader) {
  const fs::path dir = workdir("sample");
  const CliResult r = run(dir, "sample", "[target]\nreference = T1\n[run]\nn = 10\n");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string trace = slurp(dir / "out" / "trace.csv");
  EXPECT_EQ(trace.rfind("# config_hash=", 0), 0u);
  EXPECT_NE(trace.find(" seed=1\n"), std::string::npos);
  // Comment, column header and 11 states.
  EXPECT_EQ(count_lines(trace), 13);
  EXPECT_EQ(slurp(dir / "out" / "diagnostics.csv").rfind("# config_hash=", 0), 0u);
  EXPECT_FALSE(fs::exists(dir / "out" / "trace.csv.tmp"));
}

TEST(Cli, SameSeedGivesIdenticalTraces) {
  const fs::path a = workdir("det_a"), b = workdir("det_b");
  const std::string cfg = "[target]\nreference = T2\n[run]\nn = 200\nseed = 9\n";
  ASSERT_EQ(run(a, "sample", cfg).code, 0);
  ASSERT_EQ(run(b, "sample", cfg).code, 0);
  EXPECT_EQ(slurp(a / "out" / "trace.csv"), slurp(b / "out" / "trace.csv"));
  const fs::path c = workdir("det_c");
  ASSERT_EQ(run(c, "sample --seed 10", cfg).code, 0);
  EXPECT_NE(slurp(a / "out" / "trace.csv"), slurp(c / "out" / "trace.csv"));
}

TEST(Cli, ConfigErrorsExitTwoAndNameTheKey) {
  const CliResult r = run(workdir("bad_w"), "sample", "[sampler]\nw = 0\n");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("[sampler] w"), std::string::npos) << r.err;
  EXPECT_EQ(run(workdir("bad_key"), "gap", "[oracle]\ngrid = 3\n").code, 2);
  EXPECT_EQ(run(workdir("no_sub"), "", "").code, 2);
}

TEST(Cli, RuntimeErrorsExitThree) {
  const CliResult r = run(workdir("runaway"), "sample",
                    "[target]\nreference = U1\n[sampler]\nw = 0.0001\nmax_loop = 3\n[run]\nn = 5\n");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("step 1"), std::string::npos) << r.err;
}

TEST(Cli, GapPassesOnSmallTwinTriangleGrid) {
  const fs::path dir = workdir("gap");
  const CliResult r = run(dir, "gap", "[target]\nreference = T1\n[oracle]\ncells = 1000\nk_list = 1, 2, 5\nk_max = 5\n");
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const std::string csv = slurp(dir / "out" / "gap_report.csv");
  EXPECT_NE(csv.find("check,lhs,rhs,margin,pass"), std::string::npos);
  int passing = 0;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) passing += line.size() > 2 && line.substr(line.size() - 2) == ",1";
  EXPECT_GE(passing, 8);
  EXPECT_TRUE(fs::exists(dir / "out" / "gap_summary.txt"));
}

TEST(Cli, UniformKindIsTightAtEqualities) {
  const fs::path dir = workdir("gap_uniform");
  const CliResult r = run(dir, "gap",
                    "[target]\nreference = T1\n[sampler]\nkind = simple_slice\n[oracle]\ncells = 600\n"
                    "k_list = 1, 2\nk_max = 3\n");
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  std::istringstream in(slurp(dir / "out" / "gap_report.csv"));
  std::string line;
  int seen = 0;
  while (std::getline(in, line)) {
    if (line.rfind("gap_H<=gap_U", 0) == 0 || line.rfind("power_bound_k1,", 0) == 0 || line.rfind("monotone", 0) == 0) {
      std::stringstream ss(line);
      std::string name, lhs, rhs, margin;
      std::getline(ss, name, ',');
      std::getline(ss, lhs, ',');
      std::getline(ss, rhs, ',');
      std::getline(ss, margin, ',');
      EXPECT_NEAR(std::stod(margin), 0.0, 1e-10) << line;
      ++seen;
    }
  }
  EXPECT_GE(seen, 3);
}

TEST(Cli, ZeroToleranceExitsFour) {
  const CliResult r = run(workdir("gap_zero"), "gap",
                    "[target]\nreference = T1\n[oracle]\ncells = 600\nk_list = 1, 2\nk_max = 3\ntol = 0\n");
  EXPECT_EQ(r.code, 4) << r.out << r.err;
  EXPECT_NE(r.out.find("FAILED"), std::string::npos);
}

TEST(Cli, InjectedGammaSignFlipFailsNormIdentity) {
  const fs::path dir = workdir("verify_flip");
  const CliResult r = run(dir, "verify",
                    "[target]\nreference = T1\n[oracle]\ncells = 1200\nk_list = 1, 2\nk_max = 3\n"
                    "[verify]\nquick = true\ninject_gamma_sign_flip = true\n");
  EXPECT_EQ(r.code, 4) << r.out << r.err;
  EXPECT_NE(r.out.find("FAIL  norm_identity"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "out" / "verify_report.csv"));
}

TEST(Cli, DiagOnTwinTriangles) {
  const fs::path dir = workdir("diag");
  const CliResult r = run(dir, "diag", "[target]\nreference = T1\n[run]\nn = 5000\nchains = 2000\n[oracle]\ncells = 1000\n");
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const std::string csv = slurp(dir / "out" / "diagnostics.csv");
  EXPECT_NE(csv.find("invariance_chi2_p"), std::string::npos);
  EXPECT_NE(csv.find("empirical_tv_n50"), std::string::npos);
}

TEST(Cli, VerifyWithoutConfigRunsBuiltInTargets) {
  const fs::path dir = workdir("verify_default");
  const std::string cmd = std::string(SLICEGAP_CLI) + " verify --out " + (dir / "out").string() + " > " +
                          (dir / "stdout").string() + " 2>&1";
  // Full suite on both built-in targets.
  const int status = std::system(cmd.c_str());
  const std::string out = slurp(dir / "stdout");
  EXPECT_EQ(WEXITSTATUS(status), 0) << out;
  EXPECT_NE(out.find("[T1 oracle]"), std::string::npos);
  EXPECT_NE(out.find("[T2 oracle]"), std::string::npos);
}
