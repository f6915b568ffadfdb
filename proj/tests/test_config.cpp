#include "slicegap/config.hpp"
#include "slicegap/errors.hpp"

#include <gtest/gtest.h>

using namespace slicegap;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, EmptyUsesBuiltInDefaults) {
  const ExperimentConfig c = parse_config("");
  EXPECT_FALSE(c.target_given);
  EXPECT_EQ(c.target.name(), "T1");
  EXPECT_EQ(c.sampler.kind, SamplerKind::SteppingOutShrinkage);
  EXPECT_DOUBLE_EQ(c.sampler.w, 3.0);
  EXPECT_EQ(c.cells, std::vector<int>{2000});
  EXPECT_EQ(c.k_list, (std::vector<int>{1, 2, 5, 10, 20}));
  EXPECT_DOUBLE_EQ(c.x0[0], -1.0);
}

TEST(Config, TwoDimensionalDefaults) {
  const ExperimentConfig c = parse_config("[target]\nreference = T2\n");
  EXPECT_EQ(c.sampler.kind, SamplerKind::HarSoSh);
  EXPECT_EQ(c.oracle_kind, LevelKernelKind::Combined);
  EXPECT_EQ(c.cells, (std::vector<int>{40, 40}));
  EXPECT_EQ(c.oracle.levels, 32);
  EXPECT_DOUBLE_EQ(c.tol.theorem, 1e-2);
}

TEST(Config, ExplicitComponents) {
  const ExperimentConfig c = parse_config(
      "# two bumps\n"
      "[target]\nname = pair\n"
      "[target.component1]\nshape = gaussian\nmode = 0, 0\nheight = 1\nscale = 2\n"
      "[target.component2]\nshape = gaussian\nmode = 1.5, 0\nheight = 1\nscale = 1\n"
      "[sampler]\nkind = hit_and_run\n"
      "[run]\nn = 5\nseed = 42\nx0 = 0.1, 0.2\n");
  EXPECT_TRUE(c.target_given);
  EXPECT_EQ(c.target.dim(), 2);
  EXPECT_EQ(c.target.name(), "pair");
  EXPECT_EQ(c.oracle_kind, LevelKernelKind::HitAndRun);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_DOUBLE_EQ(c.x0[1], 0.2);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(config_error("[sampler]\nw = 0\n").find("w"), std::string::npos);
  EXPECT_NE(config_error("[sampler]\nw = -2\n").find("[sampler] w"), std::string::npos);
  EXPECT_NE(config_error("[sampler]\nspeed = 2\n").find("speed"), std::string::npos);
  EXPECT_NE(config_error("[extras]\n").find("extras"), std::string::npos);
  EXPECT_NE(config_error("[run]\nn = ten\n").find("[run] n"), std::string::npos);
  EXPECT_NE(config_error("[run]\nx0 = 1, 2\n").find("x0"), std::string::npos);
  EXPECT_NE(config_error("[run]\nx0 = 5\n").find("x0"), std::string::npos);
  EXPECT_NE(config_error("[target]\nreference = T7\n").find("reference"), std::string::npos);
  EXPECT_NE(config_error("[sampler]\nw = 0.5\n").find("w"), std::string::npos);
  EXPECT_NE(config_error("[run]\nn = 1\nn = 2\n").find("twice"), std::string::npos);
  EXPECT_NE(config_error("[output]\nformats = pdf\n").find("formats"), std::string::npos);
  EXPECT_NE(config_error("n = 2\n").find("outside"), std::string::npos);
}

TEST(Config, ToleranceOverrides) {
  const ExperimentConfig c = parse_config("[oracle]\ntol = 0\ntol_beta = 0.1\n");
  EXPECT_DOUBLE_EQ(c.tol.theorem, 0.0);
  EXPECT_DOUBLE_EQ(c.tol.tv, 0.0);
  EXPECT_DOUBLE_EQ(c.tol.beta, 0.1);
}

TEST(Config, HashTracksContent) {
  const auto a = parse_config("[run]\nn = 5\n");
  const auto b = parse_config("# comment\n[run]\n  n   =   5\n");
  const auto c = parse_config("[run]\nn = 6\n");
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_NE(a.hash, c.hash);
  EXPECT_EQ(hash_hex(a.hash).size(), 16u);
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigError); }
