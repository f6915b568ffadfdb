#include "slicegap/diagnostics.hpp"
#include "slicegap/errors.hpp"
#include "slicegap/kernels.hpp"
#include "slicegap/rng.hpp"
#include "slicegap/samplers.hpp"
#include "slicegap/spectral_oracle.hpp"
#include "slicegap/verify_suite.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace slicegap;
using namespace slicegap::testing;

namespace {

LineDensity line_of(const TargetDensity& target) {
  return [&target](double s) { return target(pt(s)); };
}

double uniform_cdf(double u) { return std::clamp(u, 0.0, 1.0); }

}  // namespace

TEST(Samplers, Names) {
  for (auto k : {SamplerKind::SimpleSlice, SamplerKind::SteppingOutShrinkage, SamplerKind::HitAndRunSlice,
                 SamplerKind::HarSoSh, SamplerKind::KStepHybrid}) {
    EXPECT_EQ(parse_sampler(sampler_name(k)), k);
  }
  EXPECT_THROW(parse_sampler("gibbs"), ArgumentError);
}

TEST(Samplers, SteppingOutCoversShortInterval) {
  const TargetDensity tri = single_triangle();
  const auto line = line_of(tri);
  Rng rng(1);
  // {rho >= 0.6} = [-0.4, 0.4], shorter than w = 1.
  for (int i = 0; i < 10000; ++i) {
    const Interval b = stepping_out(line, 0.1, 0.6, 1.0, rng);
    EXPECT_LE(b.lo, -0.4);
    EXPECT_GE(b.hi, 0.4);
  }
}

TEST(Samplers, SteppingOutCoverageOnTwinTriangles) {
  // From pos0 = -1 at t = 0.5 with w = 3 the bracket misses the right part
  // exactly when its first right end lands in the gap (-0.5, 0.625): the
  // covering probability is (w - delta)/w = 0.625.
  const TargetDensity t1 = reference::twin_triangles();
  const auto line = line_of(t1);
  Rng rng(2);
  const int n = 10000;
  int covered = 0;
  for (int i = 0; i < n; ++i) {
    const Interval b = stepping_out(line, -1.0, 0.5, 3.0, rng);
    EXPECT_LE(b.lo, -1.5);
    if (b.hi >= 1.375) ++covered;
  }
  EXPECT_NEAR(static_cast<double>(covered) / n, 0.625, 3.0 * std::sqrt(0.625 * 0.375 / n));
}

TEST(Samplers, SteppingOutSingleIterationWithWideStep) {
  const TargetDensity tri = single_triangle();
  Rng rng(3);
  int calls = 0;
  const LineDensity line = [&](double s) {
    ++calls;
    return tri(pt(s));
  };
  stepping_out(line, 0.0, 0.9, 100.0, rng);
  // One start check and one evaluation per side.
  EXPECT_EQ(calls, 3);
}

TEST(Samplers, SteppingOutRunaway) {
  const TargetDensity u1 = reference::unit_interval();
  Rng rng(4);
  EXPECT_THROW(stepping_out(line_of(u1), 0.5, 0.5, 1e-4, rng, 10), RunawayExpansionError);
}

TEST(Samplers, ShrinkageOnExactBracketIsUniform) {
  const TargetDensity u1 = reference::unit_interval();
  const auto line = line_of(u1);
  Rng rng(5);
  std::vector<double> ys;
  for (int i = 0; i < 20000; ++i) ys.push_back(shrinkage({0.0, 1.0}, 0.3, 0.5, line, rng));
  EXPECT_GT(ks_test(ys, uniform_cdf).p_value, 0.01);
}

TEST(Samplers, SteppingOutShrinkageMatchesClosedFormMixture) {
  const TargetDensity t1 = reference::twin_triangles();
  EXPECT_GT(fixed_level_test(t1, 0.5, -1.0, 3.0, 100000, 17).p_value, 0.01);
  EXPECT_GT(fixed_level_test(t1, 0.5, 1.0, 3.0, 100000, 18).p_value, 0.01);
  Rng rng(6);
  EXPECT_THROW(shrinkage({-2.0, 2.0}, 3.0, 0.5, line_of(t1), rng), ArgumentError);
}

TEST(Samplers, ShrinkageStall) {
  const TargetDensity tri = single_triangle();
  Rng rng(7);
  // Only a tiny neighbourhood of 0 is on the slice.
  EXPECT_THROW(shrinkage({-1e6, 1e6}, 0.0, 1.0 - 1e-12, line_of(tri), rng, 3), ShrinkageStallError);
}

TEST(Samplers, UnimodalLevelMoveIsExactUniform) {
  const TargetDensity tri = single_triangle();
  Rng rng(8);
  std::vector<double> ys;
  // {rho >= 0.5} = [-0.5, 0.5].
  for (int i = 0; i < 20000; ++i) {
    ys.push_back(level_move(tri, pt(0.2), 0.5, SamplerKind::SteppingOutShrinkage, rng, 0.3)[0]);
  }
  EXPECT_GT(ks_test(ys, [](double y) { return std::clamp(y + 0.5, 0.0, 1.0); }).p_value, 0.01);
}

TEST(Samplers, SimpleSliceOnUniformIsIid) {
  const TargetDensity u1 = reference::unit_interval();
  Rng rng(9);
  std::vector<double> ys;
  Point x = pt(0.9);
  for (int i = 0; i < 100000; ++i) {
    x = simple_slice_step(u1, x, rng);
    ys.push_back(x[0]);
  }
  EXPECT_GT(ks_test(ys, uniform_cdf).p_value, 0.01);
  const AcfEss a = acf_ess(ys, 200);
  EXPECT_GT(a.ess / ys.size(), 0.9);
}

TEST(Samplers, OneDimensionalHitAndRunIsSimpleSlice) {
  const TargetDensity t1 = reference::twin_triangles();
  Rng a(10), b(10);
  for (int i = 0; i < 100; ++i) {
    const Point x = pt(-1.2 + 0.02 * i);
    if (t1(x) <= 0.0) continue;
    const double t = 0.5 * t1(x);
    const Point ha = level_move(t1, x, t, SamplerKind::HitAndRunSlice, a);
    EXPECT_GE(t1(ha), t);
  }
  // Law check: one step from pi stays pi.
  SamplerConfig cfg;
  cfg.kind = SamplerKind::HitAndRunSlice;
  EXPECT_GT(invariance_run(t1, cfg, 50000, 11).chi_square.p_value, 0.01);
  (void)b;
}

TEST(Samplers, OneStepFromModeMatchesOracleRow) {
  const TargetDensity t1 = reference::twin_triangles();
  const Grid grid = Grid::covering(t1, {2000});
  DiscreteSliceModel model(t1, grid, LevelKernelKind::SoSh, 3.0);
  const DiscreteKernel& H = model.hybrid();
  const std::size_t cell = grid.locate(pt(-1.0));
  const auto it = std::find(H.cells.begin(), H.cells.end(), cell);
  ASSERT_NE(it, H.cells.end());
  const Eigen::Index row = it - H.cells.begin();
  const Point x0 = grid.center(cell);

  // Aggregate the oracle row onto 50 bins of 40 cells.
  const int bins = 50;
  std::vector<double> probs(bins, 0.0), counts(bins, 0.0);
  for (std::size_t j = 0; j < H.cells.size(); ++j) probs[H.cells[j] / 40] += H.P(row, static_cast<Eigen::Index>(j));
  SamplerConfig cfg;
  cfg.w = 3.0;
  Rng rng(12);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Point y = transition(t1, x0, cfg, rng);
    counts[grid.locate(y) / 40] += 1.0;
  }
  EXPECT_GT(chi_square_gof(counts, probs).p_value, 0.01);
}

TEST(Samplers, InvarianceFromExactDraws) {
  SamplerConfig cfg;
  cfg.w = 3.0;
  EXPECT_GT(invariance_run(reference::twin_triangles(), cfg, 100000, 13).chi_square.p_value, 0.01);
  SamplerConfig har;
  har.kind = SamplerKind::HarSoSh;
  har.w = 3.0;
  EXPECT_GT(invariance_run(reference::twin_gaussians(), har, 50000, 14).chi_square.p_value, 0.01);
  SamplerConfig hit;
  hit.kind = SamplerKind::HitAndRunSlice;
  EXPECT_GT(invariance_run(reference::twin_gaussians(), hit, 50000, 15).chi_square.p_value, 0.01);
}

TEST(Samplers, KStepWithOneInnerStepEqualsOneStep) {
  const TargetDensity t1 = reference::twin_triangles();
  SamplerConfig one;
  one.w = 3.0;
  SamplerConfig kstep = one;
  kstep.kind = SamplerKind::KStepHybrid;
  kstep.k_inner = 1;
  const Trace a = run_chain(t1, one, pt(-1.0), 500, 99);
  const Trace b = run_chain(t1, kstep, pt(-1.0), 500, 99);
  for (std::size_t i = 0; i < a.states.size(); ++i) EXPECT_EQ(a.states[i][0], b.states[i][0]);
}

TEST(Samplers, KStepWithExactInnerIgnoresK) {
  const TargetDensity t1 = reference::twin_triangles();
  SamplerConfig cfg;
  cfg.kind = SamplerKind::KStepHybrid;
  cfg.inner_kind = SamplerKind::SimpleSlice;
  cfg.k_inner = 7;
  EXPECT_GT(invariance_run(t1, cfg, 50000, 16).chi_square.p_value, 0.01);
}

TEST(Samplers, ManyInnerStepsApproachTheSimpleSliceRow) {
  const TargetDensity t1 = reference::twin_triangles();
  const Grid grid = Grid::covering(t1, {2000});
  OracleOptions opt;
  opt.powers = {50};
  DiscreteSliceModel model(t1, grid, LevelKernelKind::SoSh, 3.0, opt);
  const DiscreteKernel& U = model.simple();
  const std::size_t cell = grid.locate(pt(-1.0));
  const Eigen::Index row = std::find(U.cells.begin(), U.cells.end(), cell) - U.cells.begin();
  const int bins = 200;
  std::vector<double> probs(bins, 0.0), counts(bins, 0.0);
  for (std::size_t j = 0; j < U.cells.size(); ++j) probs[U.cells[j] / 10] += U.P(row, static_cast<Eigen::Index>(j));
  SamplerConfig cfg;
  cfg.kind = SamplerKind::KStepHybrid;
  cfg.k_inner = 50;
  cfg.w = 3.0;
  Rng rng(18);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[grid.locate(transition(t1, grid.center(cell), cfg, rng)) / 10] += 1.0;
  double tv = 0.0, noise = 0.0;
  for (int b = 0; b < bins; ++b) {
    tv += std::abs(counts[b] / n - probs[b]);
    noise += std::sqrt(probs[b] * (1 - probs[b]) / n);
  }
  tv *= 0.5;
  EXPECT_LT(tv, model.beta(50) + 3.0 * 0.5 * noise);
}

TEST(Samplers, ChainBasics) {
  const TargetDensity t1 = reference::twin_triangles();
  SamplerConfig cfg;
  cfg.w = 3.0;
  const Trace empty = run_chain(t1, cfg, pt(-1.0), 0, 1);
  ASSERT_EQ(empty.states.size(), 1u);
  EXPECT_EQ(empty.states[0][0], -1.0);

  const Trace a = run_chain(t1, cfg, pt(-1.0), 1000, 5);
  const Trace b = run_chain(t1, cfg, pt(-1.0), 1000, 5);
  std::ostringstream sa, sb;
  write_trace_csv(sa, a);
  write_trace_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(sa.str().substr(0, 15), "step,level,x1\n0");
  for (std::size_t i = 1; i < a.states.size(); ++i) {
    EXPECT_GT(a.levels[i], 0.0);
    EXPECT_LE(a.levels[i], t1(a.states[i - 1]));
    EXPECT_GE(t1(a.states[i]), a.levels[i]);
  }
}

TEST(Samplers, ChainMarginalAfterBurnIn) {
  const TargetDensity t1 = reference::twin_triangles();
  SamplerConfig cfg;
  cfg.w = 3.0;
  const Trace tr = run_chain(t1, cfg, pt(-1.0), 101000, 21);
  std::vector<Point> tail(tr.states.begin() + 1001, tr.states.end());
  const Grid bins = diagnostic_bins(t1);
  // The chain is autocorrelated (tau about 2), so thin to roughly independent draws.
  std::vector<Point> thinned;
  for (std::size_t i = 0; i < tail.size(); i += 5) thinned.push_back(tail[i]);
  EXPECT_GT(chi_square_invariance(thinned, bins, bin_probabilities(t1, bins)).p_value, 0.01);
}

TEST(Samplers, ValidationAndStepErrors) {
  const TargetDensity t1 = reference::twin_triangles();
  SamplerConfig narrow;
  narrow.w = 0.5;
  EXPECT_THROW(run_chain(t1, narrow, pt(-1.0), 10, 1), MembershipViolationError);
  SamplerConfig bad;
  bad.w = -1.0;
  EXPECT_THROW(validate_sampler(t1, bad), ArgumentError);
  SamplerConfig two_d;
  two_d.kind = SamplerKind::HarSoSh;
  two_d.w = 2.0;
  EXPECT_THROW(validate_sampler(reference::twin_gaussians(), two_d), OutOfClassError);
  SamplerConfig tiny;
  tiny.w = 1e-4;
  tiny.max_loop = 5;
  try {
    run_chain(reference::unit_interval(), tiny, pt(0.5), 10, 1);
    FAIL() << "expected a step error";
  } catch (const StepError& e) {
    EXPECT_EQ(e.step(), 1u);
  }
  EXPECT_THROW(transition(t1, pt(5.0), SamplerConfig{}, *std::make_unique<Rng>(1)), InvalidStateError);
}
