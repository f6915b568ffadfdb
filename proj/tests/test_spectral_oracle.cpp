#include "slicegap/errors.hpp"
#include "slicegap/kernels.hpp"
#include "slicegap/spectral_oracle.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace slicegap;
using namespace slicegap::testing;

namespace {

DiscreteKernel two_state(double hold) {
  DiscreteKernel K;
  K.P.resize(2, 2);
  K.P << hold, 1 - hold, 1 - hold, hold;
  K.pi = Eigen::VectorXd::Constant(2, 0.5);
  return K;
}

DiscreteKernel rank_one(const Eigen::VectorXd& pi) {
  DiscreteKernel K;
  K.pi = pi;
  K.P = Eigen::VectorXd::Ones(pi.size()) * pi.transpose();
  return K;
}

}  // namespace

TEST(SpectralOracle, GridIndexing) {
  const Grid g({0.0, -1.0}, {2.0, 1.0}, {4, 2});
  EXPECT_EQ(g.size(), 8u);
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.5);
  EXPECT_EQ(g.locate(pt(0.6, 0.5)), 3u);
  EXPECT_DOUBLE_EQ(g.center(3)[0], 0.75);
  EXPECT_DOUBLE_EQ(g.center(3)[1], 0.5);
  EXPECT_EQ(g.locate(pt(3.0, 0.0)), g.size());
}

TEST(SpectralOracle, DiscretizedTarget) {
  const TargetDensity u1 = reference::unit_interval();
  const Eigen::VectorXd pi = discretize_target(u1, Grid({0.0}, {1.0}, {4}));
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(pi[i], 0.25, 1e-14);

  // Exact triangle cell masses: F(x) = (1 + x)^2 / 2 on [-1, 0].
  const TargetDensity tri = single_triangle();
  const int n = 20;
  const Grid g({-1.0}, {1.0}, {n});
  const Eigen::VectorXd p = discretize_target(tri, g);
  auto F = [](double x) { return x <= 0 ? 0.5 * (1 + x) * (1 + x) : 1.0 - 0.5 * (1 - x) * (1 - x); };
  const double h = 2.0 / n;
  for (int i = 0; i < n; ++i) EXPECT_NEAR(p[i], F(-1 + (i + 1) * h) - F(-1 + i * h), h * h);

  EXPECT_NEAR(discretize_target(reference::twin_gaussians(),
                                Grid::covering(reference::twin_gaussians(), {40, 40}))
                  .sum(),
              1.0, 1e-12);
}

TEST(SpectralOracle, UniformLevelMatrixIsRankOne) {
  const TargetDensity t1 = reference::twin_triangles();
  const DiscreteKernel K = build_level_matrix(t1, Grid::covering(t1, {400}), 0.5, LevelKernelKind::Uniform, 3.0);
  const double w = 1.0 / static_cast<double>(K.size());
  EXPECT_NEAR((K.P.array() - w).abs().maxCoeff(), 0.0, 1e-15);
  EXPECT_NEAR(op_norm_centered(K), 0.0, 1e-12);
}

TEST(SpectralOracle, SoShLevelMatrixSecondSingularValue) {
  const TargetDensity t1 = reference::twin_triangles();
  const DiscreteKernel K = build_level_matrix(t1, Grid::covering(t1, {2000}), 0.5, LevelKernelKind::SoSh, 3.0);
  EXPECT_NEAR(op_norm_centered_svd(K), op_norm_so_sh(level_set_1d(t1, 0.5), 3.0), 1e-6);
  EXPECT_GE(psd_check(K), -1e-12);
}

TEST(SpectralOracle, HitAndRunOnDiskIsASmallSet) {
  const TargetDensity d = disk(1.0);
  OracleOptions opt;
  const DiscreteKernel K = build_level_matrix(d, Grid::covering(d, {24, 24}), 0.5, LevelKernelKind::HitAndRun, 0.0, opt);
  require_stochastic(K, 1e-12);
  EXPECT_GT(K.P.rowwise().sum().minCoeff(), 0.0);
  const double c = 1.0 - har_level_norm_bound(d, 0.5);
  EXPECT_LE((c / static_cast<double>(K.size()) - K.P.array()).maxCoeff(), 5e-3);
  EXPECT_LE(op_norm_centered(K), har_level_norm_bound(d, 0.5) + 5e-3);
  EXPECT_GE(psd_check(K), -1e-10);
  EXPECT_LT(reversibility_check(K), 1e-15);
}

TEST(SpectralOracle, NormOfSmallChains) {
  for (double p : {0.0, 0.2, 0.5, 0.9}) {
    EXPECT_NEAR(op_norm_centered(two_state(p)), std::abs(2 * p - 1), 1e-14);
    EXPECT_NEAR(op_norm_centered_svd(two_state(p)), std::abs(2 * p - 1), 1e-14);
  }
  Eigen::VectorXd pi(3);
  pi << 0.2, 0.3, 0.5;
  const DiscreteKernel R = rank_one(pi);
  EXPECT_NEAR(op_norm_centered(R), 0.0, 1e-14);
  EXPECT_NEAR(spectral_gap(R), 1.0, 1e-14);
  EXPECT_NEAR(reversibility_check(R), 0.0, 1e-16);
  EXPECT_GE(psd_check(R), -1e-14);
}

TEST(SpectralOracle, ReversibilityNegativeControl) {
  DiscreteKernel K = two_state(0.3);
  K.P(0, 0) -= 0.1;
  K.P(0, 1) += 0.1;
  EXPECT_GT(reversibility_check(K), 1e-3);
  DiscreteKernel bad = two_state(0.3);
  bad.P(0, 0) += 0.1;
  EXPECT_THROW(require_stochastic(bad), InvariantViolationError);
}

TEST(SpectralOracle, UniformTargetHasUnitGap) {
  const TargetDensity u1 = reference::unit_interval();
  DiscreteSliceModel m(u1, Grid::covering(u1, {50}), LevelKernelKind::SoSh, 1.0);
  EXPECT_NEAR(1.0 - m.simple_norm(), 1.0, 1e-12);
  EXPECT_NEAR(1.0 - m.k_step_norm(1), 1.0, 1e-12);
  const Check mt = verify_mt_bound(u1, m.grid(), m, 1e-3);
  EXPECT_NEAR(mt.lhs, 1.0, 1e-9);
  EXPECT_NEAR(mt.rhs, 1.0, 1e-9);
}

TEST(SpectralOracle, UniformKindIsTight) {
  const TargetDensity t1 = reference::twin_triangles();
  OracleOptions opt;
  opt.powers = {1, 2, 3};
  DiscreteSliceModel m(t1, Grid::covering(t1, {400}), LevelKernelKind::Uniform, 3.0, opt);
  const GapReport r = verify_theorem_bounds(m, {1, 2, 3}, 1e-12);
  EXPECT_NEAR(r.gap_H, r.gap_U, 1e-12);
  for (const auto& [k, b] : r.beta) EXPECT_NEAR(b, 0.0, 1e-12);
  EXPECT_TRUE(r.all_pass());
  EXPECT_NEAR((m.k_step(3).P - m.simple().P).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  // With an exact inner kernel every k-step kernel is U itself.
  int k = 0;
  for (const auto& c : verify_power_bound(m, 3, 1e-12)) {
    ++k;
    EXPECT_NEAR(c.lhs, std::pow(m.simple_norm(), k), 1e-12);
    EXPECT_NEAR(c.rhs, m.simple_norm(), 1e-12);
  }
}

TEST(SpectralOracle, TwinTrianglesModel) {
  const TargetDensity t1 = reference::twin_triangles();
  const Grid grid = Grid::covering(t1, {600});
  OracleOptions opt;
  opt.powers = {1, 2, 3, 4, 5};
  DiscreteSliceModel m(t1, grid, LevelKernelKind::SoSh, 3.0, opt);
  EXPECT_TRUE(m.structured());
  EXPECT_NEAR(m.pi().sum(), 1.0, 1e-12);
  EXPECT_LT(reversibility_check(m.simple()), 1e-12);
  EXPECT_LT(reversibility_check(m.hybrid()), 1e-12);
  EXPECT_NEAR((m.k_step(1).P - build_full_matrix(t1, grid, LevelKernelKind::SoSh, 3.0).P).cwiseAbs().maxCoeff(), 0.0,
              1e-12);
  EXPECT_NEAR(op_norm_centered_svd(m.hybrid()), op_norm_centered_eig(m.hybrid()), 1e-9);
  const GapReport r = verify_theorem_bounds(m, {1, 2, 5}, 5e-3);
  EXPECT_TRUE(r.all_pass()) << gap_report_summary(r);
  EXPECT_LT(r.gap_H, r.gap_U);
  for (const auto& c : verify_monotonicity(m, 5, 1e-6)) EXPECT_TRUE(c.pass()) << c.name;
  for (const auto& c : verify_power_bound(m, 5, 1e-6)) EXPECT_TRUE(c.pass()) << c.name;
  EXPECT_TRUE(verify_mt_bound(t1, grid, m, 1e-3).pass());
  EXPECT_NEAR(verify_mt_bound(t1, grid, m, 1e-3).lhs, 0.45, 1e-9);
  EXPECT_GE(m.min_level_eigenvalue(), -1e-12);
}

TEST(SpectralOracle, TvBound) {
  const TargetDensity t1 = reference::twin_triangles();
  DiscreteSliceModel m(t1, Grid::covering(t1, {400}), LevelKernelKind::SoSh, 3.0);
  const DiscreteKernel& H = m.hybrid();
  for (const auto& c : verify_tv_bound(H, H.pi, 5, 0.0)) {
    EXPECT_NEAR(c.lhs, 0.0, 1e-12);
    EXPECT_NEAR(c.rhs, 0.0, 1e-12);
  }
  Eigen::Index top = 0;
  H.pi.maxCoeff(&top);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(H.pi.size());
  nu[top] = 1.0;
  for (const auto& c : verify_tv_bound(H, nu, 50, 1e-8)) EXPECT_TRUE(c.pass()) << c.name;
  const DiscreteKernel R = rank_one(H.pi);
  EXPECT_NEAR(verify_tv_bound(R, nu, 1, 0.0)[0].lhs, 0.0, 1e-12);
  EXPECT_THROW(verify_tv_bound(H, Eigen::VectorXd::Ones(3), 1, 0.0), ArgumentError);
}

TEST(SpectralOracle, BetaNumericAgreesWithClosedForm) {
  const TargetDensity t1 = reference::twin_triangles();
  const Grid grid = Grid::covering(t1, {2000});
  DiscreteSliceModel m(t1, grid, LevelKernelKind::SoSh, 3.0);
  double prev = 1.0;
  for (int k : {1, 2, 5, 10}) {
    EXPECT_NEAR(m.beta(k), beta_k_so_sh_closed_form(t1, 3.0, k), 2e-3) << "k=" << k;
    EXPECT_LE(m.beta(k), prev);
    prev = m.beta(k);
  }
  const BetaEstimate e = beta_k_numeric(t1, grid, LevelKernelKind::SoSh, 3.0, 1);
  EXPECT_NEAR(e.value, m.beta(1), 1e-15);
  EXPECT_GT(t1(e.argmax_point), 0.0);
}

TEST(SpectralOracle, CombinedKernelOnTwinGaussians) {
  const TargetDensity t2 = reference::twin_gaussians();
  const Grid grid = Grid::covering(t2, {20, 20});
  OracleOptions opt;
  opt.levels = 12;
  opt.powers = {1, 2};
  DiscreteSliceModel m(t2, grid, LevelKernelKind::Combined, 3.0, opt);
  EXPECT_GE(m.min_level_eigenvalue(), -1e-10);
  EXPECT_LT(reversibility_check(m.hybrid()), 1e-12);
  const GapReport r = verify_theorem_bounds(m, {1, 2}, 1e-2);
  EXPECT_TRUE(r.all_pass()) << gap_report_summary(r);
}

TEST(SpectralOracle, ReportCsv) {
  GapReport r;
  r.checks.push_back({"a", 1.0, 2.0, 0.0});
  r.checks.push_back({"b", 3.0, 2.0, 0.5});
  std::ostringstream os;
  write_gap_report_csv(os, r);
  EXPECT_EQ(os.str().substr(0, 26), "check,lhs,rhs,margin,pass\n");
  EXPECT_NE(os.str().find("b,3,2,-1,0"), std::string::npos);
  EXPECT_EQ(r.passed(), 1u);
  EXPECT_FALSE(r.all_pass());
}
