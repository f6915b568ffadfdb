#pragma once

#include "slicegap/config.hpp"
#include "slicegap/diagnostics.hpp"
#include "slicegap/spectral_oracle.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace slicegap {

// Levels t_j = top * (j - 1/2) / count, j = 1..count, where top is the lowest
// component height (the top of the two-part range) for a bimodal target and
// the sup norm otherwise.
std::vector<double> probe_levels(const TargetDensity& target, int count);

// Second singular value of the discretized stepping-out/shrinkage level matrix
// against 1 - gamma_t. With flip_gamma_sign the expectation becomes 1 + gamma_t
// (fault injection hook; the checks must then fail).
std::vector<Check> norm_identity_checks(const TargetDensity& target, const Grid& grid, double w,
                                        const std::vector<double>& levels, double tol,
                                        bool flip_gamma_sign = false);

// Hit-and-run level matrices: entrywise domination of c * U_t with
// c = (2/sigma_d) vol/diam^d, and the operator norm bound.
std::vector<Check> har_level_checks(const TargetDensity& target, const Grid& grid,
                                    const std::vector<double>& levels, double tol,
                                    const OracleOptions& options = {});

// Combined level matrices: positive semi-definiteness and the operator norm bound.
std::vector<Check> combined_level_checks(const TargetDensity& target, const Grid& grid, double w,
                                         const std::vector<double>& levels, double tol, double psd_tol,
                                         const OracleOptions& options = {});

// |closed form - oracle| for each k, plus non-increase in k of both sequences.
std::vector<Check> beta_closed_form_checks(DiscreteSliceModel& model, const TargetDensity& target, double w,
                                           const std::vector<int>& ks, double tol);

// Detailed balance of the simple and hybrid (k = 1) oracle matrices.
std::vector<Check> reversibility_checks(DiscreteSliceModel& model, double tol);

// Histogram bins used by the sample based tests.
Grid diagnostic_bins(const TargetDensity& target);

// Stepping-out/shrinkage from the fixed point x at the fixed level t, compared
// with the closed-form mixture by Pearson chi-square.
ChiSquareResult fixed_level_test(const TargetDensity& target, double t, double x, double w, std::size_t n,
                                 std::uint64_t seed, int bins = 40);

// One sampler step from exact draws of pi, binned and compared with pi.
struct InvarianceRun {
  ChiSquareResult chi_square;
  DetailedBalanceResult detailed_balance;
};
InvarianceRun invariance_run(const TargetDensity& target, const SamplerConfig& sampler, std::size_t n,
                             std::uint64_t seed);

// Same, but the step skips the shrinkage membership test (negative control).
ChiSquareResult biased_invariance_run(const TargetDensity& target, double w, std::size_t n, std::uint64_t seed);

// Pairs from the deterministic cycle 0 -> 1 -> 2 -> 0 (negative control).
DetailedBalanceResult cyclic_detailed_balance(std::size_t n);

// Null calibration: chi-square p-values of exact pi samples across repetitions.
struct CalibrationRun {
  KsResult uniformity;
  int rejections = 0;
  int reps = 0;
};
CalibrationRun calibration_run(const TargetDensity& target, int reps, std::size_t n, std::uint64_t seed,
                               double alpha = 0.01);

// Chains started from pi restricted to the most probable bin; binned TV after
// each step against (1 - gap)^n ||d nu/d pi - 1|| plus `sigmas` sampling
// standard deviations.
std::vector<Check> empirical_tv_checks(const TargetDensity& target, const SamplerConfig& sampler, double gap,
                                       std::size_t chains, int steps, std::uint64_t seed, double sigmas = 3.0);

struct SuiteSection {
  std::string name;
  std::vector<Check> checks;
};

struct SuiteResult {
  std::vector<SuiteSection> sections;

  bool all_pass() const;
  std::size_t count() const;
  std::size_t passed() const;
  std::string table() const;
};

// Property suite over the configured target, or over the built-in targets
// when the config names none.
SuiteResult run_property_suite(const ExperimentConfig& config);

}  // namespace slicegap
