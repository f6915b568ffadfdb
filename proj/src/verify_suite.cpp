#include "slicegap/verify_suite.hpp"

#include "slicegap/errors.hpp"
#include "slicegap/kernels.hpp"
#include "slicegap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace slicegap {

namespace {

std::string level_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_t%.4f", t);
  return buf;
}

bool bimodal(const TargetDensity& target) { return target.components().size() == 2; }

}  // namespace

std::vector<double> probe_levels(const TargetDensity& target, int count) {
  if (count < 1) throw ArgumentError("probe_levels: count must be positive");
  double top = target.sup_norm();
  if (bimodal(target)) top = std::min(target.components()[0].height, target.components()[1].height);
  std::vector<double> out;
  for (int j = 1; j <= count; ++j) out.push_back(top * (j - 0.5) / count);
  return out;
}

std::vector<Check> norm_identity_checks(const TargetDensity& target, const Grid& grid, double w,
                                        const std::vector<double>& levels, double tol, bool flip_gamma_sign) {
  std::vector<Check> out;
  for (double t : levels) {
    const DiscreteKernel K = build_level_matrix(target, grid, t, LevelKernelKind::SoSh, w);
    const double gamma = gamma_t(level_set_1d(target, t), w);
    const double expected = flip_gamma_sign ? 1.0 + gamma : 1.0 - gamma;
    out.push_back({"norm_identity" + level_tag(t), std::abs(op_norm_centered(K) - expected), 0.0, tol});
  }
  return out;
}

std::vector<Check> har_level_checks(const TargetDensity& target, const Grid& grid, const std::vector<double>& levels,
                                    double tol, const OracleOptions& options) {
  std::vector<Check> out;
  for (double t : levels) {
    const DiscreteKernel K = build_level_matrix(target, grid, t, LevelKernelKind::HitAndRun, 0.0, options);
    const double bound = har_level_norm_bound(target, t);
    const double floor_weight = (1.0 - bound) / static_cast<double>(K.size());
    const double violation = (floor_weight - K.P.array()).maxCoeff();
    out.push_back({"har_small_set" + level_tag(t), violation, 0.0, tol});
    out.push_back({"har_norm_bound" + level_tag(t), op_norm_centered(K), bound, tol});
  }
  return out;
}

std::vector<Check> combined_level_checks(const TargetDensity& target, const Grid& grid, double w,
                                         const std::vector<double>& levels, double tol, double psd_tol,
                                         const OracleOptions& options) {
  std::vector<Check> out;
  for (double t : levels) {
    const DiscreteKernel K = build_level_matrix(target, grid, t, LevelKernelKind::Combined, w, options);
    out.push_back({"combined_psd" + level_tag(t), -psd_check(K), 0.0, psd_tol});
    out.push_back({"combined_norm_bound" + level_tag(t), op_norm_centered(K), combined_norm_bound(target, t), tol});
  }
  return out;
}

std::vector<Check> beta_closed_form_checks(DiscreteSliceModel& model, const TargetDensity& target, double w,
                                           const std::vector<int>& ks, double tol) {
  std::vector<Check> out;
  std::vector<int> sorted = ks;
  std::sort(sorted.begin(), sorted.end());
  double prev_closed = 0.0, prev_numeric = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const int k = sorted[i];
    const double closed = beta_k_so_sh_closed_form(target, w, k);
    const double numeric = model.beta(k);
    const std::string suffix = "_k" + std::to_string(k);
    out.push_back({"beta_closed_vs_oracle" + suffix, std::abs(closed - numeric), 0.0, tol});
    if (i > 0) {
      out.push_back({"beta_closed_nonincreasing" + suffix, closed, prev_closed, 1e-12});
      out.push_back({"beta_oracle_nonincreasing" + suffix, numeric, prev_numeric, 1e-12});
    }
    prev_closed = closed;
    prev_numeric = numeric;
  }
  return out;
}

std::vector<Check> reversibility_checks(DiscreteSliceModel& model, double tol) {
  return {{"reversibility_simple", reversibility_check(model.simple()), 0.0, tol},
          {"reversibility_hybrid", reversibility_check(model.hybrid()), 0.0, tol}};
}

Grid diagnostic_bins(const TargetDensity& target) {
  const std::vector<int> counts = target.dim() == 1 ? std::vector<int>{60} : std::vector<int>(target.dim(), 12);
  return Grid::covering(target, counts, 1e-3);
}

ChiSquareResult fixed_level_test(const TargetDensity& target, double t, double x, double w, std::size_t n,
                                 std::uint64_t seed, int bins) {
  if (target.dim() != 1) throw ArgumentError("fixed_level_test needs a one dimensional target");
  if (bins < 2) throw ArgumentError("fixed_level_test needs at least two bins");
  const LevelSet1D ls = level_set_1d(target, t);
  const LevelMixture mix = so_sh_level_kernel_measure(make_so_sh_level_kernel(ls, w), x);
  const double lo = ls.parts.lower(), hi = ls.parts.upper();
  const double width = (hi - lo) / bins;
  std::vector<double> probs(bins), counts(bins, 0.0);
  for (int b = 0; b < bins; ++b) probs[b] = mix.probability(lo + b * width, lo + (b + 1) * width);

  Rng rng(seed);
  const Point x0 = Point::Constant(1, x);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = level_move(target, x0, t, SamplerKind::SteppingOutShrinkage, rng, w)[0];
    const int b = static_cast<int>(std::floor((y - lo) / width));
    if (b < 0 || b >= bins) return {std::numeric_limits<double>::infinity(), bins - 1, 0.0};
    counts[b] += 1.0;
  }
  return chi_square_gof(counts, probs);
}

InvarianceRun invariance_run(const TargetDensity& target, const SamplerConfig& sampler, std::size_t n,
                             std::uint64_t seed) {
  const Grid bins = diagnostic_bins(target);
  const std::vector<double> probs = bin_probabilities(target, bins);
  Rng rng(seed);
  std::vector<Point> outputs;
  std::vector<std::pair<Point, Point>> pairs;
  outputs.reserve(n);
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point x0 = sample_target_exact(target, rng);
    Point x1 = transition(target, x0, sampler, rng);
    outputs.push_back(x1);
    pairs.emplace_back(std::move(x0), std::move(x1));
  }
  return {chi_square_invariance(outputs, bins, probs), detailed_balance_test(pairs, bins)};
}

ChiSquareResult biased_invariance_run(const TargetDensity& target, double w, std::size_t n, std::uint64_t seed) {
  if (target.dim() != 1) throw ArgumentError("biased_invariance_run needs a one dimensional target");
  const Grid bins = diagnostic_bins(target);
  const std::vector<double> probs = bin_probabilities(target, bins);
  Rng rng(seed);
  std::vector<Point> outputs;
  outputs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point x0 = sample_target_exact(target, rng);
    const double t = target(x0) * (1.0 - rng.uniform());
    const LineDensity line = [&](double s) { return target(Point::Constant(1, s)); };
    const Interval bracket = stepping_out(line, x0[0], t, w, rng);
    // The first proposal is accepted whether or not it lies on the slice.
    outputs.push_back(Point::Constant(1, rng.uniform(bracket.lo, bracket.hi)));
  }
  return chi_square_invariance(outputs, bins, probs);
}

DetailedBalanceResult cyclic_detailed_balance(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(i % 3, (i + 1) % 3);
  return detailed_balance_counts(pairs);
}

CalibrationRun calibration_run(const TargetDensity& target, int reps, std::size_t n, std::uint64_t seed,
                               double alpha) {
  if (reps < 1) throw ArgumentError("calibration_run needs at least one repetition");
  const Grid bins = diagnostic_bins(target);
  const std::vector<double> probs = bin_probabilities(target, bins);
  std::vector<double> pvalues;
  CalibrationRun r;
  r.reps = reps;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    std::vector<Point> xs;
    xs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) xs.push_back(sample_target_exact(target, rng));
    const double p = chi_square_invariance(xs, bins, probs).p_value;
    if (p < alpha) ++r.rejections;
    pvalues.push_back(p);
  }
  r.uniformity = ks_test(pvalues, [](double u) { return std::clamp(u, 0.0, 1.0); });
  return r;
}

std::vector<Check> empirical_tv_checks(const TargetDensity& target, const SamplerConfig& sampler, double gap,
                                       std::size_t chains, int steps, std::uint64_t seed, double sigmas) {
  const Grid bins = diagnostic_bins(target);
  const std::vector<double> probs = bin_probabilities(target, bins);
  const auto top = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end() - 1) - probs.begin());
  const double l2 = std::sqrt(1.0 / probs[top] - 1.0);

  Rng rng(seed);
  std::vector<Point> states;
  states.reserve(chains);
  while (states.size() < chains) {
    Point x = sample_target_exact(target, rng);
    if (bins.locate(x) == top) states.push_back(std::move(x));
  }
  double sigma = 0.0;
  for (double p : probs) sigma += std::sqrt(p * (1.0 - p) / static_cast<double>(chains));
  sigma *= 0.5;

  std::vector<Check> out;
  for (int n = 1; n <= steps; ++n) {
    for (auto& x : states) x = transition(target, x, sampler, rng);
    BinnedHistogram hist(bins);
    hist.add_all(states);
    const double bound = std::pow(1.0 - gap, n) * l2 + sigmas * sigma;
    out.push_back({"empirical_tv_n" + std::to_string(n), tv_on_grid(hist, probs), bound, 0.0});
  }
  return out;
}

bool SuiteResult::all_pass() const { return passed() == count(); }

std::size_t SuiteResult::count() const {
  std::size_t n = 0;
  for (const auto& s : sections) n += s.checks.size();
  return n;
}

std::size_t SuiteResult::passed() const {
  std::size_t n = 0;
  for (const auto& s : sections) {
    n += static_cast<std::size_t>(std::count_if(s.checks.begin(), s.checks.end(), [](const Check& c) { return c.pass(); }));
  }
  return n;
}

std::string SuiteResult::table() const {
  std::ostringstream os;
  char buf[256];
  for (const auto& s : sections) {
    os << "[" << s.name << "]\n";
    for (const auto& c : s.checks) {
      std::snprintf(buf, sizeof buf, "  %s  %-36s lhs=%-13.6g rhs=%-13.6g tol=%.1e\n", c.pass() ? "PASS" : "FAIL",
                    c.name.c_str(), c.lhs, c.rhs, c.tolerance);
      os << buf;
    }
  }
  os << passed() << " of " << count() << " checks passed\n";
  return os.str();
}

namespace {

struct SuiteTarget {
  TargetDensity target;
  double w;
  LevelKernelKind kind;
  std::vector<int> cells;
  OracleOptions oracle;
  std::vector<int> k_list;
  int k_max;
  Tolerances tol;
};

SuiteTarget builtin(const TargetDensity& target, bool quick) {
  SuiteTarget s{target, reference::default_width(target.name()), LevelKernelKind::SoSh, {}, {}, {}, 10, {}};
  if (target.dim() == 1) {
    s.cells = {quick ? 1200 : 2000};
    s.k_list = {1, 2, 5, 10, 20};
  } else {
    s.kind = LevelKernelKind::Combined;
    s.cells = quick ? std::vector<int>{20, 20} : std::vector<int>{40, 40};
    s.oracle.levels = quick ? 16 : 32;
    s.k_list = {1, 2, 5};
    s.k_max = 5;
    s.tol.theorem = 1e-2;
  }
  return s;
}

SuiteTarget from_config(const ExperimentConfig& c) {
  return {c.target, c.sampler.w, c.oracle_kind, c.cells, c.oracle, c.k_list, c.k_max, c.tol};
}

SamplerKind sampler_for(LevelKernelKind kind) {
  switch (kind) {
    case LevelKernelKind::Uniform: return SamplerKind::SimpleSlice;
    case LevelKernelKind::SoSh: return SamplerKind::SteppingOutShrinkage;
    case LevelKernelKind::HitAndRun: return SamplerKind::HitAndRunSlice;
    case LevelKernelKind::Combined: return SamplerKind::HarSoSh;
  }
  return SamplerKind::SimpleSlice;
}

void run_target(const SuiteTarget& s, const ExperimentConfig& config, SuiteResult& result) {
  const TargetDensity& target = s.target;
  const bool quick = config.verify_quick;
  const std::string& name = target.name();

  OracleOptions opt = s.oracle;
  for (int k : s.k_list) opt.powers.push_back(k);
  for (int k = 1; k <= s.k_max; ++k) opt.powers.push_back(k);
  const Grid grid = Grid::covering(target, s.cells, config.eps_cut);
  DiscreteSliceModel model(target, grid, s.kind, s.w, opt);

  SuiteSection oracle{name + " oracle", {}};
  GapReport report = verify_theorem_bounds(model, s.k_list, s.tol.theorem, s.tol.psd);
  oracle.checks = report.checks;
  auto append = [&](SuiteSection& sec, const std::vector<Check>& more) {
    sec.checks.insert(sec.checks.end(), more.begin(), more.end());
  };
  append(oracle, verify_monotonicity(model, s.k_max, s.tol.monotone));
  append(oracle, verify_power_bound(model, s.k_max, s.tol.monotone));
  oracle.checks.push_back(verify_mt_bound(target, grid, model, s.tol.mira_tierney));
  append(oracle, reversibility_checks(model, s.tol.reversibility));

  const std::vector<double> levels = probe_levels(target, target.dim() == 1 ? 20 : 5);
  if (target.dim() == 1 && s.kind == LevelKernelKind::SoSh) {
    std::vector<int> ks;
    for (int k : {1, 2, 5, 10}) ks.push_back(k);
    append(oracle, beta_closed_form_checks(model, target, s.w, ks, s.tol.beta));
    append(oracle, norm_identity_checks(target, grid, s.w, levels, s.tol.norm_identity, config.inject_gamma_sign_flip));
  }
  if (target.dim() == 2) {
    append(oracle, har_level_checks(target, grid, levels, s.tol.level_bound, s.oracle));
    if (s.kind == LevelKernelKind::Combined) {
      append(oracle, combined_level_checks(target, grid, s.w, levels, s.tol.level_bound, s.tol.psd, s.oracle));
    }
  }
  result.sections.push_back(std::move(oracle));

  SuiteSection sampling{name + " sampling", {}};
  const std::size_t n = quick ? 20000 : 100000;
  SamplerConfig sampler;
  sampler.kind = sampler_for(s.kind);
  sampler.inner_kind = sampler.kind;
  sampler.w = s.w;
  const double alpha = 0.01;
  if (target.dim() == 1 && s.kind == LevelKernelKind::SoSh && bimodal(target)) {
    const double t = 0.5 * levels.back();
    const double x = target.components()[0].mode[0];
    const ChiSquareResult fixed = fixed_level_test(target, t, x, s.w, n, derive_seed(config.seed, 11));
    sampling.checks.push_back({"fixed_level_chi2_p", alpha, fixed.p_value, 0.0});
  }
  const InvarianceRun inv = invariance_run(target, sampler, n, derive_seed(config.seed, 12));
  sampling.checks.push_back({"invariance_chi2_p", alpha, inv.chi_square.p_value, 0.0});
  sampling.checks.push_back({"detailed_balance_exceedances", static_cast<double>(inv.detailed_balance.exceedances),
                             0.0, 0.0});
  if (target.dim() == 1) {
    const int reps = quick ? 100 : 200;
    const CalibrationRun cal = calibration_run(target, reps, 2000, derive_seed(config.seed, 13), alpha);
    sampling.checks.push_back({"calibration_ks_p", alpha, cal.uniformity.p_value, 0.0});
    // Rejections at level alpha stay within three binomial deviations.
    const double mean = alpha * reps;
    sampling.checks.push_back(
        {"calibration_rejections", static_cast<double>(cal.rejections), mean + 3.0 * std::sqrt(mean * (1 - alpha)), 0.0});
  }
  result.sections.push_back(std::move(sampling));
}

}  // namespace

SuiteResult run_property_suite(const ExperimentConfig& config) {
  SuiteResult result;
  std::vector<SuiteTarget> targets;
  if (config.target_given) {
    targets.push_back(from_config(config));
  } else {
    targets.push_back(builtin(reference::twin_triangles(), config.verify_quick));
    targets.push_back(builtin(reference::twin_gaussians(), config.verify_quick));
  }
  for (const auto& s : targets) run_target(s, config, result);

  SuiteSection negative{"negative controls", {}};
  const TargetDensity t1 = reference::twin_triangles();
  const double w1 = reference::default_width("T1");
  const std::size_t n = config.verify_quick ? 20000 : 100000;
  const ChiSquareResult biased = biased_invariance_run(t1, w1, n, derive_seed(config.seed, 21));
  negative.checks.push_back({"biased_shrinkage_rejected", biased.p_value, 1e-6, 0.0});
  const DetailedBalanceResult cyc = cyclic_detailed_balance(30000);
  negative.checks.push_back({"cyclic_chain_flagged", 0.5, static_cast<double>(cyc.exceedances), 0.0});
  const Grid g1 = Grid::covering(t1, {400});
  const auto flipped = norm_identity_checks(t1, g1, w1, probe_levels(t1, 5), 1e-6, true);
  const auto failed = std::count_if(flipped.begin(), flipped.end(), [](const Check& c) { return !c.pass(); });
  negative.checks.push_back({"gamma_sign_flip_flagged", static_cast<double>(flipped.size()),
                             static_cast<double>(failed), 0.0});
  result.sections.push_back(std::move(negative));
  return result;
}

}  // namespace slicegap
