#pragma once

#include "slicegap/samplers.hpp"
#include "slicegap/spectral_oracle.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace slicegap {

// Counts of points per grid cell; points outside the grid go to `overflow`.
class BinnedHistogram {
 public:
  explicit BinnedHistogram(Grid grid);

  void add(const Point& x);
  void add_all(const std::vector<Point>& xs);

  const Grid& grid() const { return grid_; }
  const std::vector<double>& counts() const { return counts_; }
  double overflow() const { return overflow_; }
  double total() const { return total_; }

 private:
  Grid grid_;
  std::vector<double> counts_;
  double overflow_ = 0.0;
  double total_ = 0.0;
};

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

// Pearson goodness of fit; adjacent cells are pooled until each pooled cell
// expects at least `min_expected` observations.
ChiSquareResult chi_square_gof(const std::vector<double>& counts, const std::vector<double>& probs,
                               double min_expected = 5.0);

// Probability of each grid cell under rho / int rho (plus a trailing entry for
// the mass outside the grid).
std::vector<double> bin_probabilities(const TargetDensity& target, const Grid& grid);

// One-step outputs binned on `bins` against probabilities `probs` (one per cell,
// optionally followed by the outside mass).
ChiSquareResult chi_square_invariance(const std::vector<Point>& outputs, const Grid& bins,
                                      const std::vector<double>& probs);

struct DetailedBalanceResult {
  double max_residual = 0.0;
  int exceedances = 0;
  int pairs_tested = 0;
};

// Pairs are bin indices (a, b) of (X0, X1). Residual of an unordered pair is
// |N(a,b) - N(b,a)| / sqrt(N(a,b) + N(b,a)).
DetailedBalanceResult detailed_balance_counts(const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                              double threshold = 4.0);
DetailedBalanceResult detailed_balance_test(const std::vector<std::pair<Point, Point>>& pairs, const Grid& grid,
                                            double threshold = 4.0);

struct AcfEss {
  std::vector<double> acf;
  double tau = 1.0;
  double ess = 0.0;
};

// Autocorrelations up to max_lag and the effective sample size from Geyer's
// initial positive sequence estimator.
AcfEss acf_ess(const std::vector<double>& series, int max_lag);
AcfEss acf_ess(const Trace& trace, const std::function<double(const Point&)>& f, int max_lag);

double tv_on_grid(const BinnedHistogram& hist, const std::vector<double>& probs);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample Kolmogorov-Smirnov test against a continuous CDF, with the
// asymptotic distribution and Stephens' small-sample correction.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

struct DiagnosticRow {
  std::string metric;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = true;
};

void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticRow>& rows);

}  // namespace slicegap
