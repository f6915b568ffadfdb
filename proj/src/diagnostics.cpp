#include "slicegap/diagnostics.hpp"

#include "slicegap/errors.hpp"
#include "slicegap/slice_geometry.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

namespace slicegap {

BinnedHistogram::BinnedHistogram(Grid grid) : grid_(std::move(grid)), counts_(grid_.size(), 0.0) {}

void BinnedHistogram::add(const Point& x) {
  const std::size_t i = grid_.locate(x);
  if (i < counts_.size()) counts_[i] += 1.0; else overflow_ += 1.0;
  total_ += 1.0;
}

void BinnedHistogram::add_all(const std::vector<Point>& xs) {
  for (const auto& x : xs) add(x);
}

ChiSquareResult chi_square_gof(const std::vector<double>& counts, const std::vector<double>& probs,
                               double min_expected) {
  if (counts.size() != probs.size()) throw ArgumentError("chi_square_gof: counts and probabilities differ in length");
  double n = 0.0;
  for (double c : counts) n += c;
  std::vector<std::pair<double, double>> pooled;  // (observed, expected)
  double obs = 0.0, exp = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    obs += counts[i];
    exp += n * probs[i];
    if (exp >= min_expected) {
      pooled.push_back({obs, exp});
      obs = exp = 0.0;
    }
  }
  if (obs > 0.0 || exp > 0.0) {
    if (pooled.empty()) {
      pooled.push_back({obs, exp});
    } else {
      pooled.back().first += obs;
      pooled.back().second += exp;
    }
  }
  if (pooled.size() < 2) throw InsufficientDataError("fewer than two cells after pooling");
  ChiSquareResult r;
  for (const auto& [o, e] : pooled) {
    if (e <= 0.0) {
      r.statistic = std::numeric_limits<double>::infinity();
      break;
    }
    r.statistic += (o - e) * (o - e) / e;
  }
  r.dof = static_cast<int>(pooled.size()) - 1;
  r.p_value = std::isfinite(r.statistic)
                  ? boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic))
                  : 0.0;
  return r;
}

std::vector<double> bin_probabilities(const TargetDensity& target, const Grid& grid) {
  const double Z = LevelDensity(target).normalizer();
  std::vector<double> p(grid.size() + 1);
  double inside = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    p[i] = integrate_density_box(target, grid.cell_lower(i), grid.cell_upper(i), 1e-9) / Z;
    inside += p[i];
  }
  p.back() = std::max(0.0, 1.0 - inside);
  return p;
}

ChiSquareResult chi_square_invariance(const std::vector<Point>& outputs, const Grid& bins,
                                      const std::vector<double>& probs) {
  if (probs.size() != bins.size() && probs.size() != bins.size() + 1) {
    throw ArgumentError("chi_square_invariance: one probability per bin expected");
  }
  BinnedHistogram h(bins);
  h.add_all(outputs);
  std::vector<double> counts = h.counts();
  std::vector<double> p = probs;
  if (p.size() == bins.size()) {
    double inside = 0.0;
    for (double v : p) inside += v;
    p.push_back(std::max(0.0, 1.0 - inside));
  }
  counts.push_back(h.overflow());
  return chi_square_gof(counts, p);
}

DetailedBalanceResult detailed_balance_counts(const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                              double threshold) {
  std::map<std::pair<std::size_t, std::size_t>, double> n;
  for (const auto& p : pairs) n[p] += 1.0;
  DetailedBalanceResult r;
  for (const auto& [key, forward] : n) {
    const auto [a, b] = key;
    if (a >= b) {
      if (a == b) continue;
      if (n.count({b, a})) continue;  // visited from the other orientation
    }
    const auto it = n.find({b, a});
    const double backward = it == n.end() ? 0.0 : it->second;
    const double res = std::abs(forward - backward) / std::sqrt(forward + backward);
    r.max_residual = std::max(r.max_residual, res);
    r.exceedances += res > threshold ? 1 : 0;
    r.pairs_tested += 1;
  }
  return r;
}

DetailedBalanceResult detailed_balance_test(const std::vector<std::pair<Point, Point>>& pairs, const Grid& grid,
                                            double threshold) {
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  idx.reserve(pairs.size());
  for (const auto& [x0, x1] : pairs) idx.push_back({grid.locate(x0), grid.locate(x1)});
  return detailed_balance_counts(idx, threshold);
}

AcfEss acf_ess(const std::vector<double>& series, int max_lag) {
  const std::size_t n = series.size();
  if (n < 2) throw InsufficientDataError("acf_ess needs at least two values");
  if (max_lag < 1) throw ArgumentError("max_lag must be positive");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> c(n);
  double c0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = series[i] - mean;
    c0 += c[i] * c[i];
  }
  if (!(c0 > 1e-300) || c0 <= 1e-24 * mean * mean * static_cast<double>(n)) {
    throw DegenerateVarianceError("series is constant");
  }
  const std::size_t lags = std::min<std::size_t>(static_cast<std::size_t>(max_lag), n - 1);
  AcfEss r;
  r.acf.resize(lags + 1);
  for (std::size_t k = 0; k <= lags; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) s += c[i] * c[i + k];
    r.acf[k] = s / c0;
  }
  // Sum Gamma_m = acf[2m] + acf[2m+1] while it stays positive.
  double sum = 0.0;
  for (std::size_t m = 0; 2 * m + 1 <= lags; ++m) {
    const double g = r.acf[2 * m] + r.acf[2 * m + 1];
    if (g <= 0.0) break;
    sum += g;
  }
  r.tau = std::max(1.0, -1.0 + 2.0 * sum);
  r.ess = static_cast<double>(n) / r.tau;
  return r;
}

AcfEss acf_ess(const Trace& trace, const std::function<double(const Point&)>& f, int max_lag) {
  std::vector<double> v;
  v.reserve(trace.states.size());
  for (const auto& x : trace.states) v.push_back(f(x));
  return acf_ess(v, max_lag);
}

double tv_on_grid(const BinnedHistogram& hist, const std::vector<double>& probs) {
  if (probs.size() != hist.counts().size() && probs.size() != hist.counts().size() + 1) {
    throw ArgumentError("tv_on_grid: one probability per bin expected");
  }
  if (!(hist.total() > 0.0)) throw InsufficientDataError("tv_on_grid: empty histogram");
  double tv = 0.0, inside = 0.0;
  for (std::size_t i = 0; i < hist.counts().size(); ++i) {
    tv += std::abs(hist.counts()[i] / hist.total() - probs[i]);
    inside += probs[i];
  }
  const double outside = probs.size() > hist.counts().size() ? probs.back() : std::max(0.0, 1.0 - inside);
  tv += std::abs(hist.overflow() / hist.total() - outside);
  return 0.5 * tv;
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  const std::size_t n = sample.size();
  if (n == 0) throw InsufficientDataError("ks_test: empty sample");
  std::sort(sample.begin(), sample.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = cdf(sample[i]);
    d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
  }
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double p = 1.0;
  if (lambda > 0.1) {
    p = 0.0;
    for (int j = 1; j <= 200; ++j) {
      const double term = std::exp(-2.0 * j * j * lambda * lambda);
      p += (j % 2 ? 2.0 : -2.0) * term;
      if (term < 1e-17) break;
    }
    p = std::clamp(p, 0.0, 1.0);
  }
  return {d, p};
}

void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticRow>& rows) {
  os << "metric,value,threshold,pass\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%d\n", r.value, r.threshold, r.pass ? 1 : 0);
    os << r.metric << buf;
  }
}

}  // namespace slicegap
