#include "slicegap/kernels.hpp"

#include "slicegap/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace slicegap {

namespace {

constexpr double kRhoTol = 1e-12;

void require_on_slice(const TargetDensity& target, double t, const Point& p, const char* what) {
  if (target(p) < t - kRhoTol * std::max(1.0, t)) {
    throw ArgumentError(std::string(what) + " is not on the level set");
  }
}

double overlap(const Interval& a, double lo, double hi) {
  return std::max(0.0, std::min(a.hi, hi) - std::max(a.lo, lo));
}

}  // namespace

double gamma_from(double length, double delta, double w) {
  if (!(w > 0.0)) throw ArgumentError("w must be positive");
  if (delta >= w) {
    throw OutOfClassError("gap " + std::to_string(delta) + " is not below w = " + std::to_string(w));
  }
  if (delta <= 0.0) return 1.0;
  const double g = ((w - delta) / w) * (length / (length + delta));
  if (g < -1e-12 || g > 1.0 + 1e-12) throw InvariantViolationError("gamma outside [0, 1]");
  return std::clamp(g, 0.0, 1.0);
}

SoShLevelKernel make_so_sh_level_kernel(const LevelSet1D& level_set, double w) {
  return {level_set, w, gamma_from(level_set.length, level_set.delta_t, w)};
}

double gamma_t(const LevelSet1D& level_set, double w) {
  return gamma_from(level_set.length, level_set.delta_t, w);
}

double LevelMixture::density(double y) const {
  double v = 0.0;
  if (slice.contains(y)) v += uniform_weight / slice.total_length();
  if (local_weight > 0.0 && local_part.contains(y)) v += local_weight / local_part.length();
  return v;
}

double LevelMixture::probability(double a, double b) const {
  double mass = 0.0;
  for (const auto& p : slice.intervals()) mass += overlap(p, a, b);
  double p = uniform_weight * mass / slice.total_length();
  if (local_weight > 0.0) p += local_weight * overlap(local_part, a, b) / local_part.length();
  return p;
}

LevelMixture so_sh_level_kernel_measure(const SoShLevelKernel& kernel, double x) {
  const int i = kernel.level_set.parts.find(x, 1e-12);
  if (i < 0) throw ArgumentError("so_sh_level_kernel_measure: x is not on the level set");
  LevelMixture m;
  m.uniform_weight = kernel.gamma;
  m.local_weight = 1.0 - kernel.gamma;
  m.slice = kernel.level_set.parts;
  m.local_part = kernel.level_set.parts[static_cast<std::size_t>(i)];
  return m;
}

double op_norm_so_sh(const LevelSet1D& level_set, double w) { return 1.0 - gamma_t(level_set, w); }

double beta_k_so_sh_closed_form(const TargetDensity& target, double w, int k) {
  if (k < 1) throw ArgumentError("beta_k: k must be at least 1");
  const RwCertificate cert = check_Rw(target, w, 256);
  if (target.components().size() == 1 || !(cert.t2 > 0.0) || cert.t1 >= cert.t2) return 0.0;
  auto integrand = [&](double t) {
    if (t <= 0.0) return 0.0;
    return std::pow(1.0 - gamma_t(level_set_1d(target, t), w), 2.0 * k);
  };
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, cert.t1, cert.t2, 30, 1e-11);
  return std::sqrt(integral / cert.t2);
}

double sphere_area(int d) {
  if (d < 1) throw ArgumentError("sphere_area: dimension must be positive");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double har_kernel_density(const TargetDensity& target, double t, const Point& x, const Point& y) {
  require_on_slice(target, t, x, "x");
  require_on_slice(target, t, y, "y");
  const double r = (x - y).norm();
  if (r == 0.0) throw SingularityError("hit-and-run density is singular on the diagonal");
  const Point theta = (x - y) / r;
  const double chord = line_intervals(target, t, x, theta).total_length();
  const int d = target.dim();
  return (2.0 / sphere_area(d)) / (std::pow(r, d - 1) * chord);
}

double har_level_norm_bound(const TargetDensity& target, double t) {
  const int d = target.dim();
  const double vol = vol_level_set(target, t).value;
  return 1.0 - (2.0 / sphere_area(d)) * vol / std::pow(diam_level_set(target, t), d);
}

LineKernelWeights line_kernel_weights(const LineSection& section, double w) {
  return {section, w, gamma_from(section.parts.total_length(), section.delta, w)};
}

double combined_level_kernel_density(const TargetDensity& target, double t, double w, const Point& x,
                                     const Point& y) {
  require_on_slice(target, t, x, "x");
  require_on_slice(target, t, y, "y");
  const double r = (y - x).norm();
  if (r == 0.0) throw SingularityError("combined kernel density is singular on the diagonal");
  const Point theta = (y - x) / r;
  const LineKernelWeights lw = line_kernel_weights(line_section(target, t, x, theta), w);
  const auto& parts = lw.section.parts;
  const Interval& own = parts[static_cast<std::size_t>(parts.find(0.0, 1e-9))];
  const int d = target.dim();
  double bracket = lw.gamma / parts.total_length();
  if (own.contains(r, 1e-12)) bracket += (1.0 - lw.gamma) / own.length();
  return (2.0 / sphere_area(d)) * std::pow(r, 1 - d) * bracket;
}

double combined_norm_bound(const TargetDensity& target, double t) {
  const int d = target.dim();
  const double vol = vol_level_set(target, t).value;
  return 1.0 - vol / (sphere_area(d) * std::pow(diam_level_set(target, t), d));
}

}  // namespace slicegap
