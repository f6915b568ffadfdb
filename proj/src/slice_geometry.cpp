#include "slicegap/slice_geometry.hpp"

#include "slicegap/errors.hpp"
#include "slicegap/rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <functional>
#include <cmath>
#include <numbers>

namespace slicegap {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kRhoTol = 1e-12;

// Adaptive Gauss-Kronrod over [cuts.front(), cuts.back()], piecewise between
// consecutive cut points.
template <class F>
double integrate_pieces(F&& f, std::vector<double> cuts, double tol) {
  std::sort(cuts.begin(), cuts.end());
  // Slivers left by cuts that coincide with an endpoint up to rounding would
  // never meet the relative tolerance.
  const double lo = cuts.front(), hi = cuts.back();
  const double eps = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  std::vector<double> kept{lo};
  for (double c : cuts) {
    if (c - kept.back() > eps && hi - c > eps) kept.push_back(c);
  }
  if (hi > lo) kept.push_back(hi);
  cuts = std::move(kept);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    // A piece on which every Kronrod node vanishes lies outside the support;
    // the relative tolerance can never be met there.
    double err = 0.0, l1 = 0.0;
    gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 0, tol, &err, &l1);
    if (l1 == 0.0) continue;
    total += gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 25, tol);
  }
  return total;
}

struct Ball {
  Point center;
  double radius;
};

std::vector<Ball> level_balls(const TargetDensity& target, double t) {
  if (!(t > 0.0)) throw ArgumentError("level must be positive, got " + std::to_string(t));
  if (t > target.sup_norm()) {
    throw EmptyLevelSetError("level " + std::to_string(t) + " exceeds sup norm " +
                             std::to_string(target.sup_norm()));
  }
  std::vector<Ball> balls;
  for (const auto& c : target.components()) {
    if (c.height >= t) balls.push_back({c.mode, c.level_radius(t)});
  }
  return balls;
}

}  // namespace

IntervalUnion::IntervalUnion(std::vector<Interval> pieces) {
  std::sort(pieces.begin(), pieces.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (const auto& p : pieces) {
    if (p.hi < p.lo) throw ArgumentError("interval with hi < lo");
    if (!parts_.empty() && p.lo <= parts_.back().hi) {
      parts_.back().hi = std::max(parts_.back().hi, p.hi);
    } else {
      parts_.push_back(p);
    }
  }
}

double IntervalUnion::total_length() const {
  double s = 0.0;
  for (const auto& p : parts_) s += p.length();
  return s;
}

double IntervalUnion::gap() const { return parts_.size() == 2 ? parts_[1].lo - parts_[0].hi : 0.0; }

double IntervalUnion::lower() const {
  if (parts_.empty()) throw EmptyLevelSetError("empty interval union");
  return parts_.front().lo;
}

double IntervalUnion::upper() const {
  if (parts_.empty()) throw EmptyLevelSetError("empty interval union");
  return parts_.back().hi;
}

int IntervalUnion::find(double x, double tol) const {
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (parts_[i].contains(x, tol)) return static_cast<int>(i);
  }
  return -1;
}

double IntervalUnion::sample(Rng& rng) const {
  if (parts_.empty()) throw EmptyLevelSetError("cannot sample an empty interval union");
  double u = rng.uniform() * total_length();
  for (const auto& p : parts_) {
    if (u <= p.length()) return p.lo + u;
    u -= p.length();
  }
  return parts_.back().hi;
}

LevelSet1D level_set_1d(const TargetDensity& target, double t) {
  if (target.dim() != 1) throw ArgumentError("level_set_1d needs a one-dimensional target");
  std::vector<Interval> pieces;
  for (const auto& b : level_balls(target, t)) pieces.push_back({b.center[0] - b.radius, b.center[0] + b.radius});
  LevelSet1D ls;
  ls.t = t;
  ls.parts = IntervalUnion(std::move(pieces));
  ls.delta_t = ls.parts.gap();
  ls.length = ls.parts.total_length();
  return ls;
}

IntervalUnion line_intervals(const TargetDensity& target, double t, const Point& origin, const Point& direction) {
  std::vector<Interval> pieces;
  for (const auto& ball : level_balls(target, t)) {
    const Point diff = origin - ball.center;
    const double b = diff.dot(direction);
    const double c = diff.squaredNorm() - ball.radius * ball.radius;
    const double disc = b * b - c;
    if (disc < 0.0) continue;
    const double root = std::sqrt(disc);
    pieces.push_back({-b - root, -b + root});
  }
  return IntervalUnion(std::move(pieces));
}

LineSection line_section(const TargetDensity& target, double t, const Point& x, const Point& theta) {
  if (x.size() != target.dim() || theta.size() != target.dim()) {
    throw ArgumentError("line_section: dimension mismatch");
  }
  if (std::abs(theta.norm() - 1.0) > 1e-12) throw ArgumentError("line_section: direction is not a unit vector");
  const double rho = target(x);
  if (rho < t - kRhoTol * std::max(1.0, t)) {
    throw PointOffSliceError("line_section: rho(x) = " + std::to_string(rho) + " is below level " +
                             std::to_string(t));
  }
  LineSection sec;
  sec.origin = x;
  sec.direction = theta;
  sec.t = t;
  sec.parts = line_intervals(target, t, x, theta);
  if (sec.parts.find(0.0, 1e-9) < 0) {
    throw InvariantViolationError("line_section: current point missing from its own section");
  }
  sec.delta = sec.parts.gap();
  return sec;
}

double lens_area(double r1, double r2, double dist) {
  if (dist >= r1 + r2) return 0.0;
  if (dist <= std::abs(r1 - r2)) {
    const double r = std::min(r1, r2);
    return std::numbers::pi * r * r;
  }
  const double a1 = std::acos(std::clamp((dist * dist + r1 * r1 - r2 * r2) / (2 * dist * r1), -1.0, 1.0));
  const double a2 = std::acos(std::clamp((dist * dist + r2 * r2 - r1 * r1) / (2 * dist * r2), -1.0, 1.0));
  const double k = (-dist + r1 + r2) * (dist + r1 - r2) * (dist - r1 + r2) * (dist + r1 + r2);
  return r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * std::sqrt(std::max(0.0, k));
}

VolumeEstimate vol_level_set(const TargetDensity& target, double t, std::uint64_t mc_seed, int mc_samples) {
  const int d = target.dim();
  const auto balls = level_balls(target, t);
  if (d == 1) return {level_set_1d(target, t).length, 0.0};
  const double cd = unit_ball_volume(d);
  if (balls.size() == 1) return {cd * std::pow(balls[0].radius, d), 0.0};
  const double dist = (balls[0].center - balls[1].center).norm();
  if (d == 2) {
    const double r1 = balls[0].radius, r2 = balls[1].radius;
    return {std::numbers::pi * (r1 * r1 + r2 * r2) - lens_area(r1, r2, dist), 0.0};
  }
  // Sum of ball volumes times E[1 / covering count] under the volume mixture.
  const double v1 = cd * std::pow(balls[0].radius, d);
  const double v2 = cd * std::pow(balls[1].radius, d);
  if (dist >= balls[0].radius + balls[1].radius) return {v1 + v2, 0.0};
  if (mc_samples < 2) throw ArgumentError("vol_level_set: need at least two Monte Carlo samples");
  Rng rng(mc_seed);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < mc_samples; ++i) {
    const Ball& b = rng.uniform() * (v1 + v2) < v1 ? balls[0] : balls[1];
    const Point x = b.center + b.radius * std::pow(rng.uniform(), 1.0 / d) * rng.unit_vector(d);
    int cover = 0;
    for (const auto& o : balls) cover += (x - o.center).norm() <= o.radius ? 1 : 0;
    const double val = (v1 + v2) / std::max(cover, 1);
    sum += val;
    sum2 += val * val;
  }
  const double mean = sum / mc_samples;
  const double var = std::max(0.0, (sum2 / mc_samples - mean * mean) * mc_samples / (mc_samples - 1.0));
  return {mean, std::sqrt(var / mc_samples)};
}

double diam_level_set(const TargetDensity& target, double t) {
  const auto balls = level_balls(target, t);
  double diam = 0.0;
  for (const auto& b : balls) diam = std::max(diam, 2.0 * b.radius);
  if (balls.size() == 2) {
    diam = std::max(diam, (balls[0].center - balls[1].center).norm() + balls[0].radius + balls[1].radius);
  }
  return diam;
}

std::vector<double> volume_breakpoints(const TargetDensity& target) {
  const auto& comps = target.components();
  std::vector<double> cuts;
  for (const auto& c : comps) {
    if (c.height < target.sup_norm()) cuts.push_back(c.height);
  }
  if (comps.size() == 2) {
    const double top = std::min(comps[0].height, comps[1].height);
    const double dist = (comps[0].mode - comps[1].mode).norm();
    auto touch = [&](double t) { return dist - comps[0].level_radius(t) - comps[1].level_radius(t); };
    auto nest = [&](double t) {
      return dist - std::abs(comps[0].level_radius(t) - comps[1].level_radius(t));
    };
    for (auto fn : {std::function<double(double)>(touch), std::function<double(double)>(nest)}) {
      const int probes = 400;
      double prev_t = top * 1e-9;
      double prev = fn(prev_t);
      for (int j = 1; j <= probes; ++j) {
        const double t = top * j / probes;
        const double cur = fn(t);
        if ((prev < 0.0) != (cur < 0.0)) {
          double lo = prev_t, hi = t;
          for (int it = 0; it < 200 && hi - lo > 1e-15 * top; ++it) {
            const double mid = 0.5 * (lo + hi);
            if ((fn(mid) < 0.0) == (prev < 0.0)) lo = mid; else hi = mid;
          }
          cuts.push_back(0.5 * (lo + hi));
        }
        prev_t = t;
        prev = cur;
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  return cuts;
}

LevelDensity::LevelDensity(const TargetDensity& target) : target_(&target), normalizer_(0.0) {
  const double top = target.sup_norm();
  std::vector<double> cuts = volume_breakpoints(target);
  cuts.push_back(top);
  auto vol = [this](double s) { return volume(s); };
  // The lowest piece may carry a logarithmic blow-up of vol(K(s)) as s -> 0
  // (Gaussian tails); substitute s = b * exp(-v) there.
  const double b = cuts.front();
  auto lowest = [&](double v) {
    const double s = b * std::exp(-v);
    return s > 0.0 ? vol(s) * s : 0.0;
  };
  normalizer_ = gauss_kronrod<double, 31>::integrate(lowest, 0.0, 60.0, 25, 1e-11);
  cuts.insert(cuts.begin(), b);
  normalizer_ += integrate_pieces(vol, cuts, 1e-11);
}

double LevelDensity::volume(double t) const { return vol_level_set(*target_, t).value; }

double LevelDensity::operator()(double t) const {
  if (t > target_->sup_norm() || t <= 0.0) return 0.0;
  return volume(t) / normalizer_;
}

double level_density(const TargetDensity& target, double t) { return LevelDensity(target)(t); }

Point uniform_sample_level_set(const TargetDensity& target, double t, Rng& rng) {
  const auto balls = level_balls(target, t);
  const int d = target.dim();
  std::vector<double> vols;
  double total = 0.0;
  for (const auto& b : balls) {
    vols.push_back(std::pow(b.radius, d));
    total += vols.back();
  }
  if (!(total > 0.0)) return balls.front().center;  // K(t) is a single point
  for (;;) {
    double u = rng.uniform() * total;
    std::size_t k = 0;
    while (k + 1 < balls.size() && u > vols[k]) u -= vols[k++];
    const Ball& b = balls[k];
    Point x = b.center;
    if (d == 1) {
      x[0] += b.radius * (2.0 * rng.uniform() - 1.0);
    } else {
      x += b.radius * std::pow(rng.uniform(), 1.0 / d) * rng.unit_vector(d);
    }
    int cover = 0;
    for (const auto& o : balls) cover += (x - o.center).norm() <= o.radius ? 1 : 0;
    if (cover <= 1 || rng.uniform() * cover < 1.0) return x;
  }
}

namespace {

std::vector<double> axis_cuts(const TargetDensity& target, int axis, double lo, double hi) {
  std::vector<double> cuts{lo, hi};
  for (const auto& c : target.components()) {
    std::vector<double> cand{c.mode[axis]};
    if (c.shape != Shape::Gaussian) {
      cand.push_back(c.mode[axis] - c.scale);
      cand.push_back(c.mode[axis] + c.scale);
    }
    for (double v : cand) {
      if (v > lo && v < hi) cuts.push_back(v);
    }
  }
  return cuts;
}

}  // namespace

double integrate_density_box(const TargetDensity& target, const std::vector<double>& lower,
                             const std::vector<double>& upper, double rel_tol) {
  const int d = target.dim();
  if (static_cast<int>(lower.size()) != d || static_cast<int>(upper.size()) != d) {
    throw ArgumentError("integrate_density_box: bounds do not match target dimension");
  }
  if (d == 1) {
    Point x(1);
    auto f = [&](double s) {
      x[0] = s;
      return target(x);
    };
    return integrate_pieces(f, axis_cuts(target, 0, lower[0], upper[0]), rel_tol);
  }
  if (d == 2) {
    const auto inner_cuts = axis_cuts(target, 1, lower[1], upper[1]);
    auto outer = [&](double s0) {
      Point x(2);
      x[0] = s0;
      auto inner = [&](double s1) {
        x[1] = s1;
        return target(x);
      };
      return integrate_pieces(inner, inner_cuts, rel_tol);
    };
    return integrate_pieces(outer, axis_cuts(target, 0, lower[0], upper[0]), rel_tol);
  }
  throw ArgumentError("integrate_density_box supports dimensions 1 and 2");
}

}  // namespace slicegap
