#include "slicegap/targets.hpp"

#include "slicegap/errors.hpp"
#include "slicegap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace slicegap {

const char* shape_name(Shape s) {
  switch (s) {
    case Shape::Triangular: return "triangular";
    case Shape::Gaussian: return "gaussian";
    case Shape::Uniform: return "uniform";
  }
  return "?";
}

Shape parse_shape(const std::string& name) {
  if (name == "triangular") return Shape::Triangular;
  if (name == "gaussian") return Shape::Gaussian;
  if (name == "uniform") return Shape::Uniform;
  throw ArgumentError("unknown shape '" + name + "'");
}

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double QuasiConcaveComponent::value(const Point& x) const {
  const double r2 = (x - mode).squaredNorm();
  switch (shape) {
    case Shape::Triangular: return height * std::max(0.0, 1.0 - std::sqrt(r2) / scale);
    case Shape::Gaussian: return height * std::exp(-scale * r2);
    case Shape::Uniform: return r2 <= scale * scale ? height : 0.0;
  }
  return 0.0;
}

double QuasiConcaveComponent::level_radius(double t) const {
  if (!(t > 0.0) || t > height) {
    throw ArgumentError("level_radius: level " + std::to_string(t) + " outside (0, height]");
  }
  switch (shape) {
    case Shape::Triangular: return scale * (1.0 - t / height);
    case Shape::Gaussian: return std::sqrt(std::log(height / t) / scale);
    case Shape::Uniform: return scale;
  }
  return 0.0;
}

double QuasiConcaveComponent::support_radius() const {
  return shape == Shape::Gaussian ? std::numeric_limits<double>::infinity() : scale;
}

double QuasiConcaveComponent::mass() const {
  const int d = dim();
  switch (shape) {
    case Shape::Triangular: return height * scale;
    case Shape::Gaussian: return height * std::pow(std::numbers::pi / scale, 0.5 * d);
    case Shape::Uniform: return height * unit_ball_volume(d) * std::pow(scale, d);
  }
  return 0.0;
}

Point QuasiConcaveComponent::sample(Rng& rng) const {
  const int d = dim();
  Point x = mode;
  switch (shape) {
    case Shape::Triangular:
      x[0] += scale * (rng.uniform() - rng.uniform());
      break;
    case Shape::Gaussian: {
      const double sd = std::sqrt(0.5 / scale);
      for (int i = 0; i < d; ++i) x[i] += sd * rng.normal();
      break;
    }
    case Shape::Uniform: {
      const double r = scale * std::pow(rng.uniform(), 1.0 / d);
      x += r * rng.unit_vector(d);
      break;
    }
  }
  return x;
}

TargetDensity::TargetDensity(std::string name, int dim, std::vector<QuasiConcaveComponent> components)
    : name_(std::move(name)), dim_(dim), components_(std::move(components)), sup_(0.0) {
  if (dim_ < 1) throw ArgumentError("target dimension must be positive");
  if (components_.empty() || components_.size() > 2) {
    throw ArgumentError("target needs one or two components");
  }
  for (const auto& c : components_) {
    if (c.dim() != dim_) throw ArgumentError("component dimension does not match target dimension");
    if (!(c.height > 0.0) || !std::isfinite(c.height)) throw ArgumentError("component height must be positive");
    if (!(c.scale > 0.0) || !std::isfinite(c.scale)) throw ArgumentError("component scale must be positive");
    if (!c.mode.allFinite()) throw ArgumentError("component mode must be finite");
    if (c.shape == Shape::Triangular && dim_ != 1) {
      throw UnsupportedShapeError("triangular components are only defined in one dimension");
    }
    sup_ = std::max(sup_, c.height);
  }
}

double TargetDensity::operator()(const Point& x) const {
  if (x.size() != dim_) {
    throw ArgumentError("point has dimension " + std::to_string(x.size()) + ", target has " +
                        std::to_string(dim_));
  }
  double v = 0.0;
  for (const auto& c : components_) v = std::max(v, c.value(x));
  return v;
}

double eval_density(const TargetDensity& target, const Point& x) { return target(x); }
double sup_norm(const TargetDensity& target) { return target.sup_norm(); }

namespace {

struct Span {
  double lo, hi;
};

Span component_interval(const QuasiConcaveComponent& c, double t) {
  const double r = c.level_radius(t);
  return {c.mode[0] - r, c.mode[0] + r};
}

}  // namespace

RwCertificate check_Rw(const TargetDensity& target, double w, int probe_levels) {
  if (target.dim() != 1) throw ArgumentError("check_Rw needs a one-dimensional target");
  if (!(w > 0.0)) throw ArgumentError("check_Rw: w must be positive");
  if (probe_levels < 1) throw ArgumentError("check_Rw: probe_levels must be positive");
  const auto& comps = target.components();
  if (comps.size() == 1) return {target.sup_norm(), target.sup_norm(), w};

  const double t2 = std::min(comps[0].height, comps[1].height);
  // Positive gap between the two component intervals at level t <= t2.
  auto gap = [&](double t) {
    Span a = component_interval(comps[0], t);
    Span b = component_interval(comps[1], t);
    if (a.lo > b.lo) std::swap(a, b);
    return b.lo - a.hi;
  };

  double t1 = t2;
  if (gap(t2) > 0.0) {
    double lo = 0.0, hi = t2;
    while (hi - lo > 1e-10) {
      const double mid = 0.5 * (lo + hi);
      if (mid > 0.0 && gap(mid) > 0.0) hi = mid; else lo = mid;
    }
    t1 = hi;
  }
  for (int j = 1; j <= probe_levels; ++j) {
    const double t = t1 + (t2 - t1) * j / probe_levels;
    const double delta = std::max(0.0, gap(t));
    if (delta >= w) {
      throw MembershipViolationError("gap " + std::to_string(delta) + " at level " + std::to_string(t) +
                                     " is not below w = " + std::to_string(w));
    }
  }
  return {t1, t2, w};
}

bool check_Rdw(const TargetDensity& target, double w) {
  if (!(w > 0.0)) throw ArgumentError("check_Rdw: w must be positive");
  const auto& comps = target.components();
  for (const auto& c : comps) {
    if (c.shape == Shape::Triangular && target.dim() > 1) {
      throw UnsupportedShapeError("triangular component in dimension > 1");
    }
  }
  if (comps.size() == 1) return true;
  // Argmax sets are the modes, or whole balls for flat components.
  auto plateau = [](const QuasiConcaveComponent& c) { return c.shape == Shape::Uniform ? c.scale : 0.0; };
  const double dist =
      std::max(0.0, (comps[0].mode - comps[1].mode).norm() - plateau(comps[0]) - plateau(comps[1]));
  return dist <= 0.5 * w * (1.0 + 1e-12);
}

namespace reference {

TargetDensity twin_triangles() {
  QuasiConcaveComponent left{Shape::Triangular, Point::Constant(1, -1.0), 1.0, 1.0};
  QuasiConcaveComponent right{Shape::Triangular, Point::Constant(1, 1.0), 0.8, 1.0};
  return TargetDensity("T1", 1, {left, right});
}

TargetDensity twin_gaussians() {
  Point m2(2);
  m2 << 1.5, 0.0;
  QuasiConcaveComponent a{Shape::Gaussian, Point::Zero(2), 1.0, 2.0};
  QuasiConcaveComponent b{Shape::Gaussian, m2, 1.0, 1.0};
  return TargetDensity("T2", 2, {a, b});
}

TargetDensity unit_interval() {
  QuasiConcaveComponent c{Shape::Uniform, Point::Constant(1, 0.5), 1.0, 0.5};
  return TargetDensity("U1", 1, {c});
}

TargetDensity by_name(const std::string& name) {
  if (name == "T1") return twin_triangles();
  if (name == "T2") return twin_gaussians();
  if (name == "U1") return unit_interval();
  throw ArgumentError("unknown reference target '" + name + "'");
}

double default_width(const std::string& name) {
  if (name == "T1" || name == "T2") return 3.0;
  return 1.0;
}

}  // namespace reference

}  // namespace slicegap
