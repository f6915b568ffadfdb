#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace slicegap {

class Rng;

using Point = Eigen::VectorXd;

enum class Shape { Triangular, Gaussian, Uniform };

const char* shape_name(Shape s);
Shape parse_shape(const std::string& name);

// One quasi-concave bump. `scale` is the half-width for Triangular, the
// precision alpha in h*exp(-alpha*|x-mode|^2) for Gaussian, and the ball
// radius for Uniform. Every level set is a ball around `mode`.
struct QuasiConcaveComponent {
  Shape shape = Shape::Gaussian;
  Point mode;
  double height = 1.0;
  double scale = 1.0;

  int dim() const { return static_cast<int>(mode.size()); }
  double value(const Point& x) const;
  // Radius of {value >= t}; requires 0 < t <= height.
  double level_radius(double t) const;
  // Radius outside of which the component vanishes (infinity for Gaussian).
  double support_radius() const;
  // Integral of the component over R^d.
  double mass() const;
  // Draw from the component normalized to a probability density.
  Point sample(Rng& rng) const;
};

// rho(x) = max over one or two components. Immutable after construction.
class TargetDensity {
 public:
  TargetDensity(std::string name, int dim, std::vector<QuasiConcaveComponent> components);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  const std::vector<QuasiConcaveComponent>& components() const { return components_; }

  double operator()(const Point& x) const;
  double sup_norm() const { return sup_; }

 private:
  std::string name_;
  int dim_;
  std::vector<QuasiConcaveComponent> components_;
  double sup_;
};

double eval_density(const TargetDensity& target, const Point& x);
double sup_norm(const TargetDensity& target);

// Levels at which a bimodal 1D target splits into two intervals, together with
// the step width the certificate was issued for.
struct RwCertificate {
  double t1 = 0.0;
  double t2 = 0.0;
  double w = 0.0;
};

RwCertificate check_Rw(const TargetDensity& target, double w, int probe_levels = 64);
bool check_Rdw(const TargetDensity& target, double w);

double unit_ball_volume(int d);

namespace reference {
// Triangles with modes -1 and +1, half-width 1, heights 1 and 0.8.
TargetDensity twin_triangles();
// max(exp(-2|x|^2), exp(-|x - (1.5, 0)|^2)) in the plane.
TargetDensity twin_gaussians();
// rho = 1 on [0, 1].
TargetDensity unit_interval();
// Lookup by name: "T1", "T2" or "U1".
TargetDensity by_name(const std::string& name);
// Step width used with the built-in targets.
double default_width(const std::string& name);
}  // namespace reference

}  // namespace slicegap
