#pragma once

#include "slicegap/targets.hpp"

#include <cstdint>
#include <vector>

namespace slicegap {

class Rng;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
};

// Sorted, pairwise disjoint closed intervals. Construction merges overlapping
// or touching pieces.
class IntervalUnion {
 public:
  IntervalUnion() = default;
  explicit IntervalUnion(std::vector<Interval> pieces);

  const std::vector<Interval>& intervals() const { return parts_; }
  std::size_t size() const { return parts_.size(); }
  bool empty() const { return parts_.empty(); }
  const Interval& operator[](std::size_t i) const { return parts_[i]; }

  double total_length() const;
  // Distance between the two pieces when there are exactly two, else 0.
  double gap() const;
  double lower() const;
  double upper() const;
  // Index of the piece containing x, or -1.
  int find(double x, double tol = 0.0) const;
  bool contains(double x, double tol = 0.0) const { return find(x, tol) >= 0; }
  // Uniform draw over the union.
  double sample(Rng& rng) const;

 private:
  std::vector<Interval> parts_;
};

struct LevelSet1D {
  double t = 0.0;
  IntervalUnion parts;
  double delta_t = 0.0;
  double length = 0.0;
};

// Section of K(t) along the line origin + s*direction, in the coordinate s.
struct LineSection {
  Point origin;
  Point direction;
  double t = 0.0;
  IntervalUnion parts;
  double delta = 0.0;
};

struct VolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

LevelSet1D level_set_1d(const TargetDensity& target, double t);

LineSection line_section(const TargetDensity& target, double t, const Point& x, const Point& theta);

// Same intersection without requiring `origin` to lie on the slice; the result
// may be empty.
IntervalUnion line_intervals(const TargetDensity& target, double t, const Point& origin,
                             const Point& direction);

VolumeEstimate vol_level_set(const TargetDensity& target, double t, std::uint64_t mc_seed = 0x5eedULL,
                             int mc_samples = 200000);

double diam_level_set(const TargetDensity& target, double t);

// Area of the intersection of two disks.
double lens_area(double r1, double r2, double dist);

// l(t) = vol K(t) / int_0^sup vol K(s) ds.
class LevelDensity {
 public:
  explicit LevelDensity(const TargetDensity& target);
  double operator()(double t) const;
  double volume(double t) const;
  // int_0^sup vol K(s) ds, which equals the integral of rho.
  double normalizer() const { return normalizer_; }

 private:
  const TargetDensity* target_;
  double normalizer_;
};

double level_density(const TargetDensity& target, double t);

// Levels in (0, sup) at which the level-set volume is not smooth: component
// heights and the levels where two balls start to touch or nest.
std::vector<double> volume_breakpoints(const TargetDensity& target);

Point uniform_sample_level_set(const TargetDensity& target, double t, Rng& rng);

// Integral of rho over an axis-aligned box (dimension 1 or 2).
double integrate_density_box(const TargetDensity& target, const std::vector<double>& lower,
                             const std::vector<double>& upper, double rel_tol = 1e-10);

}  // namespace slicegap
