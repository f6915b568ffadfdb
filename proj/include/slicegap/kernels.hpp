#pragma once

#include "slicegap/slice_geometry.hpp"

namespace slicegap {

// ((w - delta)/w) * (length / (length + delta)); the weight with which a
// stepping-out/shrinkage move lands uniformly on the whole slice.
double gamma_from(double length, double delta, double w);

struct SoShLevelKernel {
  LevelSet1D level_set;
  double w = 0.0;
  double gamma = 1.0;
};

SoShLevelKernel make_so_sh_level_kernel(const LevelSet1D& level_set, double w);
double gamma_t(const LevelSet1D& level_set, double w);

// H_t(x, .) = uniform_weight * U_t + local_weight * U_{t, part(x)}.
struct LevelMixture {
  double uniform_weight = 1.0;
  double local_weight = 0.0;
  IntervalUnion slice;
  Interval local_part;

  double density(double y) const;
  // Mass the mixture puts on [a, b].
  double probability(double a, double b) const;
};

LevelMixture so_sh_level_kernel_measure(const SoShLevelKernel& kernel, double x);
double op_norm_so_sh(const LevelSet1D& level_set, double w);
double beta_k_so_sh_closed_form(const TargetDensity& target, double w, int k);

// Surface area of the unit sphere in R^d: 2, 2*pi, 4*pi for d = 1, 2, 3.
double sphere_area(int d);

double har_kernel_density(const TargetDensity& target, double t, const Point& x, const Point& y);
double har_level_norm_bound(const TargetDensity& target, double t);

struct LineKernelWeights {
  LineSection section;
  double w = 0.0;
  double gamma = 1.0;
};

LineKernelWeights line_kernel_weights(const LineSection& section, double w);
double combined_level_kernel_density(const TargetDensity& target, double t, double w, const Point& x,
                                     const Point& y);
double combined_norm_bound(const TargetDensity& target, double t);

}  // namespace slicegap
