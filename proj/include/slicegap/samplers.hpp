#pragma once

#include "slicegap/slice_geometry.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace slicegap {

class Rng;

enum class SamplerKind { SimpleSlice, SteppingOutShrinkage, HitAndRunSlice, HarSoSh, KStepHybrid };

const char* sampler_name(SamplerKind kind);
SamplerKind parse_sampler(const std::string& name);

struct SamplerConfig {
  SamplerKind kind = SamplerKind::SteppingOutShrinkage;
  double w = 1.0;
  int k_inner = 1;
  SamplerKind inner_kind = SamplerKind::SteppingOutShrinkage;
  int max_loop = 10000;
};

// Throws ArgumentError if the configuration cannot drive a chain on `target`.
void validate_sampler(const TargetDensity& target, const SamplerConfig& config);

struct Trace {
  std::vector<Point> states;
  // levels[0] is 0; levels[n] is the level drawn to reach states[n].
  std::vector<double> levels;
  std::uint64_t seed = 0;
  SamplerConfig config;
};

using LineDensity = std::function<double(double)>;

Interval stepping_out(const LineDensity& line_density, double pos0, double t, double w, Rng& rng,
                      int max_loop = 10000);
double shrinkage(Interval bracket, double pos0, double t, const LineDensity& line_density, Rng& rng,
                 int max_loop = 10000);

// One move of the level kernel H_t of the given kind (not KStepHybrid), from a
// point x with rho(x) >= t.
Point level_move(const TargetDensity& target, const Point& x, double t, SamplerKind kind, Rng& rng,
                 double w = 1.0, int max_loop = 10000);

// Full transition: level t ~ U(0, rho(x)], then the configured level moves.
Point transition(const TargetDensity& target, const Point& x, const SamplerConfig& config, Rng& rng,
                 double* level_out = nullptr);

Point simple_slice_step(const TargetDensity& target, const Point& x, Rng& rng);
Point so_sh_step(const TargetDensity& target, const Point& x, Rng& rng, double w, int max_loop = 10000);
Point hit_and_run_slice_step(const TargetDensity& target, const Point& x, Rng& rng);
Point har_so_sh_step(const TargetDensity& target, const Point& x, Rng& rng, double w, int max_loop = 10000);
Point k_step_hybrid_step(const TargetDensity& target, const Point& x, Rng& rng, int k, SamplerKind inner_kind,
                         double w, int max_loop = 10000);

Trace run_chain(const TargetDensity& target, const SamplerConfig& config, const Point& x0, std::size_t n,
                std::uint64_t seed);

// Exact draw from pi = rho / int rho: mixture of the normalized components,
// accepted with probability max_i rho_i(x) / sum_i rho_i(x).
Point sample_target_exact(const TargetDensity& target, Rng& rng);

// CSV with header `step,level,x1..xd`; 17 significant digits.
void write_trace_csv(std::ostream& os, const Trace& trace);

}  // namespace slicegap
