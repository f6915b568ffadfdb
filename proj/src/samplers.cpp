#include "slicegap/samplers.hpp"

#include "slicegap/errors.hpp"
#include "slicegap/rng.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace slicegap {

const char* sampler_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::SimpleSlice: return "simple_slice";
    case SamplerKind::SteppingOutShrinkage: return "stepping_out_shrinkage";
    case SamplerKind::HitAndRunSlice: return "hit_and_run";
    case SamplerKind::HarSoSh: return "har_stepping_out_shrinkage";
    case SamplerKind::KStepHybrid: return "k_step_hybrid";
  }
  return "?";
}

SamplerKind parse_sampler(const std::string& name) {
  for (auto k : {SamplerKind::SimpleSlice, SamplerKind::SteppingOutShrinkage, SamplerKind::HitAndRunSlice,
                 SamplerKind::HarSoSh, SamplerKind::KStepHybrid}) {
    if (name == sampler_name(k)) return k;
  }
  throw ArgumentError("unknown sampler kind '" + name + "'");
}

void validate_sampler(const TargetDensity& target, const SamplerConfig& config) {
  if (!(config.w > 0.0) || !std::isfinite(config.w)) throw ArgumentError("w must be positive");
  if (config.k_inner < 1) throw ArgumentError("k_inner must be at least 1");
  if (config.max_loop < 1) throw ArgumentError("max_loop must be at least 1");
  const SamplerKind level_kind = config.kind == SamplerKind::KStepHybrid ? config.inner_kind : config.kind;
  if (level_kind == SamplerKind::KStepHybrid) throw ArgumentError("inner_kind cannot be k_step_hybrid");
  if (level_kind == SamplerKind::SteppingOutShrinkage) {
    if (target.dim() != 1) throw ArgumentError("stepping_out_shrinkage needs a one-dimensional target");
    check_Rw(target, config.w);
  }
  if (level_kind == SamplerKind::HarSoSh && !check_Rdw(target, config.w)) {
    throw OutOfClassError("modes are farther apart than w/2 for har_stepping_out_shrinkage");
  }
}

Interval stepping_out(const LineDensity& line_density, double pos0, double t, double w, Rng& rng, int max_loop) {
  if (!(w > 0.0)) throw ArgumentError("stepping_out: w must be positive");
  if (line_density(pos0) < t) throw PointOffSliceError("stepping_out: starting point is below the level");
  double lo = pos0 - rng.uniform() * w;
  double hi = lo + w;
  int loops = 0;
  while (line_density(lo) >= t) {
    lo -= w;
    if (++loops > max_loop) throw RunawayExpansionError("stepping_out: left end did not leave the slice");
  }
  loops = 0;
  while (line_density(hi) >= t) {
    hi += w;
    if (++loops > max_loop) throw RunawayExpansionError("stepping_out: right end did not leave the slice");
  }
  return {lo, hi};
}

double shrinkage(Interval bracket, double pos0, double t, const LineDensity& line_density, Rng& rng, int max_loop) {
  if (!(bracket.lo < pos0 && pos0 < bracket.hi)) throw ArgumentError("shrinkage: bracket must straddle pos0");
  for (int i = 0; i < max_loop; ++i) {
    const double y = bracket.lo + rng.uniform() * (bracket.hi - bracket.lo);
    if (line_density(y) >= t) return y;
    if (y < pos0) bracket.lo = y; else bracket.hi = y;
  }
  throw ShrinkageStallError("shrinkage: no acceptance within max_loop proposals");
}

Point level_move(const TargetDensity& target, const Point& x, double t, SamplerKind kind, Rng& rng, double w,
                 int max_loop) {
  switch (kind) {
    case SamplerKind::SimpleSlice:
      return uniform_sample_level_set(target, t, rng);
    case SamplerKind::SteppingOutShrinkage: {
      if (target.dim() != 1) throw ArgumentError("stepping_out_shrinkage needs a one-dimensional target");
      Point p(1);
      LineDensity f = [&](double s) {
        p[0] = s;
        return target(p);
      };
      const Interval bracket = stepping_out(f, x[0], t, w, rng, max_loop);
      return Point::Constant(1, shrinkage(bracket, x[0], t, f, rng, max_loop));
    }
    case SamplerKind::HitAndRunSlice: {
      const Point theta = rng.unit_vector(target.dim());
      const LineSection sec = line_section(target, t, x, theta);
      return x + sec.parts.sample(rng) * theta;
    }
    case SamplerKind::HarSoSh: {
      const Point theta = rng.unit_vector(target.dim());
      Point p(target.dim());
      LineDensity f = [&](double s) {
        p = x + s * theta;
        return target(p);
      };
      const Interval bracket = stepping_out(f, 0.0, t, w, rng, max_loop);
      return x + shrinkage(bracket, 0.0, t, f, rng, max_loop) * theta;
    }
    case SamplerKind::KStepHybrid:
      break;
  }
  throw ArgumentError("level_move: k_step_hybrid is not a level kernel");
}

Point transition(const TargetDensity& target, const Point& x, const SamplerConfig& config, Rng& rng,
                 double* level_out) {
  const double rho = target(x);
  if (!(rho > 0.0)) throw InvalidStateError("transition from a point with rho(x) = 0");
  // (0, rho] rather than [0, rho): K(0) is not a valid slice.
  const double t = rho * (1.0 - rng.uniform());
  if (level_out) *level_out = t;
  if (config.kind != SamplerKind::KStepHybrid) return level_move(target, x, t, config.kind, rng, config.w, config.max_loop);
  Point y = x;
  for (int i = 0; i < config.k_inner; ++i) {
    y = level_move(target, y, t, config.inner_kind, rng, config.w, config.max_loop);
  }
  return y;
}

Point simple_slice_step(const TargetDensity& target, const Point& x, Rng& rng) {
  return transition(target, x, {SamplerKind::SimpleSlice}, rng);
}

Point so_sh_step(const TargetDensity& target, const Point& x, Rng& rng, double w, int max_loop) {
  SamplerConfig c{SamplerKind::SteppingOutShrinkage, w};
  c.max_loop = max_loop;
  return transition(target, x, c, rng);
}

Point hit_and_run_slice_step(const TargetDensity& target, const Point& x, Rng& rng) {
  return transition(target, x, {SamplerKind::HitAndRunSlice}, rng);
}

Point har_so_sh_step(const TargetDensity& target, const Point& x, Rng& rng, double w, int max_loop) {
  SamplerConfig c{SamplerKind::HarSoSh, w};
  c.max_loop = max_loop;
  return transition(target, x, c, rng);
}

Point k_step_hybrid_step(const TargetDensity& target, const Point& x, Rng& rng, int k, SamplerKind inner_kind,
                         double w, int max_loop) {
  if (k < 1) throw ArgumentError("k_step_hybrid_step: k must be at least 1");
  return transition(target, x, {SamplerKind::KStepHybrid, w, k, inner_kind, max_loop}, rng);
}

Trace run_chain(const TargetDensity& target, const SamplerConfig& config, const Point& x0, std::size_t n,
                std::uint64_t seed) {
  validate_sampler(target, config);
  if (!(target(x0) > 0.0)) throw InvalidStateError("initial point has rho(x0) = 0");
  Trace trace;
  trace.seed = seed;
  trace.config = config;
  trace.states.reserve(n + 1);
  trace.levels.reserve(n + 1);
  trace.states.push_back(x0);
  trace.levels.push_back(0.0);
  Rng rng(seed);
  for (std::size_t i = 1; i <= n; ++i) {
    double t = 0.0;
    try {
      trace.states.push_back(transition(target, trace.states.back(), config, rng, &t));
    } catch (const Error& e) {
      throw StepError(i, e.what());
    }
    trace.levels.push_back(t);
  }
  return trace;
}

Point sample_target_exact(const TargetDensity& target, Rng& rng) {
  const auto& comps = target.components();
  double total = 0.0;
  for (const auto& c : comps) total += c.mass();
  for (;;) {
    double u = rng.uniform() * total;
    std::size_t k = 0;
    while (k + 1 < comps.size() && u > comps[k].mass()) u -= comps[k++].mass();
    const Point x = comps[k].sample(rng);
    double sum = 0.0, best = 0.0;
    for (const auto& c : comps) {
      const double v = c.value(x);
      sum += v;
      best = std::max(best, v);
    }
    if (sum > 0.0 && rng.uniform() * sum < best) return x;
  }
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
  const int d = trace.states.empty() ? 0 : static_cast<int>(trace.states.front().size());
  os << "step,level";
  for (int j = 1; j <= d; ++j) os << ",x" << j;
  os << '\n';
  char buf[64];
  for (std::size_t i = 0; i < trace.states.size(); ++i) {
    os << i;
    std::snprintf(buf, sizeof buf, ",%.17g", trace.levels[i]);
    os << buf;
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", trace.states[i][j]);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace slicegap
