#include "slicegap/spectral_oracle.hpp"

#include "slicegap/errors.hpp"
#include "slicegap/kernels.hpp"
#include "slicegap/slice_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

namespace slicegap {

// ---------------------------------------------------------------- Grid

Grid::Grid(std::vector<double> lower, std::vector<double> upper, std::vector<int> counts)
    : lower_(std::move(lower)), upper_(std::move(upper)), counts_(std::move(counts)), size_(1) {
  if (counts_.empty() || lower_.size() != counts_.size() || upper_.size() != counts_.size()) {
    throw ArgumentError("grid bounds and counts must have the same positive length");
  }
  for (std::size_t a = 0; a < counts_.size(); ++a) {
    if (counts_[a] < 1) throw ArgumentError("grid cell counts must be positive");
    if (!(upper_[a] > lower_[a])) throw ArgumentError("grid upper bound must exceed lower bound");
    size_ *= static_cast<std::size_t>(counts_[a]);
  }
}

Grid Grid::covering(const TargetDensity& target, std::vector<int> counts, double eps_cut) {
  const int d = target.dim();
  if (static_cast<int>(counts.size()) != d) throw ArgumentError("grid counts do not match target dimension");
  if (!(eps_cut > 0.0)) throw ArgumentError("eps_cut must be positive");
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const auto& c : target.components()) {
    double r = c.support_radius();
    if (!std::isfinite(r)) r = eps_cut < c.height ? c.level_radius(eps_cut) : 0.0;
    for (int a = 0; a < d; ++a) {
      lo[a] = std::min(lo[a], c.mode[a] - r);
      hi[a] = std::max(hi[a], c.mode[a] + r);
    }
  }
  for (int a = 0; a < d; ++a) {
    if (!(hi[a] > lo[a])) throw CoverageError("support bounding box is degenerate");
  }
  return Grid(lo, hi, std::move(counts));
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= width(a);
  return v;
}

Point Grid::center(std::size_t i) const {
  Point x(dim());
  for (int a = dim() - 1; a >= 0; --a) {
    const std::size_t k = i % counts_[a];
    i /= counts_[a];
    x[a] = lower_[a] + (static_cast<double>(k) + 0.5) * width(a);
  }
  return x;
}

std::size_t Grid::locate(const Point& x) const {
  std::size_t idx = 0;
  for (int a = 0; a < dim(); ++a) {
    const double u = (x[a] - lower_[a]) / width(a);
    if (!(u >= 0.0) || u >= counts_[a]) return size_;
    idx = idx * counts_[a] + static_cast<std::size_t>(u);
  }
  return idx;
}

std::vector<double> Grid::cell_lower(std::size_t i) const {
  const Point c = center(i);
  std::vector<double> v(dim());
  for (int a = 0; a < dim(); ++a) v[a] = c[a] - 0.5 * width(a);
  return v;
}

std::vector<double> Grid::cell_upper(std::size_t i) const {
  const Point c = center(i);
  std::vector<double> v(dim());
  for (int a = 0; a < dim(); ++a) v[a] = c[a] + 0.5 * width(a);
  return v;
}

// ---------------------------------------------------------------- kinds

const char* level_kind_name(LevelKernelKind kind) {
  switch (kind) {
    case LevelKernelKind::Uniform: return "uniform";
    case LevelKernelKind::SoSh: return "stepping_out_shrinkage";
    case LevelKernelKind::HitAndRun: return "hit_and_run";
    case LevelKernelKind::Combined: return "har_stepping_out_shrinkage";
  }
  return "?";
}

LevelKernelKind parse_level_kind(const std::string& name) {
  for (auto k : {LevelKernelKind::Uniform, LevelKernelKind::SoSh, LevelKernelKind::HitAndRun,
                 LevelKernelKind::Combined}) {
    if (name == level_kind_name(k)) return k;
  }
  throw ArgumentError("unknown level kernel kind '" + name + "'");
}

Eigen::VectorXd discretize_target(const TargetDensity& target, const Grid& grid) {
  if (grid.dim() != target.dim()) throw ArgumentError("grid dimension does not match target");
  Eigen::VectorXd pi(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pi[i] = target(grid.center(i)) * grid.cell_volume();
  const double total = pi.sum();
  if (!(total > 0.0)) throw CoverageError("density vanishes on every grid cell");
  return pi / total;
}

// ---------------------------------------------------------------- level kernels

namespace {

// A level kernel is a non-negative combination of block projections:
// H = sum_S weight_S * 1_S 1_S^T / |S|. Blocks tagged 0 or 1 are the two
// parts of a one-dimensional slice; -1 is the whole slice; -2 is anything else.
struct Block {
  double weight;
  std::vector<int> members;
  int tag;
};

constexpr int kWholeSlice = -1;
constexpr int kUntagged = -2;

double strip_width(const Grid& grid, const OracleOptions& opt) {
  if (opt.strip_width > 0.0) return opt.strip_width;
  double h = grid.width(0);
  for (int a = 1; a < grid.dim(); ++a) h = std::min(h, grid.width(a));
  return h;
}

std::vector<int> iota_members(int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), 0);
  return m;
}

std::vector<Block> level_blocks(const TargetDensity& target, const Grid& grid, LevelKernelKind kind, double w,
                                const OracleOptions& opt, double t, const std::vector<Point>& centers, int n) {
  const int d = target.dim();
  if (d > 2) throw ArgumentError("the discretized oracle supports dimensions 1 and 2");
  const bool uniform = kind == LevelKernelKind::Uniform || (d == 1 && kind == LevelKernelKind::HitAndRun);
  if (uniform || n == 1) return {{1.0, iota_members(n), kWholeSlice}};

  if (d == 1) {
    if (kind != LevelKernelKind::SoSh && kind != LevelKernelKind::Combined) {
      throw ArgumentError("unsupported level kernel in one dimension");
    }
    const LevelSet1D ls = level_set_1d(target, t);
    if (ls.parts.size() != 2) return {{1.0, iota_members(n), kWholeSlice}};
    const double gamma = gamma_t(ls, w);
    const double mid = 0.5 * (ls.parts[0].hi + ls.parts[1].lo);
    std::vector<int> left, right;
    for (int i = 0; i < n; ++i) (centers[i][0] < mid ? left : right).push_back(i);
    if (left.empty() || right.empty() || gamma >= 1.0) return {{1.0, iota_members(n), kWholeSlice}};
    return {{gamma, iota_members(n), kWholeSlice}, {1.0 - gamma, left, 0}, {1.0 - gamma, right, 1}};
  }

  if (kind == LevelKernelKind::SoSh) throw ArgumentError("stepping_out_shrinkage level kernel needs d = 1");
  // Two dimensions: average over directions of strip projections. Each strip
  // is the set of slice cells whose centers fall in a band of width h
  // perpendicular to the direction.
  const int J = opt.directions;
  if (J < 1) throw ArgumentError("directions must be positive");
  const double h = strip_width(grid, opt);
  std::vector<Block> blocks;
  std::vector<std::pair<long, double>> key(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int j = 0; j < J; ++j) {
    const double phi = std::numbers::pi * (j + 0.5) / J;
    Point u(2), nrm(2);
    u << std::cos(phi), std::sin(phi);
    nrm << -std::sin(phi), std::cos(phi);
    for (int i = 0; i < n; ++i) {
      key[i] = {static_cast<long>(std::floor(centers[i].dot(nrm) / h)), centers[i].dot(u)};
    }
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
    for (int lo = 0; lo < n;) {
      int hi = lo;
      while (hi < n && key[order[hi]].first == key[order[lo]].first) ++hi;
      std::vector<int> strip(order.begin() + lo, order.begin() + hi);
      bool split = false;
      if (kind == LevelKernelKind::Combined && strip.size() > 1) {
        const Point axis = (static_cast<double>(key[order[lo]].first) + 0.5) * h * nrm;
        const IntervalUnion sec = line_intervals(target, t, axis, u);
        if (sec.size() == 2) {
          const double gamma = gamma_from(sec.total_length(), sec.gap(), w);
          const double mid = 0.5 * (sec[0].hi + sec[1].lo);
          std::vector<int> a, b;
          for (int m : strip) (key[m].second < mid ? a : b).push_back(m);
          if (!a.empty() && !b.empty() && gamma < 1.0) {
            blocks.push_back({gamma / J, strip, kUntagged});
            blocks.push_back({(1.0 - gamma) / J, std::move(a), kUntagged});
            blocks.push_back({(1.0 - gamma) / J, std::move(b), kUntagged});
            split = true;
          }
        }
      }
      if (!split) blocks.push_back({1.0 / J, std::move(strip), kUntagged});
      lo = hi;
    }
  }
  return blocks;
}

Eigen::MatrixXd dense_from_blocks(const std::vector<Block>& blocks, int n) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (const auto& b : blocks) {
    const double v = b.weight / static_cast<double>(b.members.size());
    for (int i : b.members) {
      for (int j : b.members) H(i, j) += v;
    }
  }
  return H;
}

struct BandSpectrum {
  double nu = 0.0;
  double lam_min = 0.0;
};

// Drops the leading eigenvalue (which must be 1) and returns the largest
// modulus of the rest together with the smallest eigenvalue.
BandSpectrum summarize(std::vector<double> eig) {
  std::sort(eig.begin(), eig.end(), std::greater<>());
  if (std::abs(eig.front() - 1.0) > 1e-8) {
    throw InvariantViolationError("level kernel has leading eigenvalue " + std::to_string(eig.front()));
  }
  BandSpectrum s;
  s.lam_min = eig.back();
  if (eig.size() > 1) s.nu = std::max(std::abs(eig[1]), std::abs(eig.back()));
  return s;
}

const Eigen::MatrixXd& power_of(const Eigen::MatrixXd& H, int k, std::map<int, Eigen::MatrixXd>& memo) {
  if (k == 1) return H;
  auto it = memo.find(k);
  if (it != memo.end()) return it->second;
  Eigen::MatrixXd R;
  if (k % 2 == 0) {
    const Eigen::MatrixXd& half = power_of(H, k / 2, memo);
    R.noalias() = half * half;
  } else {
    R.noalias() = power_of(H, k - 1, memo) * H;
  }
  return memo.emplace(k, std::move(R)).first->second;
}

std::vector<Point> centers_of(const Grid& grid, const std::vector<std::size_t>& cells) {
  std::vector<Point> c;
  c.reserve(cells.size());
  for (auto i : cells) c.push_back(grid.center(i));
  return c;
}

}  // namespace

DiscreteKernel build_level_matrix(const TargetDensity& target, const Grid& grid, double t, LevelKernelKind kind,
                                  double w, const OracleOptions& options) {
  if (grid.dim() != target.dim()) throw ArgumentError("grid dimension does not match target");
  if (!(t > 0.0)) throw ArgumentError("level must be positive");
  DiscreteKernel K;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (target(grid.center(i)) >= t) K.cells.push_back(i);
  }
  if (K.cells.empty()) throw EmptyLevelSetError("no grid cell lies on the level set");
  const int n = static_cast<int>(K.cells.size());
  const auto centers = centers_of(grid, K.cells);
  K.P = dense_from_blocks(level_blocks(target, grid, kind, w, options, t, centers, n), n);
  K.pi = Eigen::VectorXd::Constant(n, 1.0 / n);
  K.label = std::string("H_t[") + level_kind_name(kind) + "]";
  return K;
}

// ---------------------------------------------------------------- slice model

struct DiscreteSliceModel::Impl {
  TargetDensity target;
  Grid grid;
  LevelKernelKind kind;
  double w;
  OracleOptions opt;

  // Internal order: states sorted by decreasing model density, so the slice of
  // band b is the prefix of length prefix[b].
  std::vector<std::size_t> cell_of;
  std::vector<Point> centers;
  Eigen::VectorXd rho;
  std::vector<int> top_band;
  std::vector<double> values, len, t_rep;
  std::vector<int> prefix;
  Eigen::PermutationMatrix<Eigen::Dynamic> to_out;

  std::vector<size_t> cells_out;
  Eigen::VectorXd pi_out, rho_out;

  std::vector<double> nu, lam_min;
  bool structured = false;
  // Grouped representation: on band b the level kernel is F_b(label_i,
  // label_j) with label counts N_b.
  int L = 2;
  std::vector<int> label;
  std::vector<Eigen::MatrixXd> F;
  std::vector<Eigen::VectorXd> N;

  std::optional<DiscreteKernel> simple;
  std::map<int, DiscreteKernel> ksteps;
  std::optional<double> simple_norm;
  std::map<int, double> knorms;

  Impl(const TargetDensity& t, const Grid& g, LevelKernelKind k, double w_, OracleOptions o)
      : target(t), grid(g), kind(k), w(w_), opt(std::move(o)) {}

  void setup();
  bool structured_pass();
  void dense_pass(const std::vector<int>& ks, bool spectra);
  Eigen::MatrixXd materialize_grouped(const std::vector<Eigen::MatrixXd>& Fk, bool grouped) const;
  DiscreteKernel finish(Eigen::MatrixXd P, const std::string& label) const;
};

void DiscreteSliceModel::Impl::setup() {
  if (grid.dim() != target.dim()) throw ArgumentError("grid dimension does not match target");
  if (!(w > 0.0)) throw ArgumentError("w must be positive");
  std::vector<std::pair<double, std::size_t>> active;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = target(grid.center(i));
    if (r > 0.0) active.push_back({r, i});
  }
  if (active.empty()) throw CoverageError("density vanishes on every grid cell");
  std::sort(active.begin(), active.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  const int n = static_cast<int>(active.size());
  rho.resize(n);
  cell_of.resize(n);
  // Snap densities that agree to 1e-12 so symmetric cells share a band.
  double group = active[0].first;
  for (int i = 0; i < n; ++i) {
    if (group - active[i].first > 1e-12 * group) group = active[i].first;
    rho[i] = group;
    cell_of[i] = active[i].second;
  }
  std::vector<double> distinct(rho.data(), rho.data() + n);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (opt.levels < 0 || opt.levels == 1) throw ArgumentError("levels must be 0 or at least 2");
  if (opt.levels > 0 && static_cast<int>(distinct.size()) > opt.levels) {
    const std::size_t D = distinct.size();
    std::vector<double> kept;
    for (int j = 0; j < opt.levels; ++j) {
      kept.push_back(distinct[static_cast<std::size_t>(std::llround(double(j) * (D - 1) / (opt.levels - 1)))]);
    }
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    for (int i = 0; i < n; ++i) rho[i] = *(std::upper_bound(kept.begin(), kept.end(), rho[i]) - 1);
    distinct = kept;
  }
  values = distinct;
  const int B = static_cast<int>(values.size());
  top_band.resize(n);
  prefix.assign(B, 0);
  for (int i = 0; i < n; ++i) {
    top_band[i] = static_cast<int>(std::lower_bound(values.begin(), values.end(), rho[i]) - values.begin());
    prefix[top_band[i]]++;
  }
  for (int b = B - 2; b >= 0; --b) prefix[b] += prefix[b + 1];
  len.resize(B);
  t_rep.resize(B);
  for (int b = 0; b < B; ++b) {
    const double below = b == 0 ? 0.0 : values[b - 1];
    len[b] = values[b] - below;
    t_rep[b] = below + 0.5 * len[b];
  }
  centers = centers_of(grid, cell_of);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return cell_of[a] < cell_of[b]; });
  to_out.resize(n);
  cells_out.resize(n);
  rho_out.resize(n);
  for (int pos = 0; pos < n; ++pos) {
    to_out.indices()[order[pos]] = pos;
    cells_out[pos] = cell_of[order[pos]];
    rho_out[pos] = rho[order[pos]];
  }
  pi_out = rho_out / rho_out.sum();

  nu.assign(B, 0.0);
  lam_min.assign(B, 0.0);
  if (target.dim() == 1 || kind == LevelKernelKind::Uniform) structured = structured_pass();
  if (!structured) {
    std::vector<int> ks = opt.powers;
    ks.push_back(1);
    dense_pass(ks, true);
  }
}

bool DiscreteSliceModel::Impl::structured_pass() {
  const int n = static_cast<int>(rho.size());
  const int B = static_cast<int>(values.size());
  label.assign(n, -1);
  F.assign(B, Eigen::MatrixXd());
  N.assign(B, Eigen::VectorXd());
  for (int b = 0; b < B; ++b) {
    const int nb = prefix[b];
    const auto blocks = level_blocks(target, grid, kind, w, opt, t_rep[b], centers, nb);
    Eigen::MatrixXd Fb = Eigen::MatrixXd::Zero(L, L);
    Eigen::VectorXd Nb = Eigen::VectorXd::Zero(L);
    bool tagged = false;
    for (const auto& blk : blocks) {
      const double v = blk.weight / static_cast<double>(blk.members.size());
      if (blk.tag == kWholeSlice) {
        Fb.array() += v;
      } else if (blk.tag >= 0 && blk.tag < L) {
        tagged = true;
        Fb(blk.tag, blk.tag) += v;
        Nb[blk.tag] += static_cast<double>(blk.members.size());
        for (int m : blk.members) {
          if (label[m] == -1) label[m] = blk.tag;
          if (label[m] != blk.tag) return false;
        }
      } else {
        return false;
      }
    }
    if (!tagged) Nb[0] = nb;
    if (std::abs(Nb.sum() - nb) > 0.5) return false;
    // Non-zero spectrum of H_b equals that of N^{1/2} F N^{1/2}.
    std::vector<double> eig;
    std::vector<int> live;
    for (int l = 0; l < L; ++l) {
      if (Nb[l] > 0) live.push_back(l);
    }
    Eigen::MatrixXd M(live.size(), live.size());
    for (std::size_t a = 0; a < live.size(); ++a) {
      for (std::size_t c = 0; c < live.size(); ++c) {
        M(a, c) = std::sqrt(Nb[live[a]] * Nb[live[c]]) * Fb(live[a], live[c]);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    for (int a = 0; a < es.eigenvalues().size(); ++a) eig.push_back(es.eigenvalues()[a]);
    for (int z = static_cast<int>(live.size()); z < nb; ++z) eig.push_back(0.0);
    const BandSpectrum s = summarize(eig);
    nu[b] = s.nu;
    lam_min[b] = s.lam_min;
    F[b] = std::move(Fb);
    N[b] = std::move(Nb);
  }
  for (int& l : label) l = std::max(l, 0);
  return true;
}

void DiscreteSliceModel::Impl::dense_pass(const std::vector<int>& ks_in, bool spectra) {
  std::vector<int> ks = ks_in;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (int k : ks) {
    if (k < 1) throw ArgumentError("kernel powers must be at least 1");
  }
  ks.erase(std::remove_if(ks.begin(), ks.end(), [&](int k) { return ksteps.count(k) > 0; }), ks.end());
  if (ks.empty() && !spectra) return;
  const int n = static_cast<int>(rho.size());
  const int B = static_cast<int>(values.size());
  std::map<int, Eigen::MatrixXd> acc;
  for (int k : ks) acc[k] = Eigen::MatrixXd::Zero(n, n);
  for (int b = 0; b < B; ++b) {
    const int nb = prefix[b];
    const Eigen::MatrixXd H = dense_from_blocks(level_blocks(target, grid, kind, w, opt, t_rep[b], centers, nb), nb);
    if (spectra) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
      const Eigen::VectorXd& ev = es.eigenvalues();
      const BandSpectrum s = summarize(std::vector<double>(ev.data(), ev.data() + ev.size()));
      nu[b] = s.nu;
      lam_min[b] = s.lam_min;
    }
    const Eigen::VectorXd scale = len[b] * rho.head(nb).cwiseInverse();
    std::map<int, Eigen::MatrixXd> memo;
    for (int k : ks) {
      acc[k].topLeftCorner(nb, nb).noalias() += scale.asDiagonal() * power_of(H, k, memo);
    }
  }
  for (int k : ks) {
    ksteps.emplace(k, finish(std::move(acc[k]), k == 1 ? "H" : "THkT*[k=" + std::to_string(k) + "]"));
  }
}

Eigen::MatrixXd DiscreteSliceModel::Impl::materialize_grouped(const std::vector<Eigen::MatrixXd>& Fk,
                                                              bool grouped) const {
  const int n = static_cast<int>(rho.size());
  const int B = static_cast<int>(values.size());
  const int G = grouped ? L : 1;
  // Cumulative sums over bands: C[b] = sum_{b' <= b} len_b' F_b'.
  std::vector<Eigen::MatrixXd> C(B);
  Eigen::MatrixXd run = Eigen::MatrixXd::Zero(G, G);
  for (int b = 0; b < B; ++b) {
    run += len[b] * Fk[b];
    C[b] = run;
  }
  Eigen::MatrixXd P(n, n);
  for (int i = 0; i < n; ++i) {
    const double inv = 1.0 / rho[i];
    const int li = grouped ? label[i] : 0;
    for (int j = 0; j < n; ++j) {
      const int lj = grouped ? label[j] : 0;
      P(i, j) = C[std::min(top_band[i], top_band[j])](li, lj) * inv;
    }
  }
  return P;
}

DiscreteKernel DiscreteSliceModel::Impl::finish(Eigen::MatrixXd P, const std::string& name) const {
  const Eigen::VectorXd sums = P.rowwise().sum();
  const double drift = (sums.array() - 1.0).abs().maxCoeff();
  if (drift > 1e-9) throw InvariantViolationError("row sums drift by " + std::to_string(drift));
  P = sums.cwiseInverse().asDiagonal() * P;
  DiscreteKernel K;
  K.P = to_out * P * to_out.transpose();
  K.pi = pi_out;
  K.cells = cells_out;
  K.label = name;
  return K;
}

DiscreteSliceModel::DiscreteSliceModel(const TargetDensity& target, const Grid& grid, LevelKernelKind kind,
                                       double w, OracleOptions options)
    : impl_(std::make_unique<Impl>(target, grid, kind, w, std::move(options))) {
  impl_->setup();
}

DiscreteSliceModel::~DiscreteSliceModel() = default;

const Grid& DiscreteSliceModel::grid() const { return impl_->grid; }
LevelKernelKind DiscreteSliceModel::kind() const { return impl_->kind; }
std::size_t DiscreteSliceModel::size() const { return impl_->cells_out.size(); }
std::size_t DiscreteSliceModel::band_count() const { return impl_->values.size(); }
const Eigen::VectorXd& DiscreteSliceModel::pi() const { return impl_->pi_out; }
const std::vector<std::size_t>& DiscreteSliceModel::cells() const { return impl_->cells_out; }
const Eigen::VectorXd& DiscreteSliceModel::model_density() const { return impl_->rho_out; }
const std::vector<double>& DiscreteSliceModel::band_norms() const { return impl_->nu; }
const std::vector<double>& DiscreteSliceModel::band_levels() const { return impl_->t_rep; }
bool DiscreteSliceModel::structured() const { return impl_->structured; }

const DiscreteKernel& DiscreteSliceModel::simple() {
  Impl& m = *impl_;
  if (!m.simple) {
    const int B = static_cast<int>(m.values.size());
    std::vector<Eigen::MatrixXd> F(B);
    for (int b = 0; b < B; ++b) F[b] = Eigen::MatrixXd::Constant(1, 1, 1.0 / m.prefix[b]);
    m.simple = m.finish(m.materialize_grouped(F, false), "U");
  }
  return *m.simple;
}

const DiscreteKernel& DiscreteSliceModel::k_step(int k) {
  if (k < 1) throw ArgumentError("k must be at least 1");
  Impl& m = *impl_;
  auto it = m.ksteps.find(k);
  if (it != m.ksteps.end()) return it->second;
  if (!m.structured) {
    m.dense_pass({k}, false);
    return m.ksteps.at(k);
  }
  const int B = static_cast<int>(m.values.size());
  std::vector<Eigen::MatrixXd> Fk(B);
  for (int b = 0; b < B; ++b) {
    // H^k on labels: F (N F)^{k-1}.
    const Eigen::MatrixXd NF = m.N[b].asDiagonal() * m.F[b];
    Eigen::MatrixXd R = m.F[b];
    for (int p = 1; p < k; ++p) R = R * NF;
    Fk[b] = std::move(R);
  }
  const std::string name = k == 1 ? "H" : "THkT*[k=" + std::to_string(k) + "]";
  return m.ksteps.emplace(k, m.finish(m.materialize_grouped(Fk, true), name)).first->second;
}

double DiscreteSliceModel::simple_norm() {
  if (!impl_->simple_norm) impl_->simple_norm = op_norm_centered(simple());
  return *impl_->simple_norm;
}

double DiscreteSliceModel::k_step_norm(int k) {
  auto it = impl_->knorms.find(k);
  if (it != impl_->knorms.end()) return it->second;
  const double v = op_norm_centered(k_step(k));
  impl_->knorms[k] = v;
  return v;
}

double DiscreteSliceModel::beta(int k) const {
  if (k < 1) throw ArgumentError("k must be at least 1");
  const Impl& m = *impl_;
  std::vector<double> cum(m.values.size());
  double run = 0.0;
  for (std::size_t b = 0; b < m.values.size(); ++b) {
    run += m.len[b] * std::pow(m.nu[b], 2.0 * k);
    cum[b] = run;
  }
  double best = 0.0;
  for (int i = 0; i < m.rho.size(); ++i) best = std::max(best, cum[m.top_band[i]] / m.rho[i]);
  return std::sqrt(best);
}

std::size_t DiscreteSliceModel::beta_argmax_cell(int k) const {
  if (k < 1) throw ArgumentError("k must be at least 1");
  const Impl& m = *impl_;
  std::vector<double> cum(m.values.size());
  double run = 0.0;
  for (std::size_t b = 0; b < m.values.size(); ++b) {
    run += m.len[b] * std::pow(m.nu[b], 2.0 * k);
    cum[b] = run;
  }
  double best = -1.0;
  std::size_t cell = m.cell_of[0];
  for (int i = 0; i < m.rho.size(); ++i) {
    const double v = cum[m.top_band[i]] / m.rho[i];
    if (v > best) {
      best = v;
      cell = m.cell_of[i];
    }
  }
  return cell;
}

double DiscreteSliceModel::min_level_eigenvalue() const {
  return *std::min_element(impl_->lam_min.begin(), impl_->lam_min.end());
}

DiscreteKernel build_full_matrix(const TargetDensity& target, const Grid& grid, LevelKernelKind kind, double w,
                                 const OracleOptions& options) {
  DiscreteSliceModel model(target, grid, kind, w, options);
  return model.hybrid();
}

DiscreteKernel build_k_step_matrix(const TargetDensity& target, const Grid& grid, LevelKernelKind kind, double w,
                                   int k, const OracleOptions& options) {
  OracleOptions opt = options;
  opt.powers.push_back(k);
  DiscreteSliceModel model(target, grid, kind, w, opt);
  return model.k_step(k);
}

BetaEstimate beta_k_numeric(const TargetDensity& target, const Grid& grid, LevelKernelKind kind, double w, int k,
                            const OracleOptions& options) {
  DiscreteSliceModel model(target, grid, kind, w, options);
  BetaEstimate e;
  e.value = model.beta(k);
  e.argmax_cell = model.beta_argmax_cell(k);
  e.argmax_point = grid.center(e.argmax_cell);
  return e;
}

// ---------------------------------------------------------------- norms

namespace {

Eigen::MatrixXd similarity(const DiscreteKernel& K, bool centered) {
  require_stochastic(K);
  if (!(K.pi.minCoeff() > 0.0)) throw ArgumentError("stationary weights must be strictly positive");
  const Eigen::VectorXd s = K.pi.cwiseSqrt();
  Eigen::MatrixXd A = s.asDiagonal() * K.P * s.cwiseInverse().asDiagonal();
  if (centered) A -= s * s.transpose();
  return A;
}

}  // namespace

void require_stochastic(const DiscreteKernel& K, double tol) {
  if (K.P.rows() != K.P.cols() || K.P.rows() != K.pi.size()) {
    throw ArgumentError("kernel matrix and weights have inconsistent sizes");
  }
  const double drift = (K.P.rowwise().sum().array() - 1.0).abs().maxCoeff();
  if (drift > tol) throw InvariantViolationError("row sums deviate from 1 by " + std::to_string(drift));
}

double op_norm_centered_svd(const DiscreteKernel& K) {
  const Eigen::MatrixXd A = similarity(K, true);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

double op_norm_centered_eig(const DiscreteKernel& K) {
  Eigen::MatrixXd A = similarity(K, true);
  A = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double op_norm_centered(const DiscreteKernel& K) {
  const Eigen::MatrixXd A = similarity(K, true);
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues()[0];
}

double spectral_gap(const DiscreteKernel& K) { return 1.0 - op_norm_centered(K); }

double psd_check(const DiscreteKernel& K) {
  const Eigen::MatrixXd A = similarity(K, false);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double reversibility_check(const DiscreteKernel& K) {
  const Eigen::MatrixXd F = K.pi.asDiagonal() * K.P;
  return (F - F.transpose()).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------- checks

bool GapReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
}

std::size_t GapReport::passed() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); }));
}

GapReport verify_theorem_bounds(DiscreteSliceModel& model, const std::vector<int>& k_list, double tol,
                                double psd_tol) {
  GapReport r;
  r.gap_U = 1.0 - model.simple_norm();
  r.gap_H = 1.0 - model.k_step_norm(1);
  r.checks.push_back({"level_kernels_psd", -model.min_level_eigenvalue(), 0.0, psd_tol});
  r.checks.push_back({"gap_H<=gap_U", r.gap_H, r.gap_U, tol});
  for (int k : k_list) {
    const double b = model.beta(k);
    r.beta[k] = b;
    const std::string suffix = "_k" + std::to_string(k);
    r.checks.push_back({"lower_bound" + suffix, (r.gap_U - b) / k, r.gap_H, tol});
    r.checks.push_back({"k_step_lower_bound" + suffix, r.gap_U - b, 1.0 - model.k_step_norm(k), tol});
  }
  return r;
}

std::vector<Check> verify_monotonicity(DiscreteSliceModel& model, int k_max, double tol) {
  std::vector<Check> out;
  for (int k = 1; k < k_max; ++k) {
    out.push_back({"monotone_k" + std::to_string(k + 1), model.k_step_norm(k + 1), model.k_step_norm(k), tol});
  }
  return out;
}

std::vector<Check> verify_power_bound(DiscreteSliceModel& model, int k_max, double tol) {
  std::vector<Check> out;
  const double base = model.k_step_norm(1);
  for (int k = 1; k <= k_max; ++k) {
    out.push_back({"power_bound_k" + std::to_string(k), std::pow(base, k), model.k_step_norm(k), tol});
  }
  return out;
}

namespace {

double support_volume_in_box(const TargetDensity& target, const Grid& grid) {
  const int d = target.dim();
  double box = 1.0;
  for (int a = 0; a < d; ++a) box *= grid.upper()[a] - grid.lower()[a];
  for (const auto& c : target.components()) {
    if (c.shape == Shape::Gaussian) return box;
  }
  const auto& comps = target.components();
  if (d == 1) {
    std::vector<Interval> pieces;
    for (const auto& c : comps) {
      const double lo = std::max(c.mode[0] - c.scale, grid.lower()[0]);
      const double hi = std::min(c.mode[0] + c.scale, grid.upper()[0]);
      if (hi > lo) pieces.push_back({lo, hi});
    }
    return IntervalUnion(pieces).total_length();
  }
  bool inside = true;
  for (const auto& c : comps) {
    for (int a = 0; a < d; ++a) {
      inside = inside && c.mode[a] - c.scale >= grid.lower()[a] && c.mode[a] + c.scale <= grid.upper()[a];
    }
  }
  if (!inside || d != 2) return box;
  double v = 0.0;
  for (const auto& c : comps) v += std::numbers::pi * c.scale * c.scale;
  if (comps.size() == 2) v -= lens_area(comps[0].scale, comps[1].scale, (comps[0].mode - comps[1].mode).norm());
  return v;
}

}  // namespace

Check verify_mt_bound(const TargetDensity& target, const Grid& grid, DiscreteSliceModel& model, double tol) {
  const double integral = integrate_density_box(target, grid.lower(), grid.upper());
  const double bound = integral / (target.sup_norm() * support_volume_in_box(target, grid));
  return {"mira_tierney", bound, 1.0 - model.simple_norm(), tol};
}

std::vector<Check> verify_tv_bound(const DiscreteKernel& K, const Eigen::VectorXd& nu, int n_max, double tol) {
  if (nu.size() != K.pi.size()) throw ArgumentError("initial distribution has the wrong length");
  if (std::abs(nu.sum() - 1.0) > 1e-9 || nu.minCoeff() < 0.0) {
    throw ArgumentError("initial distribution must be a probability vector");
  }
  const double contraction = op_norm_centered(K);
  const Eigen::VectorXd f = nu.cwiseQuotient(K.pi).array() - 1.0;
  const double l2 = std::sqrt(K.pi.dot(f.cwiseProduct(f)));
  std::vector<Check> out;
  Eigen::VectorXd dist = nu;
  const Eigen::MatrixXd Pt = K.P.transpose();
  for (int n = 1; n <= n_max; ++n) {
    dist = Pt * dist;
    const double tv = 0.5 * (dist - K.pi).cwiseAbs().sum();
    out.push_back({"tv_n" + std::to_string(n), tv, std::pow(contraction, n) * l2, tol});
  }
  return out;
}

// ---------------------------------------------------------------- output

void write_gap_report_csv(std::ostream& os, const GapReport& report) {
  os << "check,lhs,rhs,margin,pass\n";
  char buf[160];
  for (const auto& c : report.checks) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%d\n", c.lhs, c.rhs, c.margin(), c.pass() ? 1 : 0);
    os << c.name << buf;
  }
}

std::string gap_report_summary(const GapReport& report) {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof buf, "gap(U) = %.10f\ngap(H) = %.10f\n", report.gap_U, report.gap_H);
  os << buf;
  for (const auto& [k, b] : report.beta) {
    std::snprintf(buf, sizeof buf, "beta_%d = %.10f\n", k, b);
    os << buf;
  }
  os << report.passed() << " of " << report.checks.size() << " checks passed\n";
  for (const auto& c : report.checks) {
    if (!c.pass()) {
      std::snprintf(buf, sizeof buf, "FAILED %s: lhs %.6g > rhs %.6g + tol %.3g\n", c.name.c_str(), c.lhs, c.rhs,
                    c.tolerance);
      os << buf;
    }
  }
  return os.str();
}

}  // namespace slicegap
