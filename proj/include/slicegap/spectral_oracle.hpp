#pragma once

#include "slicegap/targets.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace slicegap {

// Uniform tensor grid of cells; cell i is addressed in row-major order with
// the last axis fastest.
class Grid {
 public:
  Grid(std::vector<double> lower, std::vector<double> upper, std::vector<int> counts);
  // Bounding box of {rho > eps_cut}; bounded components contribute their whole
  // support.
  static Grid covering(const TargetDensity& target, std::vector<int> counts, double eps_cut = 1e-2);

  int dim() const { return static_cast<int>(counts_.size()); }
  std::size_t size() const { return size_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<int>& counts() const { return counts_; }
  double width(int axis) const { return (upper_[axis] - lower_[axis]) / counts_[axis]; }
  double cell_volume() const;
  Point center(std::size_t i) const;
  // Cell containing x, or size() when x is outside the grid.
  std::size_t locate(const Point& x) const;
  std::vector<double> cell_lower(std::size_t i) const;
  std::vector<double> cell_upper(std::size_t i) const;

 private:
  std::vector<double> lower_, upper_;
  std::vector<int> counts_;
  std::size_t size_;
};

// Row-stochastic matrix over a subset of grid cells with its stationary
// weights; `cells[i]` is the grid index of state i.
struct DiscreteKernel {
  Eigen::MatrixXd P;
  Eigen::VectorXd pi;
  std::vector<std::size_t> cells;
  std::string label;

  std::size_t size() const { return static_cast<std::size_t>(pi.size()); }
};

enum class LevelKernelKind { Uniform, SoSh, HitAndRun, Combined };

const char* level_kind_name(LevelKernelKind kind);
LevelKernelKind parse_level_kind(const std::string& name);

struct OracleOptions {
  // Number of distinct level values kept; 0 keeps every distinct cell
  // density (exact), otherwise densities are rounded down onto that many
  // values.
  int levels = 0;
  // Hit-and-run directions in two dimensions.
  int directions = 64;
  // Strip width for line kernels in two dimensions; 0 means the smallest
  // cell width.
  double strip_width = 0.0;
  // Powers of the level kernel computed in the same pass over levels when the
  // dense path is used.
  std::vector<int> powers;
};

Eigen::VectorXd discretize_target(const TargetDensity& target, const Grid& grid);

// Kernel H_t restricted to the cells with rho >= t, stationary for the
// uniform distribution on those cells.
DiscreteKernel build_level_matrix(const TargetDensity& target, const Grid& grid, double t, LevelKernelKind kind,
                                  double w, const OracleOptions& options = {});

// Discretized slice chain: levels are decomposed into bands between
// consecutive distinct cell densities, so that the slice is constant on each
// band and every kernel below is exactly reversible on the grid.
class DiscreteSliceModel {
 public:
  DiscreteSliceModel(const TargetDensity& target, const Grid& grid, LevelKernelKind kind, double w,
                     OracleOptions options = {});
  ~DiscreteSliceModel();
  DiscreteSliceModel(const DiscreteSliceModel&) = delete;
  DiscreteSliceModel& operator=(const DiscreteSliceModel&) = delete;

  const Grid& grid() const;
  LevelKernelKind kind() const;
  std::size_t size() const;
  std::size_t band_count() const;
  const Eigen::VectorXd& pi() const;
  const std::vector<std::size_t>& cells() const;
  // Density values after tie snapping and optional rounding, per state.
  const Eigen::VectorXd& model_density() const;

  // Simple slice sampler U.
  const DiscreteKernel& simple();
  // T H^k T*; k = 1 is the hybrid kernel H.
  const DiscreteKernel& k_step(int k);
  const DiscreteKernel& hybrid() { return k_step(1); }

  // ||U - S|| and ||T H^k T* - S|| on L2(pi), cached.
  double simple_norm();
  double k_step_norm(int k);

  double beta(int k) const;
  std::size_t beta_argmax_cell(int k) const;
  // Smallest eigenvalue over all band kernels.
  double min_level_eigenvalue() const;
  // Largest |eigenvalue| besides the leading one, per band.
  const std::vector<double>& band_norms() const;
  const std::vector<double>& band_levels() const;
  // True when the grouped (low-rank) representation was used.
  bool structured() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

DiscreteKernel build_full_matrix(const TargetDensity& target, const Grid& grid, LevelKernelKind kind, double w,
                                 const OracleOptions& options = {});
DiscreteKernel build_k_step_matrix(const TargetDensity& target, const Grid& grid, LevelKernelKind kind, double w,
                                   int k, const OracleOptions& options = {});

struct BetaEstimate {
  double value = 0.0;
  std::size_t argmax_cell = 0;
  Point argmax_point;
};

BetaEstimate beta_k_numeric(const TargetDensity& target, const Grid& grid, LevelKernelKind kind, double w, int k,
                            const OracleOptions& options = {});

// ||P - 1 pi^T|| on L2(pi).
double op_norm_centered(const DiscreteKernel& K);
double op_norm_centered_svd(const DiscreteKernel& K);
double op_norm_centered_eig(const DiscreteKernel& K);
double spectral_gap(const DiscreteKernel& K);
double psd_check(const DiscreteKernel& K);
double reversibility_check(const DiscreteKernel& K);
// Throws InvariantViolationError if a row sum deviates from 1 by more than tol.
void require_stochastic(const DiscreteKernel& K, double tol = 1e-12);

struct Check {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;

  double margin() const { return rhs - lhs; }
  bool pass() const { return lhs <= rhs + tolerance; }
};

struct GapReport {
  double gap_U = 0.0;
  double gap_H = 0.0;
  std::map<int, double> beta;
  std::vector<Check> checks;

  bool all_pass() const;
  std::size_t passed() const;
  void append(const std::vector<Check>& more) { checks.insert(checks.end(), more.begin(), more.end()); }
};

struct Tolerances {
  double theorem = 5e-3;
  double beta = 2e-3;
  double monotone = 1e-6;
  double tv = 1e-8;
  double mira_tierney = 1e-3;
  double reversibility = 1e-8;
  double psd = 1e-10;
  double norm_identity = 1e-6;
  double level_bound = 5e-3;
};

GapReport verify_theorem_bounds(DiscreteSliceModel& model, const std::vector<int>& k_list, double tol,
                                double psd_tol = 1e-10);
std::vector<Check> verify_monotonicity(DiscreteSliceModel& model, int k_max, double tol);
std::vector<Check> verify_power_bound(DiscreteSliceModel& model, int k_max, double tol);
// Lower bound int rho / (sup rho * vol K) against the spectral gap of U, with
// the integral and the support volume taken over the grid box.
Check verify_mt_bound(const TargetDensity& target, const Grid& grid, DiscreteSliceModel& model, double tol);
std::vector<Check> verify_tv_bound(const DiscreteKernel& K, const Eigen::VectorXd& nu, int n_max, double tol);

void write_gap_report_csv(std::ostream& os, const GapReport& report);
std::string gap_report_summary(const GapReport& report);

}  // namespace slicegap
