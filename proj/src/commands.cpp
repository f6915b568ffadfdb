#include "slicegap/commands.hpp"

#include "slicegap/errors.hpp"
#include "slicegap/rng.hpp"
#include "slicegap/samplers.hpp"
#include "slicegap/verify_suite.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace slicegap {

namespace fs = std::filesystem;

namespace {

std::string out_path(const ExperimentConfig& config, const std::string& file) {
  fs::create_directories(config.out_dir);
  return (fs::path(config.out_dir) / file).string();
}

OracleOptions oracle_options(const ExperimentConfig& c) {
  OracleOptions opt = c.oracle;
  for (int k : c.k_list) opt.powers.push_back(k);
  for (int k = 1; k <= c.k_max; ++k) opt.powers.push_back(k);
  if (c.sampler.kind == SamplerKind::KStepHybrid) opt.powers.push_back(c.sampler.k_inner);
  return opt;
}

std::vector<DiagnosticRow> chain_rows(const ExperimentConfig& config, const Trace& trace) {
  std::vector<DiagnosticRow> rows;
  const double n = static_cast<double>(trace.states.size());
  rows.push_back({"states", n, 0.0, true});
  const std::size_t start = std::min(config.burn_in, trace.states.size());
  if (trace.states.size() - start < 2) return rows;
  for (int j = 0; j < config.target.dim(); ++j) {
    std::vector<double> series;
    for (std::size_t i = start; i < trace.states.size(); ++i) series.push_back(trace.states[i][j]);
    const std::string tag = "_x" + std::to_string(j + 1);
    double mean = 0.0;
    for (double v : series) mean += v;
    rows.push_back({"mean" + tag, mean / static_cast<double>(series.size()), 0.0, true});
    try {
      const int max_lag = static_cast<int>(std::min<std::size_t>(1000, series.size() - 1));
      const AcfEss a = acf_ess(series, max_lag);
      const double len = static_cast<double>(series.size());
      rows.push_back({"tau" + tag, a.tau, 1.0, a.tau >= 1.0});
      rows.push_back({"ess" + tag, a.ess, len, a.ess <= len});
    } catch (const DegenerateVarianceError&) {
      rows.push_back({"ess" + tag, 0.0, 0.0, false});
    }
  }
  return rows;
}

void write_rows(const ExperimentConfig& config, const std::string& file, const std::vector<DiagnosticRow>& rows) {
  std::ostringstream os;
  os << output_header(config) << "\n";
  write_diagnostics_csv(os, rows);
  write_file_atomic(out_path(config, file), os.str());
}

}  // namespace

void apply_overrides(ExperimentConfig& config, const Overrides& overrides) {
  if (overrides.out_dir) config.out_dir = *overrides.out_dir;
  if (overrides.seed) config.seed = *overrides.seed;
}

std::string output_header(const ExperimentConfig& config) {
  return "# config_hash=" + hash_hex(config.hash) + " seed=" + std::to_string(config.seed);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw Error("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

GapReport run_gap_checks(const ExperimentConfig& c) {
  const TargetDensity& target = c.target;
  const Grid grid = Grid::covering(target, c.cells, c.eps_cut);
  DiscreteSliceModel model(target, grid, c.oracle_kind, c.sampler.w, oracle_options(c));

  GapReport report = verify_theorem_bounds(model, c.k_list, c.tol.theorem, c.tol.psd);
  report.append(verify_monotonicity(model, c.k_max, c.tol.monotone));
  report.append(verify_power_bound(model, c.k_max, c.tol.monotone));
  report.checks.push_back(verify_mt_bound(target, grid, model, c.tol.mira_tierney));
  report.append(reversibility_checks(model, c.tol.reversibility));

  const DiscreteKernel& H = model.hybrid();
  Eigen::Index top = 0;
  H.pi.maxCoeff(&top);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(H.pi.size());
  nu[top] = 1.0;
  report.append(verify_tv_bound(H, nu, c.tv_steps, c.tol.tv));

  const int d = target.dim();
  const std::vector<double> levels = probe_levels(target, d == 1 ? 20 : 5);
  if (d == 1 && c.oracle_kind == LevelKernelKind::SoSh) {
    report.append(beta_closed_form_checks(model, target, c.sampler.w, c.k_list, c.tol.beta));
    report.append(norm_identity_checks(target, grid, c.sampler.w, levels, c.tol.norm_identity,
                                       c.inject_gamma_sign_flip));
  }
  if (d == 2 && c.oracle_kind == LevelKernelKind::HitAndRun) {
    report.append(har_level_checks(target, grid, levels, c.tol.level_bound, c.oracle));
  }
  if (d == 2 && c.oracle_kind == LevelKernelKind::Combined) {
    report.append(combined_level_checks(target, grid, c.sampler.w, levels, c.tol.level_bound, c.tol.psd, c.oracle));
  }
  return report;
}

std::vector<DiagnosticRow> run_diagnostics(const ExperimentConfig& c) {
  const Trace trace = run_chain(c.target, c.sampler, c.x0, c.n, c.seed);
  std::vector<DiagnosticRow> rows = chain_rows(c, trace);

  const double alpha = 0.01;
  const InvarianceRun inv = invariance_run(c.target, c.sampler, c.chains, derive_seed(c.seed, 1));
  rows.push_back({"invariance_chi2_p", inv.chi_square.p_value, alpha, inv.chi_square.p_value >= alpha});
  rows.push_back({"detailed_balance_exceedances", static_cast<double>(inv.detailed_balance.exceedances), 0.0,
                  inv.detailed_balance.exceedances == 0});
  rows.push_back({"detailed_balance_max_residual", inv.detailed_balance.max_residual, 4.0,
                  inv.detailed_balance.max_residual <= 4.0});

  const Grid grid = Grid::covering(c.target, c.cells, c.eps_cut);
  DiscreteSliceModel model(c.target, grid, c.oracle_kind, c.sampler.w, oracle_options(c));
  const int k = c.sampler.kind == SamplerKind::KStepHybrid ? c.sampler.k_inner : 1;
  const double gap = 1.0 - model.k_step_norm(k);
  rows.push_back({"oracle_gap", gap, 0.0, gap > 0.0});
  for (const Check& chk : empirical_tv_checks(c.target, c.sampler, gap, c.chains, c.tv_steps,
                                              derive_seed(c.seed, 2))) {
    rows.push_back({chk.name, chk.lhs, chk.rhs, chk.pass()});
  }
  return rows;
}

int cmd_sample(const ExperimentConfig& config, std::ostream& log) {
  const Trace trace = run_chain(config.target, config.sampler, config.x0, config.n, config.seed);
  std::ostringstream os;
  os << output_header(config) << "\n";
  write_trace_csv(os, trace);
  write_file_atomic(out_path(config, "trace.csv"), os.str());
  const auto rows = chain_rows(config, trace);
  if (config.wants("csv")) write_rows(config, "diagnostics.csv", rows);
  log << "wrote " << trace.states.size() << " states to " << out_path(config, "trace.csv") << "\n";
  return kExitOk;
}

int cmd_gap(const ExperimentConfig& config, std::ostream& log) {
  const GapReport report = run_gap_checks(config);
  const std::string summary = gap_report_summary(report);
  if (config.wants("csv")) {
    std::ostringstream os;
    os << output_header(config) << "\n";
    write_gap_report_csv(os, report);
    write_file_atomic(out_path(config, "gap_report.csv"), os.str());
  }
  if (config.wants("txt")) {
    write_file_atomic(out_path(config, "gap_summary.txt"), output_header(config) + "\n" + summary);
  }
  log << summary;
  return report.all_pass() ? kExitOk : kExitTheory;
}

int cmd_verify(const ExperimentConfig& config, std::ostream& log) {
  const SuiteResult result = run_property_suite(config);
  const std::string table = result.table();
  if (config.wants("csv")) {
    std::ostringstream os;
    os << output_header(config) << "\n";
    GapReport flat;
    for (const auto& s : result.sections) {
      for (Check c : s.checks) {
        c.name = s.name + ":" + c.name;
        flat.checks.push_back(c);
      }
    }
    write_gap_report_csv(os, flat);
    write_file_atomic(out_path(config, "verify_report.csv"), os.str());
  }
  if (config.wants("txt")) {
    write_file_atomic(out_path(config, "verify_summary.txt"), output_header(config) + "\n" + table);
  }
  log << table;
  return result.all_pass() ? kExitOk : kExitTheory;
}

int cmd_diag(const ExperimentConfig& config, std::ostream& log) {
  const auto rows = run_diagnostics(config);
  if (config.wants("csv")) write_rows(config, "diagnostics.csv", rows);
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const DiagnosticRow& r) { return !r.pass; });
  for (const auto& r : rows) {
    if (!r.pass) log << "FAILED " << r.metric << ": value " << r.value << " threshold " << r.threshold << "\n";
  }
  log << rows.size() - static_cast<std::size_t>(failed) << " of " << rows.size() << " diagnostics passed\n";
  return failed == 0 ? kExitOk : kExitTheory;
}

int run_command(const std::string& command, const std::string& config_path, const Overrides& overrides,
                std::ostream& out, std::ostream& err) {
  try {
    ExperimentConfig config = config_path.empty() ? parse_config("") : load_config(config_path);
    apply_overrides(config, overrides);
    if (command == "sample") return cmd_sample(config, out);
    if (command == "gap") return cmd_gap(config, out);
    if (command == "verify") return cmd_verify(config, out);
    if (command == "diag") return cmd_diag(config, out);
    err << "unknown command '" << command << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace slicegap
