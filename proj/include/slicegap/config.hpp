#pragma once

#include "slicegap/samplers.hpp"
#include "slicegap/spectral_oracle.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace slicegap {

// Experiment description read from a sectioned key=value file:
//
//   # comment
//   [target]              reference = T1 | T2 | U1, or name + dim
//   [target.component1]   shape, mode (comma separated), height, scale
//   [target.component2]
//   [sampler]             kind, w, k_inner, inner_kind, max_loop
//   [run]                 n, seed, burn_in, x0, chains
//   [oracle]              kind, cells, eps_cut, levels, directions, k_list,
//                         k_max, tv_steps, tol, tol_theorem, tol_beta,
//                         tol_monotone, tol_tv, tol_mt, tol_reversibility,
//                         tol_psd, tol_norm_identity, tol_level_bound
//   [output]              directory, formats
//   [verify]              quick, inject_gamma_sign_flip
//
// Unknown sections or keys are rejected. Every section is optional.
struct ExperimentConfig {
  TargetDensity target = reference::twin_triangles();
  bool target_given = false;
  SamplerConfig sampler;
  LevelKernelKind oracle_kind = LevelKernelKind::SoSh;

  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::size_t burn_in = 0;
  Point x0;
  std::size_t chains = 2000;

  std::vector<int> cells;
  double eps_cut = 1e-2;
  OracleOptions oracle;
  std::vector<int> k_list;
  int k_max = 10;
  int tv_steps = 50;
  Tolerances tol;

  std::string out_dir = ".";
  std::vector<std::string> formats{"csv", "txt"};

  bool verify_quick = false;
  bool inject_gamma_sign_flip = false;

  // FNV-1a hash of the normalized key=value content.
  std::uint64_t hash = 0;

  bool wants(const std::string& format) const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string hash_hex(std::uint64_t h);

}  // namespace slicegap
