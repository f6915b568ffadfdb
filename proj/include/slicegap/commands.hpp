#pragma once

#include "slicegap/config.hpp"
#include "slicegap/diagnostics.hpp"
#include "slicegap/spectral_oracle.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace slicegap {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitRuntime = 3,
  kExitTheory = 4,
};

// Command line values that take precedence over the config file.
struct Overrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
};

void apply_overrides(ExperimentConfig& config, const Overrides& overrides);

// "# config_hash=<hex> seed=<seed>", the first line of every output file.
std::string output_header(const ExperimentConfig& config);

// Writes `content` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

// Every gap check for the configured target and kernel.
GapReport run_gap_checks(const ExperimentConfig& config);

// Sample based checks for the configured sampler; needs the oracle gap for
// the empirical TV bound.
std::vector<DiagnosticRow> run_diagnostics(const ExperimentConfig& config);

// Each command writes into config.out_dir and returns an exit code.
int cmd_sample(const ExperimentConfig& config, std::ostream& log);
int cmd_gap(const ExperimentConfig& config, std::ostream& log);
int cmd_verify(const ExperimentConfig& config, std::ostream& log);
int cmd_diag(const ExperimentConfig& config, std::ostream& log);

// Loads the config, applies overrides, runs `command` and maps exceptions to
// exit codes: ConfigError to 2, any other failure to 3.
int run_command(const std::string& command, const std::string& config_path, const Overrides& overrides,
                std::ostream& out, std::ostream& err);

}  // namespace slicegap
