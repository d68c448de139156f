#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "covsteer/cli/config.hpp"

namespace covsteer::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 1,
  kExitSolverError = 2,
  kExitVerifyFailure = 3,
};

struct RunOptions {
  std::filesystem::path out_dir = "out";
  /// Monte Carlo worker threads; 0 uses the hardware concurrency.
  int threads = 0;
};

/// gains.csv, pi.csv, h.csv, sigma.csv and report.txt.
int run_solve(const RunConfig& config, const RunOptions& opts, std::ostream& log);
/// paths.csv, empirical_cov.csv, tube.csv (2-D states) and cost.txt.
int run_simulate(const RunConfig& config, const RunOptions& opts, std::ostream& log);
/// sweep.csv over the configured ε list, always including ε = 0.
int run_sweep(const RunConfig& config, const RunOptions& opts, std::ostream& log);

enum class CheckStatus { kPass, kFail, kExpectedFail };

struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  CheckStatus status = CheckStatus::kPass;
};

/// Identity, symplectic, escape and closed-form checks over the shipped
/// presets.
std::vector<VerifyCheck> verify_checks(const RunConfig& config);
/// Prints one PASS/FAIL/EXPECTED-FAIL line per check; kExitVerifyFailure
/// when any check fails.
int run_verify(const RunConfig& config, const RunOptions& opts, std::ostream& log);

}  // namespace covsteer::cli
