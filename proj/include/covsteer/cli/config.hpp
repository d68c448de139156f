#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "covsteer/bridge_solver.hpp"

namespace covsteer::cli {

/// Invalid configuration; `what()` starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A coefficient as written in a config: "constant" (one value),
/// "piecewise" (breakpoints, values) or "sampled" (times, values).
struct SignalConfig {
  std::string type = "constant";
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> values;

  CoefficientMap to_map() const;
};

struct ProblemConfig {
  SignalConfig A;
  SignalConfig B;
  SignalConfig Q;
  std::optional<SignalConfig> R;
  Eigen::MatrixXd sigma0;
  Eigen::MatrixXd sigma1;
};

struct MonteCarloConfig {
  int n_paths = 20000;
  int n_steps = 1000;
  std::optional<std::uint64_t> seed;
  std::vector<double> checkpoints;
  bool full_paths = false;
};

struct TubeConfig {
  double level = 3.0;
  int resolution = 64;
  /// Write every `stride`-th solution grid time (the last one always).
  int stride = 10;
};

struct VerifyConfig {
  int lemma1_pairs = 100;
  std::uint64_t seed = 2016;
  /// Replaces every per-check threshold when set.
  std::optional<double> tolerance;
  /// Also run the escape check on the solver's branch forced to Z₊.
  bool force_plus_branch = false;
};

struct RunConfig {
  std::string name;
  ProblemConfig problem;
  double epsilon = 1.0;
  int grid_size = 2000;
  MonteCarloConfig monte_carlo;
  TubeConfig tube;
  std::vector<double> sweep_epsilons;
  VerifyConfig verify;
  std::string output_dir = "out";

  bool operator==(const RunConfig& other) const;
};

nlohmann::json to_json(const RunConfig& config);
/// Throws ConfigError naming the field path of the first problem found.
RunConfig config_from_json(const nlohmann::json& j);

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown preset.
nlohmann::json preset_json(const std::string& name);

/// Preset (if any) overlaid with the config file (if any) as a JSON merge
/// patch. At least one source is required.
RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::optional<std::string>& preset);

SteeringProblem build_problem(const RunConfig& config);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace covsteer::cli
