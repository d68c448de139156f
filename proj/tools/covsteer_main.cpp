// covsteer: solve, simulate, sweep and verify covariance steering problems.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "covsteer/cli/commands.hpp"
#include "covsteer/cli/config.hpp"

namespace {

int threads_from_env() {
  const char* raw = std::getenv("COVSTEER_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  try {
    const int n = std::stoi(raw);
    return n > 0 ? n : 0;
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace covsteer::cli;

  CLI::App app{"Optimal covariance steering of linear stochastic systems"};
  std::string command;
  std::optional<std::string> config_path;
  std::optional<std::string> preset;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<int> paths;
  app.add_option("command", command, "solve | simulate | sweep | verify")
      ->required()
      ->check(CLI::IsMember({"solve", "simulate", "sweep", "verify"}));
  app.add_option("--config", config_path, "JSON run configuration");
  std::string preset_help = "embedded configuration:";
  for (const auto& name : preset_names()) preset_help += " " + name;
  app.add_option("--preset", preset, preset_help);
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--seed", seed, "Monte Carlo seed");
  app.add_option("--steps", steps, "solver grid size")->check(CLI::PositiveNumber);
  app.add_option("--paths", paths, "Monte Carlo path count")->check(CLI::Range(2, 1 << 30));
  CLI11_PARSE(app, argc, argv);

  RunConfig config;
  try {
    std::optional<std::filesystem::path> path;
    if (config_path) path = *config_path;
    if (!path && !preset && command == "verify") preset = "inertial-q1";
    config = load_config(path, preset);
    if (seed) config.monte_carlo.seed = *seed;
    if (steps) config.grid_size = *steps;
    if (paths) config.monte_carlo.n_paths = *paths;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  RunOptions opts;
  opts.out_dir = out_dir ? *out_dir : config.output_dir;
  opts.threads = threads_from_env();
  try {
    if (command == "solve") return run_solve(config, opts, std::cout);
    if (command == "simulate") return run_simulate(config, opts, std::cout);
    if (command == "sweep") return run_sweep(config, opts, std::cout);
    return run_verify(config, opts, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolverError;
  }
}
