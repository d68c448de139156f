#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "covsteer/bridge_solver.hpp"

namespace covsteer {

struct SimulationOptions {
  int n_paths = 20000;
  int n_steps = 1000;
  std::uint64_t seed = 0;
  /// Times at which states are stored; each must be a multiple of 1/n_steps.
  /// Empty means {0, 0.1, ..., 1}.
  std::vector<double> checkpoints;
  /// Store every step instead of the checkpoints.
  bool full_paths = false;
  /// Worker threads; 0 uses the hardware concurrency.
  int threads = 0;
};

/// Closed-loop ensemble. States are stored flat as
/// [path][time index][state component].
struct SimulationResult {
  int n_paths = 0;
  int n_steps = 0;
  Eigen::Index dim = 0;
  std::uint64_t seed = 0;
  std::vector<double> grid;
  std::vector<double> states;
  std::vector<Eigen::MatrixXd> empirical_cov;
  std::vector<Eigen::VectorXd> empirical_mean;
  std::vector<double> path_costs;
  double cost_estimate = 0.0;
  double cost_stderr = 0.0;

  Eigen::Map<const Eigen::VectorXd> state(int path, std::size_t time_index) const {
    return {states.data() + (static_cast<std::size_t>(path) * grid.size() + time_index) * dim,
            dim};
  }
};

/// Per-path generator seed: SplitMix64 finalizer applied to
/// seed + (path_index + 1) · 0x9E3779B97F4A7C15. The seed initializes a
/// std::mt19937_64; normals use Box-Muller on 53-bit uniforms.
std::uint64_t path_stream_seed(std::uint64_t seed, std::uint64_t path_index);

/// Euler-Maruyama simulation of dx = (A - BK)x dt + √ε B R^{-1/2} dw with
/// x(0) ~ N(0, Σ₀). K is linearly interpolated from the solution grid.
/// The result is bit-identical for a given (seed, n_paths, n_steps,
/// checkpoints) regardless of the thread count.
SimulationResult simulate(const SteeringProblem& problem,
                          const BridgeSolution& solution,
                          const SimulationOptions& opts);

/// (1/N) Σ x xᵀ over paths at a recorded time (no mean subtraction).
Eigen::MatrixXd empirical_covariance(const SimulationResult& result, double t);

struct TubeSlice {
  double t = 0.0;
  std::vector<Eigen::Vector2d> points;
};

/// Boundary of {z : zᵀ Σ(t)⁻¹ z = level²} at every solution grid time,
/// sampled at `resolution` angles. Two-dimensional states only.
std::vector<TubeSlice> tolerance_tube(const BridgeSolution& solution,
                                      double level, int resolution);

struct CostGapReport {
  double optimal_cost = 0.0;
  double optimal_stderr = 0.0;
  double perturbed_cost = 0.0;
  double perturbed_stderr = 0.0;
  /// Mean of paired (perturbed - optimal) path costs.
  double gap = 0.0;
  double gap_stderr = 0.0;
  /// ‖empirical Σ(1) - Σ₁‖_F / ‖Σ₁‖_F for each run.
  double optimal_terminal_mismatch = 0.0;
  double perturbed_terminal_mismatch = 0.0;
};

/// Expected cost of the optimal gain versus K + scale · R⁻¹BᵀS for a fixed
/// random symmetric S with unit Frobenius norm, with common random numbers.
/// The terminal constraint is not re-imposed on the perturbed run.
CostGapReport cost_gap(const SteeringProblem& problem,
                       const BridgeSolution& solution, double scale,
                       int n_paths, int n_steps, std::uint64_t seed,
                       int threads = 0);

}  // namespace covsteer
