#include "covsteer/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "covsteer/errors.hpp"

namespace covsteer {
namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = static_cast<double>((engine_() >> 11) + 1) * kScale;
    const double u2 = static_cast<double>(engine_() >> 11) * kScale;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Coefficients of the discretized closed loop at each step time.
struct StepTables {
  std::vector<Eigen::MatrixXd> closed_loop;  // A - B K
  std::vector<Eigen::MatrixXd> noise;        // √(ε Δt) B R^{-1/2}
  std::vector<Eigen::MatrixXd> cost_weight;  // Kᵀ R K + Q
};

StepTables build_tables(const SteeringProblem& problem,
                        const BridgeSolution& solution, int n_steps) {
  const auto& sys = problem.sys;
  const double dt = 1.0 / n_steps;
  const double noise_scale = std::sqrt(problem.epsilon * dt);
  StepTables tables;
  tables.closed_loop.reserve(n_steps + 1);
  tables.noise.reserve(n_steps + 1);
  tables.cost_weight.reserve(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k) {
    const double t = k == n_steps ? 1.0 : k * dt;
    const Eigen::MatrixXd gain = solution.gain_at(t);
    const Eigen::MatrixXd b = sys.B(t);
    const Eigen::MatrixXd r = sys.R(t);
    tables.closed_loop.push_back(sys.A(t) - b * gain);
    tables.noise.push_back(noise_scale * b * inv_sqrt_spd(r));
    tables.cost_weight.push_back(
        symmetrize(gain.transpose() * r * gain + sys.Q(t)));
  }
  return tables;
}

std::vector<int> checkpoint_steps(const std::vector<double>& times, int n_steps) {
  std::vector<int> steps;
  steps.reserve(times.size());
  for (double t : times) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("checkpoint outside [0, 1]");
    const double scaled = t * n_steps;
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) > 1e-9 * std::max(1.0, scaled)) {
      throw DomainError("checkpoint is not on the simulation step grid");
    }
    const int k = static_cast<int>(rounded);
    if (!steps.empty() && k <= steps.back()) {
      throw DomainError("checkpoints must be strictly increasing");
    }
    steps.push_back(k);
  }
  return steps;
}

int worker_count(int requested, int n_paths) {
  int threads = requested > 0 ? requested
                              : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(threads, 1, std::max(1, n_paths));
}

}  // namespace

std::uint64_t path_stream_seed(std::uint64_t seed, std::uint64_t path_index) {
  return splitmix64(seed + (path_index + 1) * 0x9E3779B97F4A7C15ULL);
}

SimulationResult simulate(const SteeringProblem& problem,
                          const BridgeSolution& solution,
                          const SimulationOptions& opts) {
  if (opts.n_paths < 2) throw DomainError("n_paths must be at least 2");
  if (opts.n_steps < 1) throw DomainError("n_steps must be positive");
  problem.validate();
  const Eigen::Index n = problem.sys.dim_state();
  const Eigen::Index m = problem.sys.dim_input();

  SimulationResult result;
  result.n_paths = opts.n_paths;
  result.n_steps = opts.n_steps;
  result.dim = n;
  result.seed = opts.seed;
  if (opts.full_paths) {
    for (int k = 0; k <= opts.n_steps; ++k) {
      result.grid.push_back(k == opts.n_steps ? 1.0
                                              : static_cast<double>(k) / opts.n_steps);
    }
  } else if (opts.checkpoints.empty()) {
    for (int k = 0; k <= 10; ++k) result.grid.push_back(k / 10.0);
  } else {
    result.grid = opts.checkpoints;
  }
  const std::vector<int> record_steps = checkpoint_steps(result.grid, opts.n_steps);

  const StepTables tables = build_tables(problem, solution, opts.n_steps);
  const Eigen::MatrixXd sigma0_half = sqrt_spd(problem.sigma0);
  const bool noisy = problem.epsilon > 0.0;
  const double dt = 1.0 / opts.n_steps;
  const std::size_t n_times = result.grid.size();

  result.states.assign(static_cast<std::size_t>(opts.n_paths) * n_times * n, 0.0);
  result.path_costs.assign(opts.n_paths, 0.0);

  const auto run_paths = [&](int begin, int end) {
    Eigen::VectorXd x(n), drift(n), xi0(n), xi(m);
    for (int p = begin; p < end; ++p) {
      NormalSource normal(path_stream_seed(opts.seed, static_cast<std::uint64_t>(p)));
      for (Eigen::Index i = 0; i < n; ++i) xi0(i) = normal();
      x.noalias() = sigma0_half * xi0;
      double* slot = result.states.data() + static_cast<std::size_t>(p) * n_times * n;
      std::size_t next = 0;
      double cost = 0.0;
      double prev_rate = x.dot(tables.cost_weight[0] * x);
      for (int k = 0; k <= opts.n_steps; ++k) {
        if (next < n_times && record_steps[next] == k) {
          Eigen::Map<Eigen::VectorXd>(slot + next * n, n) = x;
          ++next;
        }
        if (k == opts.n_steps) break;
        drift.noalias() = tables.closed_loop[k] * x;
        x += dt * drift;
        if (noisy) {
          for (Eigen::Index i = 0; i < m; ++i) xi(i) = normal();
          x.noalias() += tables.noise[k] * xi;
        }
        const double rate = x.dot(tables.cost_weight[k + 1] * x);
        cost += 0.5 * dt * (prev_rate + rate);
        prev_rate = rate;
      }
      result.path_costs[p] = cost;
    }
  };

  const int workers = worker_count(opts.threads, opts.n_paths);
  if (workers == 1) {
    run_paths(0, opts.n_paths);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (opts.n_paths + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(opts.n_paths, begin + chunk);
      if (begin < end) pool.emplace_back(run_paths, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t j = 0; j < n_times; ++j) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (int p = 0; p < opts.n_paths; ++p) mean += result.state(p, j);
    result.empirical_mean.push_back(mean / opts.n_paths);
    result.empirical_cov.push_back(empirical_covariance(result, result.grid[j]));
  }

  double sum = 0.0;
  for (double c : result.path_costs) sum += c;
  result.cost_estimate = sum / opts.n_paths;
  double sq = 0.0;
  for (double c : result.path_costs) sq += (c - result.cost_estimate) * (c - result.cost_estimate);
  result.cost_stderr = std::sqrt(sq / (opts.n_paths - 1) / opts.n_paths);
  return result;
}

Eigen::MatrixXd empirical_covariance(const SimulationResult& result, double t) {
  const auto it = std::find_if(result.grid.begin(), result.grid.end(),
                               [t](double g) { return std::abs(g - t) <= 1e-12; });
  if (it == result.grid.end()) throw DomainError("time is not a recorded checkpoint");
  if (result.n_paths < 1) throw DomainError("no paths recorded");
  const auto j = static_cast<std::size_t>(it - result.grid.begin());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(result.dim, result.dim);
  for (int p = 0; p < result.n_paths; ++p) {
    const auto x = result.state(p, j);
    cov.noalias() += x * x.transpose();
  }
  return symmetrize(cov / result.n_paths);
}

std::vector<TubeSlice> tolerance_tube(const BridgeSolution& solution,
                                      double level, int resolution) {
  if (!(level > 0.0) || resolution < 1) {
    throw DomainError("tube level and resolution must be positive");
  }
  if (solution.Sigma.empty() || solution.Sigma.front().rows() != 2) {
    throw UnsupportedDimensionError("tolerance tube is only defined for 2-dimensional states");
  }
  std::vector<TubeSlice> tube;
  tube.reserve(solution.grid.size());
  for (std::size_t k = 0; k < solution.grid.size(); ++k) {
    const Eigen::MatrixXd root = level * sqrt_spd(solution.Sigma[k]);
    TubeSlice slice;
    slice.t = solution.grid[k];
    slice.points.reserve(resolution);
    for (int j = 0; j < resolution; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / resolution;
      slice.points.emplace_back(root * Eigen::Vector2d(std::cos(theta), std::sin(theta)));
    }
    tube.push_back(std::move(slice));
  }
  return tube;
}

CostGapReport cost_gap(const SteeringProblem& problem,
                       const BridgeSolution& solution, double scale,
                       int n_paths, int n_steps, std::uint64_t seed,
                       int threads) {
  const Eigen::Index n = problem.sys.dim_state();
  NormalSource normal(path_stream_seed(seed, ~std::uint64_t{0}));
  Eigen::MatrixXd S(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) S(i, j) = normal();
  }
  S = symmetrize(S);
  S /= S.norm();

  BridgeSolution perturbed = solution;
  for (std::size_t k = 0; k < perturbed.grid.size(); ++k) {
    const double t = perturbed.grid[k];
    const Eigen::LLT<Eigen::MatrixXd> r_llt(problem.sys.R(t));
    perturbed.K[k] += scale * r_llt.solve(problem.sys.B(t).transpose() * S);
  }

  SimulationOptions opts;
  opts.n_paths = n_paths;
  opts.n_steps = n_steps;
  opts.seed = seed;
  opts.checkpoints = {0.0, 1.0};
  opts.threads = threads;
  const SimulationResult base = simulate(problem, solution, opts);
  const SimulationResult pert = simulate(problem, perturbed, opts);

  CostGapReport report;
  report.optimal_cost = base.cost_estimate;
  report.optimal_stderr = base.cost_stderr;
  report.perturbed_cost = pert.cost_estimate;
  report.perturbed_stderr = pert.cost_stderr;
  double sum = 0.0;
  for (int p = 0; p < n_paths; ++p) sum += pert.path_costs[p] - base.path_costs[p];
  report.gap = sum / n_paths;
  double sq = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    const double d = pert.path_costs[p] - base.path_costs[p] - report.gap;
    sq += d * d;
  }
  report.gap_stderr = std::sqrt(sq / (n_paths - 1) / n_paths);
  report.optimal_terminal_mismatch =
      relative_error(base.empirical_cov.back(), problem.sigma1);
  report.perturbed_terminal_mismatch =
      relative_error(pert.empirical_cov.back(), problem.sigma1);
  return report;
}

}  // namespace covsteer
