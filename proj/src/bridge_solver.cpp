#include "covsteer/bridge_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "covsteer/errors.hpp"
#include "covsteer/rk4.hpp"

namespace covsteer {
namespace {

Eigen::MatrixXd identity_like(const Eigen::MatrixXd& M) {
  return Eigen::MatrixXd::Identity(M.rows(), M.cols());
}

Eigen::MatrixXd interpolate(const std::vector<double>& grid,
                            const std::vector<Eigen::MatrixXd>& values,
                            double t) {
  if (grid.empty()) throw DomainError("empty solution grid");
  if (!(t >= grid.front() - 1e-12 && t <= grid.back() + 1e-12)) {
    throw DomainError("time outside the solution grid");
  }
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  if (it == grid.end()) return values.back();
  if (it == grid.begin()) return values.front();
  const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double w = (t - grid[i]) / (grid[i + 1] - grid[i]);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

void require_spd(const Eigen::MatrixXd& S, Eigen::Index n, const char* what,
                 double tol) {
  if (S.rows() != n || S.cols() != n) {
    throw DomainError(std::string(what) + " has the wrong dimensions");
  }
  if (!S.allFinite()) throw DomainError(std::string(what) + " has non-finite entries");
  const double lo = min_eigenvalue(S);
  if (!(lo > tol)) {
    std::ostringstream msg;
    msg << what << " is not positive definite (smallest eigenvalue " << lo << ")";
    throw DefinitenessError(msg.str(), lo);
  }
}

using MatrixLd = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

MatrixLd symmetrize_ld(const MatrixLd& S) { return 0.5L * (S + S.transpose()); }

// f applied to the eigenvalues of a symmetric positive definite S.
template <class F>
MatrixLd spectral_ld(const MatrixLd& S, F f) {
  const Eigen::SelfAdjointEigenSolver<MatrixLd> eig(S);
  if (eig.info() != Eigen::Success) throw SingularityError("eigendecomposition failed");
  if (!(eig.eigenvalues().minCoeff() > 0.0L)) {
    throw DefinitenessError("matrix is not positive definite",
                            static_cast<double>(eig.eigenvalues().minCoeff()));
  }
  const Eigen::Matrix<long double, Eigen::Dynamic, 1> d = eig.eigenvalues().unaryExpr(f);
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

void SteeringProblem::validate(double definiteness_tol) const {
  const Eigen::Index n = sys.dim_state();
  require_spd(sigma0, n, "Sigma0", definiteness_tol);
  require_spd(sigma1, n, "Sigma1", definiteness_tol);
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("noise intensity epsilon must be finite and nonnegative");
  }
}

Eigen::MatrixXd BridgeSolution::gain_at(double t) const {
  return interpolate(grid, K, t);
}

Eigen::MatrixXd BridgeSolution::sigma_at(double t) const {
  return interpolate(grid, Sigma, t);
}

Lemma1Sides lemma1_sides(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.rows() != Y.rows() || X.cols() != Y.cols()) {
    throw DomainError("lemma1: X and Y must have equal size");
  }
  require_spd(symmetrize(X), X.rows(), "lemma1 X", 0.0);
  require_spd(symmetrize(Y), Y.rows(), "lemma1 Y", 0.0);
  // Both sides lose about cond(X)*cond(Y)*eps in double, which is above 1e-10
  // at condition numbers near 1e4; evaluate in extended precision and round
  // once at the end.
  const MatrixLd x = symmetrize_ld(X.cast<long double>());
  const MatrixLd y = symmetrize_ld(Y.cast<long double>());
  const MatrixLd I = MatrixLd::Identity(x.rows(), x.cols());
  const auto pow_of = [](long double p) { return [p](long double v) { return std::pow(v, p); }; };

  // Y^-1/2 X^-1 Y^-1 X^-1 Y^-1/2 = G^2 with G = Y^-1/2 X^-1 Y^-1/2.
  const MatrixLd y_half = spectral_ld(y, pow_of(0.5L));
  const MatrixLd y_inv_half = spectral_ld(y, pow_of(-0.5L));
  const MatrixLd G = symmetrize_ld(y_inv_half * spectral_ld(x, pow_of(-1.0L)) * y_inv_half);
  const MatrixLd lhs =
      y_half * spectral_ld(G, [](long double g) { return std::sqrt(g + 0.25L * g * g); }) * y_half;

  const MatrixLd x_half = spectral_ld(x, pow_of(0.5L));
  const MatrixLd x_inv_half = spectral_ld(x, pow_of(-0.5L));
  const MatrixLd inner = symmetrize_ld(0.25L * I + x_half * y * x_half);
  const MatrixLd rhs = x_inv_half * spectral_ld(inner, pow_of(0.5L)) * x_inv_half;
  return {symmetrize_ld(lhs).cast<double>(), symmetrize_ld(rhs).cast<double>()};
}

double lemma1_residual(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  const auto sides = lemma1_sides(X, Y);
  return (sides.lhs - sides.rhs).cwiseAbs().maxCoeff();
}

CouplingRoots coupling_roots(const Eigen::MatrixXd& sigma0,
                             const Eigen::MatrixXd& sigma1,
                             const BlockTransition& phi, double epsilon,
                             const SolverOptions& opts) {
  const Eigen::MatrixXd phi12_inv =
      checked_inverse(phi.phi12, opts.max_condition, "Phi12");
  CouplingRoots roots;
  roots.center = symmetrize(-phi12_inv * phi.phi11);
  roots.T_weight = symmetrize(phi12_inv * sigma1 * phi12_inv.transpose());

  const Eigen::MatrixXd s0_half = sqrt_spd(sigma0);
  const Eigen::MatrixXd s0_inv_half = inv_sqrt_spd(sigma0);
  const Eigen::MatrixXd inner =
      (0.25 * epsilon * epsilon) * identity_like(sigma0) +
      s0_half * roots.T_weight * s0_half;
  roots.root_term = symmetrize(s0_inv_half * sqrt_spd(inner) * s0_inv_half);
  roots.Z_minus = roots.center - roots.root_term;
  roots.Z_plus = roots.center + roots.root_term;
  return roots;
}

Eigen::MatrixXd coupling_root_term_via_weight(const Eigen::MatrixXd& sigma0,
                                              const Eigen::MatrixXd& T_weight,
                                              double epsilon) {
  if (!(epsilon > 0.0)) {
    throw DomainError("the T-weight form of the coupling root needs epsilon > 0");
  }
  return lemma1_sides(sigma0 / epsilon, T_weight / epsilon).lhs;
}

InitialConditions initial_conditions(const SteeringProblem& problem,
                                     const BlockTransition& phi,
                                     const SolverOptions& opts) {
  problem.validate();
  const auto roots = coupling_roots(problem.sigma0, problem.sigma1, phi,
                                    problem.epsilon, opts);
  const Eigen::MatrixXd scaled_inv0 = problem.epsilon * inverse_spd(problem.sigma0);
  InitialConditions ic;
  ic.Pi0 = symmetrize(0.5 * scaled_inv0 + roots.Z_minus);
  ic.H0 = symmetrize(scaled_inv0 - ic.Pi0);
  return ic;
}

Eigen::MatrixXd riccati_rhs_pi(const TimeVaryingLinearSystem& sys, double t,
                               const Eigen::MatrixXd& Pi) {
  const Eigen::MatrixXd a = sys.A(t);
  const Eigen::MatrixXd n = sys.weighted_input_gramian_rate(t);
  return symmetrize(-(a.transpose() * Pi + Pi * a - Pi * n * Pi + sys.Q(t)));
}

Eigen::MatrixXd riccati_rhs_h(const TimeVaryingLinearSystem& sys, double t,
                              const Eigen::MatrixXd& H) {
  const Eigen::MatrixXd a = sys.A(t);
  const Eigen::MatrixXd n = sys.weighted_input_gramian_rate(t);
  return symmetrize(-(a.transpose() * H + H * a + H * n * H - sys.Q(t)));
}

Eigen::MatrixXd covariance_rhs(const TimeVaryingLinearSystem& sys, double t,
                               const Eigen::MatrixXd& Pi,
                               const Eigen::MatrixXd& Sigma, double epsilon) {
  const Eigen::MatrixXd n = sys.weighted_input_gramian_rate(t);
  const Eigen::MatrixXd closed = sys.A(t) - n * Pi;
  return symmetrize(closed * Sigma + Sigma * closed.transpose() + epsilon * n);
}

BridgeSolution solve(const SteeringProblem& problem, int grid_size,
                     const SolverOptions& opts) {
  if (grid_size <= 0) throw DomainError("grid_size must be positive");
  problem.validate();
  const auto& sys = problem.sys;
  const Eigen::Index n = sys.dim_state();
  const double eps = problem.epsilon;
  const IntegrationOptions integration{grid_size};

  const auto controllability =
      check_controllability(sys, {{0.0, 1.0}}, opts.controllability_tol, integration);
  if (!controllability.all_pass()) {
    std::ostringstream msg;
    msg << "system is not controllable on [0, 1]: smallest Gramian eigenvalue "
        << controllability.min_eigenvalue();
    throw ControllabilityError(msg.str());
  }

  const BlockTransition phi = transition(sys, 0.0, 1.0, integration);
  BridgeSolution sol;
  sol.epsilon = eps;
  sol.diagnostics.symplectic_residual = symplectic_residual(phi);
  sol.diagnostics.roots =
      coupling_roots(problem.sigma0, problem.sigma1, phi, eps, opts);
  const InitialConditions ic = initial_conditions(problem, phi, opts);

  // Π, H and Σ advance together so Σ sees Π at the RK4 stage times.
  const auto rhs = [&](double t, const Eigen::MatrixXd& y) -> Eigen::MatrixXd {
    Eigen::MatrixXd dy(n, 3 * n);
    const auto pi = y.leftCols(n);
    dy.leftCols(n) = riccati_rhs_pi(sys, t, pi);
    dy.middleCols(n, n) = riccati_rhs_h(sys, t, y.middleCols(n, n));
    dy.rightCols(n) = covariance_rhs(sys, t, pi, y.rightCols(n), eps);
    return dy;
  };

  Eigen::MatrixXd y(n, 3 * n);
  y << ic.Pi0, ic.H0, symmetrize(problem.sigma0);
  const double h = 1.0 / grid_size;
  const auto record = [&](double t) {
    sol.grid.push_back(t);
    sol.Pi.push_back(y.leftCols(n));
    sol.H.push_back(y.middleCols(n, n));
    sol.Sigma.push_back(y.rightCols(n));
  };
  sol.grid.reserve(grid_size + 1);
  record(0.0);
  double drift = 0.0;
  for (int k = 0; k < grid_size; ++k) {
    y = rk4_step(rhs, k * h, y, h);
    for (Eigen::Index b = 0; b < 3; ++b) {
      auto block = y.middleCols(b * n, n);
      drift = std::max(drift, asymmetry(block));
      block = symmetrize(block).eval();
    }
    record(k + 1 == grid_size ? 1.0 : (k + 1) * h);
  }
  sol.diagnostics.symmetry_drift = drift;

  sol.K.reserve(sol.grid.size());
  double min_sigma = std::numeric_limits<double>::infinity();
  double sum_law = 0.0;
  std::vector<double> running_cost;
  running_cost.reserve(sol.grid.size());
  for (std::size_t k = 0; k < sol.grid.size(); ++k) {
    const double t = sol.grid[k];
    const Eigen::MatrixXd r = sys.R(t);
    const Eigen::LLT<Eigen::MatrixXd> r_llt(r);
    const Eigen::MatrixXd gain = r_llt.solve(sys.B(t).transpose() * sol.Pi[k]);
    sol.K.push_back(gain);
    const double lo = min_eigenvalue(sol.Sigma[k]);
    min_sigma = std::min(min_sigma, lo);
    running_cost.push_back(
        ((gain.transpose() * r * gain + sys.Q(t)) * sol.Sigma[k]).trace());
    if (eps > 0.0 && lo > 0.0) {
      const Eigen::MatrixXd target = eps * inverse_spd(sol.Sigma[k]);
      sum_law = std::max(sum_law, relative_error(sol.Pi[k] + sol.H[k], target));
    }
  }
  sol.diagnostics.min_sigma_eigenvalue = min_sigma;
  sol.diagnostics.sum_law_residual = sum_law;
  double cost = 0.0;
  for (std::size_t k = 1; k < running_cost.size(); ++k) {
    cost += 0.5 * (sol.grid[k] - sol.grid[k - 1]) *
            (running_cost[k] + running_cost[k - 1]);
  }
  sol.diagnostics.expected_cost = cost;

  sol.boundary_residuals = {relative_error(sol.Sigma.front(), problem.sigma0),
                            relative_error(sol.Sigma.back(), problem.sigma1)};
  const Eigen::MatrixXd terminal_target = eps * inverse_spd(problem.sigma1);
  const double coupled_abs = (sol.Pi.back() + sol.H.back() - terminal_target).norm();
  const double coupled_scale = terminal_target.norm();
  sol.diagnostics.coupled_boundary_residual =
      coupled_scale > 0.0 ? coupled_abs / coupled_scale : coupled_abs;

  const bool boundary_ok = sol.boundary_residuals.first <= opts.rtol &&
                           sol.boundary_residuals.second <= opts.rtol;
  const bool coupled_ok = coupled_abs <= opts.atol + opts.rtol * coupled_scale;
  if (!boundary_ok || !coupled_ok) {
    std::ostringstream msg;
    msg << "boundary residuals exceed tolerance: Sigma(1) relative error "
        << sol.boundary_residuals.second << ", coupled boundary residual "
        << sol.diagnostics.coupled_boundary_residual;
    throw ResidualError(msg.str(), std::move(sol));
  }
  return sol;
}

EscapeReport spurious_root_escape(const SteeringProblem& problem,
                                  const std::vector<BlockTransition>& checkpoints,
                                  Branch branch, const SolverOptions& opts) {
  if (checkpoints.empty() || checkpoints.front().s != 0.0 ||
      std::abs(checkpoints.back().t - 1.0) > 1e-12) {
    throw DomainError("escape check needs checkpoints of Phi(t, 0) ending at t = 1");
  }
  problem.validate();
  const auto roots = coupling_roots(problem.sigma0, problem.sigma1,
                                    checkpoints.back(), problem.epsilon, opts);
  const Eigen::MatrixXd y0 =
      0.5 * problem.epsilon * inverse_spd(problem.sigma0) + roots.root(branch);

  EscapeReport report;
  report.branch = branch;
  report.min_abs_det = std::numeric_limits<double>::infinity();
  report.first_crossing = std::numeric_limits<double>::quiet_NaN();
  double prev_t = 0.0;
  double prev_det = 1.0;  // X(0) = I
  for (const auto& bt : checkpoints) {
    if (bt.t <= 0.0) continue;
    const double det = (bt.phi11 + bt.phi12 * y0).determinant();
    report.min_abs_det = std::min(report.min_abs_det, std::abs(det));
    if ((det > 0.0) != (prev_det > 0.0) || det == 0.0) {
      if (report.sign_changes == 0) {
        report.first_crossing =
            det == prev_det ? bt.t
                            : prev_t + (bt.t - prev_t) * prev_det / (prev_det - det);
      }
      ++report.sign_changes;
    }
    prev_t = bt.t;
    prev_det = det;
  }
  return report;
}

InitialConditions corollary_q_zero(const SteeringProblem& problem,
                                   const IntegrationOptions& integration,
                                   const SolverOptions& opts) {
  problem.validate();
  const auto& sys = problem.sys;
  const int samples = std::max(1, integration.steps);
  for (int k = 0; k <= samples; ++k) {
    const double t = static_cast<double>(k) / samples;
    if (sys.Q(t).cwiseAbs().maxCoeff() != 0.0) {
      throw DomainError("closed-form route requires Q identically zero");
    }
  }
  const Eigen::MatrixXd psi = state_transition(sys, 1.0, 0.0, integration);
  const Eigen::MatrixXd gramian =
      reachability_gramian(sys, 1.0, 0.0, integration, /*input_weighted=*/true);
  const Eigen::MatrixXd gramian_inv =
      checked_inverse(gramian, opts.max_condition, "reachability Gramian");

  const double eps = problem.epsilon;
  const Eigen::MatrixXd s0_half = sqrt_spd(problem.sigma0);
  const Eigen::MatrixXd s0_inv_half = inv_sqrt_spd(problem.sigma0);
  const Eigen::MatrixXd scaled_inv0 = eps * inverse_spd(problem.sigma0);
  const Eigen::MatrixXd center =
      symmetrize(psi.transpose() * gramian_inv * psi);
  const Eigen::MatrixXd weight = symmetrize(
      psi.transpose() * gramian_inv * problem.sigma1 * gramian_inv * psi);
  const Eigen::MatrixXd inner = (0.25 * eps * eps) * identity_like(weight) +
                                s0_half * weight * s0_half;

  InitialConditions ic;
  ic.Pi0 = symmetrize(0.5 * scaled_inv0 + center -
                      s0_inv_half * sqrt_spd(inner) * s0_inv_half);
  ic.H0 = symmetrize(scaled_inv0 - ic.Pi0);
  return ic;
}

bool SweepTable::monotone() const {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].gap > rows[i - 1].gap) return false;
  }
  return true;
}

SweepTable epsilon_sweep(const SteeringProblem& problem,
                         const std::vector<double>& epsilons, int grid_size,
                         const SolverOptions& opts) {
  if (epsilons.empty()) throw DomainError("epsilon list is empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] >= 0.0)) throw DomainError("epsilon values must be nonnegative");
    if (i > 0 && epsilons[i] > epsilons[i - 1]) {
      throw DomainError("epsilon list must be sorted in descending order");
    }
  }
  const BlockTransition phi =
      transition(problem.sys, 0.0, 1.0, IntegrationOptions{grid_size});
  SteeringProblem noiseless = problem;
  noiseless.epsilon = 0.0;
  const Eigen::MatrixXd reference = initial_conditions(noiseless, phi, opts).Pi0;

  SweepTable table;
  for (double eps : epsilons) {
    SteeringProblem p = problem;
    p.epsilon = eps;
    SweepRow row;
    row.epsilon = eps;
    row.Pi0 = initial_conditions(p, phi, opts).Pi0;
    row.gap = (row.Pi0 - reference).norm();
    row.gap_ratio = eps > 0.0 ? row.gap / eps : 0.0;
    const auto fill = [&row](const BridgeSolution& s) {
      row.boundary_residuals = s.boundary_residuals;
      row.coupled_boundary_residual = s.diagnostics.coupled_boundary_residual;
    };
    try {
      fill(solve(p, grid_size, opts));
    } catch (const ResidualError& e) {
      fill(e.solution());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace covsteer
