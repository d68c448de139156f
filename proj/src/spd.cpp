#include "covsteer/spd.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "covsteer/errors.hpp"

namespace covsteer {
namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> checked_spectrum(
    const Eigen::MatrixXd& S, double tol) {
  if (S.rows() != S.cols() || S.rows() == 0) {
    throw DomainError("expected a non-empty square matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(S));
  if (es.info() != Eigen::Success) {
    throw SingularityError("symmetric eigendecomposition failed");
  }
  const double lo = es.eigenvalues()(0);
  if (!(lo > tol)) {
    std::ostringstream msg;
    msg << "matrix is not positive definite: smallest eigenvalue " << lo;
    throw DefinitenessError(msg.str(), lo);
  }
  return es;
}

}  // namespace

double asymmetry(const Eigen::MatrixXd& S) {
  return (S - S.transpose()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
             symmetrize(symmetric), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

double max_eigenvalue(const Eigen::MatrixXd& symmetric) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
             symmetrize(symmetric), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

Eigen::MatrixXd sqrt_spd(const Eigen::MatrixXd& S, double tol) {
  const auto es = checked_spectrum(S, tol);
  const Eigen::MatrixXd& V = es.eigenvectors();
  return symmetrize(V * es.eigenvalues().cwiseSqrt().asDiagonal() *
                    V.transpose());
}

Eigen::MatrixXd inv_sqrt_spd(const Eigen::MatrixXd& S, double tol) {
  const auto es = checked_spectrum(S, tol);
  const Eigen::MatrixXd& V = es.eigenvectors();
  return symmetrize(V * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                    V.transpose());
}

Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& S, double tol) {
  const auto es = checked_spectrum(S, tol);
  const Eigen::MatrixXd& V = es.eigenvectors();
  return symmetrize(V * es.eigenvalues().cwiseInverse().asDiagonal() *
                    V.transpose());
}

double condition_number(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  if (smallest == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smallest;
}

Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& M, double max_condition,
                                const char* what) {
  if (M.rows() != M.cols()) throw DomainError("inverse of non-square matrix");
  const double cond = condition_number(M);
  if (!(cond <= max_condition)) {
    std::ostringstream msg;
    msg << what << " is ill-conditioned (condition number " << cond << ")";
    throw ConditioningError(msg.str(), cond);
  }
  return M.partialPivLu().inverse();
}

double relative_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const double diff = (A - B).norm();
  const double scale = B.norm();
  return scale > 0.0 ? diff / scale : diff;
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n,
                           double max_condition) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  }
  const Eigen::MatrixXd q = g.householderQr().householderQ();
  const double log_cond = std::log10(std::max(1.0, max_condition));
  const double scale = std::pow(10.0, 2.0 * unit(rng) - 1.0);
  Eigen::VectorXd eig(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    eig(i) = scale * std::pow(10.0, log_cond * unit(rng));
  }
  if (n > 1) {
    // Pin the extremes so the requested spread is actually reached.
    eig(0) = scale;
    eig(1) = scale * std::pow(10.0, log_cond);
  }
  return symmetrize(q * eig.asDiagonal() * q.transpose());
}

}  // namespace covsteer
