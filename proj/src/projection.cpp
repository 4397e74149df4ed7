#include "flmcpd/projection.hpp"

#include "flmcpd/error.hpp"

#include <string>

namespace flmcpd {

namespace {

GammaSeries outer_rows(const Eigen::MatrixXd& x, const Eigen::MatrixXd& e) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const Eigen::Index q = e.cols();
  GammaSeries out{Eigen::MatrixXd(n, p * q)};
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      out.values.col(i * p + j) = x.col(j).cwiseProduct(e.col(i));
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd BetaMatrix::vec() const {
  Eigen::VectorXd out(psi_hat.size());
  for (Eigen::Index i = 0; i < psi_hat.rows(); ++i) {
    for (Eigen::Index j = 0; j < psi_hat.cols(); ++j) out[i * psi_hat.cols() + j] = psi_hat(i, j);
  }
  return out;
}

ScoreMatrix compute_scores(const FunctionalSample& sample, const EigenSystem& basis) {
  if (!(sample.grid() == basis.grid)) {
    throw Error(ErrorKind::GridMismatch, "sample and basis use different grids");
  }
  const Eigen::MatrixXd weighted_basis = basis.eigenfunctions * sample.grid().weights().asDiagonal();
  return {sample.values() * weighted_basis.transpose()};
}

BetaMatrix fit_beta(const ScoreMatrix& x_scores, const ScoreMatrix& y_scores) {
  const Eigen::Index n = x_scores.values.rows();
  const Eigen::Index p = x_scores.values.cols();
  if (y_scores.values.rows() != n) {
    throw Error(ErrorKind::DimensionMismatch, "x and y scores have different sample sizes");
  }
  if (p < 1 || y_scores.values.cols() < 1) {
    throw Error(ErrorKind::DimensionMismatch, "empty score matrix");
  }
  if (n <= p) {
    throw Error(ErrorKind::SingularDesign, "need N > p, got N=" + std::to_string(n) +
                                               " p=" + std::to_string(p));
  }
  const Eigen::MatrixXd gram = x_scores.values.transpose() * x_scores.values;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectrum(gram, Eigen::EigenvaluesOnly);
  const double smallest = spectrum.eigenvalues().minCoeff();
  const double largest = spectrum.eigenvalues().maxCoeff();
  if (!(smallest > 0.0) || largest / smallest >= kMaxGramCondition) {
    throw Error(ErrorKind::SingularDesign, "score Gram matrix is singular or ill-conditioned");
  }
  const Eigen::LLT<Eigen::MatrixXd> factor(gram);
  if (factor.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularDesign, "Cholesky factorization of the score Gram matrix failed");
  }
  // Column i of the solution is the p-vector of coefficients for response score i.
  const Eigen::MatrixXd coefficients = factor.solve(x_scores.values.transpose() * y_scores.values);
  return {coefficients.transpose()};
}

FunctionalSample residual_curves(const FunctionalSample& y_sample, const ScoreMatrix& x_scores,
                                 const BetaMatrix& beta, const EigenSystem& w_basis) {
  if (!(y_sample.grid() == w_basis.grid)) {
    throw Error(ErrorKind::GridMismatch, "response sample and w basis use different grids");
  }
  if (x_scores.size() != y_sample.size() || x_scores.dimension() != beta.p() ||
      w_basis.count() != beta.q()) {
    throw Error(ErrorKind::DimensionMismatch, "residual inputs have inconsistent dimensions");
  }
  const Eigen::MatrixXd fitted_scores = x_scores.values * beta.psi_hat.transpose();  // N x q
  Eigen::MatrixXd residuals = y_sample.values() - fitted_scores * w_basis.eigenfunctions;
  return FunctionalSample(y_sample.grid(), std::move(residuals));
}

GammaSeries gamma_series(const ScoreMatrix& x_scores, const FunctionalSample& residuals,
                         const EigenSystem& w_basis) {
  if (x_scores.size() != residuals.size()) {
    throw Error(ErrorKind::DimensionMismatch, "scores and residuals have different sample sizes");
  }
  const ScoreMatrix residual_scores = compute_scores(residuals, w_basis);
  return outer_rows(x_scores.values, residual_scores.values);
}

GammaSeries gamma_series_from_scores(const ScoreMatrix& x_scores, const ScoreMatrix& y_scores,
                                     const BetaMatrix& beta) {
  if (x_scores.size() != y_scores.size() || x_scores.dimension() != beta.p() ||
      y_scores.dimension() != beta.q()) {
    throw Error(ErrorKind::DimensionMismatch, "score inputs have inconsistent dimensions");
  }
  const Eigen::MatrixXd residual_scores = y_scores.values - x_scores.values * beta.psi_hat.transpose();
  return outer_rows(x_scores.values, residual_scores);
}

}  // namespace flmcpd
