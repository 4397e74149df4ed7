#pragma once

#include "flmcpd/fda_core.hpp"

#include <Eigen/Dense>

#include <cstddef>

namespace flmcpd {

/// N x k matrix of projections <curve_n, basis_j>.
struct ScoreMatrix {
  Eigen::MatrixXd values;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(values.cols()); }
};

/// Least-squares coefficients in the projected model, stored as a q x p
/// matrix. The vectorized form is row-major: index i * p + j holds psi(i, j).
struct BetaMatrix {
  Eigen::MatrixXd psi_hat;  // q x p

  std::size_t q() const { return static_cast<std::size_t>(psi_hat.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(psi_hat.cols()); }
  Eigen::VectorXd vec() const;
};

/// Row l is vec of gamma_l(i, j) = <X_l, v_j> <eps_l, w_i>, row-major in (i, j).
struct GammaSeries {
  Eigen::MatrixXd values;  // N x pq

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(values.cols()); }
};

ScoreMatrix compute_scores(const FunctionalSample& sample, const EigenSystem& basis);

inline constexpr double kMaxGramCondition = 1e12;

/// Fits the projected regression y_scores(n) = psi_hat * x_scores(n).
///
/// The full design is Z(n) = I_q (x) M(n), so its Gram matrix is
/// I_q (x) sum_n M(n)^T M(n): the pq-dimensional system splits into q
/// p-dimensional systems that share one Cholesky factor.
BetaMatrix fit_beta(const ScoreMatrix& x_scores, const ScoreMatrix& y_scores);

/// eps_l(t) = Y_l(t) - sum_ij psi_hat(i, j) w_i(t) <X_l, v_j>.
FunctionalSample residual_curves(const FunctionalSample& y_sample, const ScoreMatrix& x_scores,
                                 const BetaMatrix& beta, const EigenSystem& w_basis);

/// Gamma series from residual curves, projecting each residual on w_i by quadrature.
GammaSeries gamma_series(const ScoreMatrix& x_scores, const FunctionalSample& residuals,
                         const EigenSystem& w_basis);

/// Gamma series computed in score space: <eps_l, w_i> = <Y_l, w_i> - sum_j psi(i, j) <X_l, v_j>.
/// Agrees with gamma_series() up to the quadrature orthonormality error of w.
GammaSeries gamma_series_from_scores(const ScoreMatrix& x_scores, const ScoreMatrix& y_scores,
                                     const BetaMatrix& beta);

}  // namespace flmcpd
