#pragma once

#include "flmcpd/fda_core.hpp"
#include "flmcpd/limit_dist.hpp"
#include "flmcpd/longrun.hpp"
#include "flmcpd/projection.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>

namespace flmcpd {

/// CUSUM of the gamma series: row n-1 holds
/// N^{-1/2} [ sum_{l <= n} gamma_l - (n/N) sum_{l <= N} gamma_l ].
/// Both terms are computed even though the total is ~0 for least-squares
/// residuals.
Eigen::MatrixXd cusum_path(const GammaSeries& gammas);

/// Euclidean norm of N^{-1/2} sum_l gamma_l, the size of the second CUSUM term at t = 1.
double cusum_second_term_norm(const GammaSeries& gammas);

/// V_N(n/N) = path_n^T Sigma^+ path_n for every row.
Eigen::VectorXd quadratic_detector(const Eigen::MatrixXd& path, const LongRunCov& lrc);

struct DetectorStatistics {
  double integral = 0.0;  // (1/N) sum_n V_N(n/N)
  double sup = 0.0;
  double argmax_t = 0.0;  // smallest maximizing n, divided by N
};

DetectorStatistics test_statistics(const Eigen::VectorXd& v_quad);

struct DetectorPath {
  Eigen::VectorXd t_points;  // n/N, n = 1..N
  Eigen::MatrixXd v_tilde;   // N x pq
  Eigen::VectorXd v_quad;    // N
  DetectorStatistics stats;
};

struct DetectorDiagnostics {
  double second_term_norm = 0.0;
  double lrc_condition = 0.0;
  double bandwidth = 0.0;
  std::size_t lrc_rank = 0;
  bool regularized = false;
  bool indefinite = false;
  bool bandwidth_too_wide = false;
  bool near_tie_x = false;
  bool near_tie_y = false;
};

struct DetectorRun {
  DetectorPath path;
  BetaMatrix beta;
  LongRunCov lrc;
  DetectorDiagnostics diagnostics;
};

/// Pipeline from fixed bases: scores, least squares, residual curves, gamma
/// series, long-run covariance, CUSUM path and detector.
DetectorRun detector_from_bases(const FunctionalSample& x, const FunctionalSample& y,
                                const EigenSystem& v_basis, const EigenSystem& w_basis,
                                const KernelSpec& kernel, const BandwidthRule& bandwidth);

/// Full pipeline: centers both samples, estimates p eigenfunctions of the X
/// covariance and q of the Y covariance, then runs detector_from_bases.
DetectorRun compute_detector(const FunctionalSample& x, const FunctionalSample& y, std::size_t p,
                             std::size_t q, const KernelSpec& kernel, const BandwidthRule& bandwidth);

struct TestConfig {
  std::size_t p = 1;
  std::size_t q = 1;
  KernelSpec kernel;
  BandwidthRule bandwidth;
  Functional functional = Functional::Integral;
  double alpha = 0.05;
};

struct TestResult {
  double statistic = 0.0;
  Functional functional = Functional::Integral;
  double alpha = 0.05;
  double critical_value = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double argmax_t = 0.0;  // heuristic change location
  TestConfig config;
  LimitKey limit;
  std::size_t sample_size = 0;
  std::size_t grid_size = 0;
  DetectorDiagnostics diagnostics;
};

/// Throws ConfigError unless x and y have equal N, p and q are positive and
/// N > max(p, q) + 2; AlphaOutOfRange for alpha outside (0, 1).
void validate_test_inputs(const FunctionalSample& x, const FunctionalSample& y, const TestConfig& config);

/// End-to-end test. `limit` must describe the law for pq = p * q and the
/// configured functional.
TestResult run_test(const FunctionalSample& x, const FunctionalSample& y, const TestConfig& config,
                    const LimitQuantiles& limit);

/// Statistic, critical value, p-value and decision for an already computed run.
TestResult decide(const DetectorRun& run, const TestConfig& config, const LimitQuantiles& limit);

std::string to_json(const TestResult& result, int indent = 2);

}  // namespace flmcpd
