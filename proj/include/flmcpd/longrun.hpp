#pragma once

#include "flmcpd/projection.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <string_view>

namespace flmcpd {

enum class KernelKind { FlatTop, Bartlett, Parzen };

/// Lag-window kernel K with K(0) = 1, K symmetric and compactly supported.
struct KernelSpec {
  KernelKind kind = KernelKind::FlatTop;

  /// |u| beyond which K vanishes.
  double support() const;
  std::string name() const;

  /// Accepts "flattop" (also "flat_top", "flat-top"), "bartlett", "parzen".
  static KernelSpec parse(std::string_view text);
};

double kernel_eval(const KernelSpec& spec, double u);

enum class BandwidthKind { Fixed, CubeRootOver4, Power };

/// Lag scale B_N as a function of the sample size.
struct BandwidthRule {
  BandwidthKind kind = BandwidthKind::CubeRootOver4;
  double value = 0.0;     // Fixed: h
  double scale = 0.25;    // Power: c in c * N^a
  double exponent = 1.0 / 3.0;

  /// N^{1/3} / 4 floored at 1, fixed h, or c * N^a.
  double evaluate(std::size_t n) const;
  /// True when B_N >= sqrt(N), outside the regime where the estimator is consistent.
  bool too_wide(std::size_t n) const;
  std::string describe() const;

  /// Accepts "n13over4", "fixed:<h>", "pow:<c>,<a>".
  static BandwidthRule parse(std::string_view text);
};

/// phi_k = (1/N) sum_l gamma_l gamma_{l+k}^T over all valid l. Divides by N,
/// not by the number of terms.
Eigen::MatrixXd lag_autocovariance(const GammaSeries& gammas, long lag);

/// sum_{|k| <= max_lag} K(k / bandwidth) phi_k, accumulated in ascending k
/// as phi_0 + sum_{k >= 1} K(k / B)(phi_k + phi_k^T).
Eigen::MatrixXd kernel_weighted_sum(const GammaSeries& gammas, const KernelSpec& spec,
                                    double bandwidth, std::size_t max_lag);

struct LongRunCov {
  Eigen::MatrixXd matrix;   // symmetric pq x pq estimate
  Eigen::MatrixXd inverse;  // Moore-Penrose pseudo-inverse
  std::size_t rank = 0;
  double condition = 0.0;   // largest |eig| over smallest retained |eig|
  double bandwidth = 0.0;   // evaluated B_N
  bool regularized = false; // some eigenvalue fell below the relative threshold
  bool indefinite = false;  // a retained eigenvalue is negative
  bool bandwidth_too_wide = false;
};

inline constexpr double kPseudoInverseThreshold = 1e-10;

/// Kernel estimate of the long-run covariance of the gamma series. The sum is
/// truncated at the kernel support, which leaves the result unchanged.
/// Throws DegenerateSeries for an all-zero series and RankDeficient when fewer
/// than half of the eigenvalues survive the pseudo-inverse threshold.
LongRunCov long_run_cov(const GammaSeries& gammas, const KernelSpec& spec, const BandwidthRule& rule);

/// Pseudo-inverse bookkeeping for an already assembled symmetric matrix.
LongRunCov invert_long_run(Eigen::MatrixXd matrix);

}  // namespace flmcpd
