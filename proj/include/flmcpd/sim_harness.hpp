#pragma once

#include "flmcpd/detector.hpp"
#include "flmcpd/fda_core.hpp"
#include "flmcpd/limit_dist.hpp"
#include "flmcpd/longrun.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace flmcpd {

/// psi(s, t) = exp(-(s - t)^2).
double psi_gauss(double s, double t);

using KernelFunction = std::function<double(double, double)>;

/// Quadrature of y(t) = int psi(s, t) x(s) ds on the curve's grid.
Curve apply_operator(const KernelFunction& psi, const Curve& x);

/// M(a, g) = w_a psi(s_a, t_g), so that Y = X * M applies the operator to every row of X.
Eigen::MatrixXd operator_matrix(const KernelFunction& psi, const Grid& grid);

struct SimConfig {
  std::size_t n = 1000;
  std::size_t grid_size = kDefaultGridSize;
  std::size_t p = 1;
  std::size_t q = 1;
  double c = 1.0;
  double change_fraction = 0.5;
  std::size_t reps = 1000;
  std::vector<double> alphas{0.01, 0.05, 0.10};
  KernelSpec kernel;
  BandwidthRule bandwidth;
  Functional functional = Functional::Integral;
  std::uint64_t master_seed = 1;
};

/// Throws ConfigError for N < 20, reps < 1, change_fraction outside (0, 1],
/// c <= 0, alphas outside (0, 1), or N <= max(p, q) + 2.
void validate(const SimConfig& config);

struct SimDataset {
  FunctionalSample x;
  FunctionalSample y;
};

/// X_n and eps_n are independent standard Brownian bridges drawn from
/// substreams 0 and 1 of RandomStream(master_seed, rep_index). Curves
/// n <= floor(N * change_fraction) use psi_gauss; later ones use c * psi_gauss.
SimDataset generate_dataset(const SimConfig& config, std::size_t rep_index);

struct PowerRow {
  double c = 1.0;
  std::size_t n = 0;
  double alpha = 0.05;
  double reject_rate_pct = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::size_t failures = 0;
  std::size_t regularized = 0;
};

struct PowerTable {
  std::vector<PowerRow> rows;
  SimConfig config;  // echo of the base configuration
};

struct PowerStudy {
  PowerTable table;
  std::vector<double> statistics;            // per replication; NaN for failed reps
  std::vector<std::vector<bool>> rejections;  // [rep][alpha index]
  std::size_t failures = 0;
  std::size_t regularized = 0;
  std::size_t indefinite = 0;
};

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

/// Replicates generate -> test `config.reps` times and tabulates rejection
/// rates for every alpha. Failed replications count as non-rejections and
/// are reported in `failures`. Results do not depend on `threads`.
PowerStudy run_power_study(const SimConfig& config, const LimitQuantiles& limit, unsigned threads = 1,
                           const ProgressCallback& progress = {});

/// Runs the study for every (c, N) pair and concatenates the rows.
PowerTable run_power_sweep(const SimConfig& base, const std::vector<double>& cs,
                           const std::vector<std::size_t>& ns, const LimitQuantiles& limit,
                           unsigned threads = 1, const ProgressCallback& progress = {});

/// CSV with columns c,N,alpha,reject_rate_pct,reps,seed.
void write_power_csv(std::ostream& out, const PowerTable& table);
/// Text table with one row per c and a column block per N, one column per alpha.
void write_power_text(std::ostream& out, const PowerTable& table);
/// Whitespace-separated power curves: c, then one column per (N, alpha).
void write_power_gnuplot(std::ostream& out, const PowerTable& table);

}  // namespace flmcpd
