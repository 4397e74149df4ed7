#include "flmcpd/detector.hpp"

#include "flmcpd/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flmcpd {

Eigen::MatrixXd cusum_path(const GammaSeries& gammas) {
  const Eigen::Index n = gammas.values.rows();
  const double size = static_cast<double>(n);
  const double root = std::sqrt(size);
  const Eigen::RowVectorXd total = gammas.values.colwise().sum();
  Eigen::MatrixXd path(n, gammas.values.cols());
  Eigen::RowVectorXd partial = Eigen::RowVectorXd::Zero(gammas.values.cols());
  for (Eigen::Index row = 0; row < n; ++row) {
    partial += gammas.values.row(row);
    const double t = static_cast<double>(row + 1) / size;
    path.row(row) = (partial - t * total) / root;
  }
  return path;
}

double cusum_second_term_norm(const GammaSeries& gammas) {
  return gammas.values.colwise().sum().norm() / std::sqrt(static_cast<double>(gammas.size()));
}

Eigen::VectorXd quadratic_detector(const Eigen::MatrixXd& path, const LongRunCov& lrc) {
  if (path.cols() != lrc.inverse.rows() || lrc.inverse.rows() != lrc.inverse.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "CUSUM path and long-run covariance dimensions differ");
  }
  return (path * lrc.inverse).cwiseProduct(path).rowwise().sum();
}

DetectorStatistics test_statistics(const Eigen::VectorXd& v_quad) {
  if (v_quad.size() < 2) throw Error(ErrorKind::InsufficientData, "detector path needs N >= 2");
  DetectorStatistics out;
  Eigen::Index best = 0;
  out.sup = v_quad[0];
  for (Eigen::Index n = 1; n < v_quad.size(); ++n) {
    if (v_quad[n] > out.sup) {
      out.sup = v_quad[n];
      best = n;
    }
  }
  const double size = static_cast<double>(v_quad.size());
  out.integral = v_quad.sum() / size;
  out.argmax_t = static_cast<double>(best + 1) / size;
  return out;
}

DetectorRun detector_from_bases(const FunctionalSample& x, const FunctionalSample& y,
                                const EigenSystem& v_basis, const EigenSystem& w_basis,
                                const KernelSpec& kernel, const BandwidthRule& bandwidth) {
  if (x.size() != y.size()) throw Error(ErrorKind::ConfigError, "x and y have different sample sizes");
  const ScoreMatrix x_scores = compute_scores(x, v_basis);
  const ScoreMatrix y_scores = compute_scores(y, w_basis);

  DetectorRun run;
  run.beta = fit_beta(x_scores, y_scores);
  const FunctionalSample residuals = residual_curves(y, x_scores, run.beta, w_basis);
  const GammaSeries gammas = gamma_series(x_scores, residuals, w_basis);
  run.lrc = long_run_cov(gammas, kernel, bandwidth);

  const std::size_t n = gammas.size();
  run.path.t_points = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(n), 1.0, static_cast<double>(n)) /
                      static_cast<double>(n);
  run.path.v_tilde = cusum_path(gammas);
  run.path.v_quad = quadratic_detector(run.path.v_tilde, run.lrc);
  run.path.stats = test_statistics(run.path.v_quad);

  auto& d = run.diagnostics;
  d.second_term_norm = cusum_second_term_norm(gammas);
  d.lrc_condition = run.lrc.condition;
  d.lrc_rank = run.lrc.rank;
  d.bandwidth = run.lrc.bandwidth;
  d.regularized = run.lrc.regularized;
  d.indefinite = run.lrc.indefinite;
  d.bandwidth_too_wide = run.lrc.bandwidth_too_wide;
  d.near_tie_x = v_basis.near_tie;
  d.near_tie_y = w_basis.near_tie;
  return run;
}

DetectorRun compute_detector(const FunctionalSample& x, const FunctionalSample& y, std::size_t p,
                             std::size_t q, const KernelSpec& kernel, const BandwidthRule& bandwidth) {
  if (x.size() != y.size()) throw Error(ErrorKind::ConfigError, "x and y have different sample sizes");
  if (!(x.grid() == y.grid())) throw Error(ErrorKind::GridMismatch, "x and y use different grids");
  const CenteredSample xc = center(x);
  const CenteredSample yc = center(y);
  const EigenSystem v_basis = eigendecompose(empirical_covariance(xc.sample), p);
  const EigenSystem w_basis = eigendecompose(empirical_covariance(yc.sample), q);
  return detector_from_bases(xc.sample, yc.sample, v_basis, w_basis, kernel, bandwidth);
}

void validate_test_inputs(const FunctionalSample& x, const FunctionalSample& y, const TestConfig& config) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::ConfigError, "x has " + std::to_string(x.size()) + " curves but y has " +
                                            std::to_string(y.size()));
  }
  if (!(x.grid() == y.grid())) throw Error(ErrorKind::GridMismatch, "x and y use different grids");
  if (config.p < 1 || config.q < 1) throw Error(ErrorKind::ConfigError, "p and q must be positive");
  if (config.p > x.grid().size() || config.q > x.grid().size()) {
    throw Error(ErrorKind::ConfigError, "p and q cannot exceed the grid size");
  }
  if (x.size() <= std::max(config.p, config.q) + 2) {
    throw Error(ErrorKind::ConfigError, "need N > max(p, q) + 2, got N=" + std::to_string(x.size()));
  }
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
    throw Error(ErrorKind::AlphaOutOfRange, "alpha must lie in (0, 1)");
  }
}

TestResult decide(const DetectorRun& run, const TestConfig& config, const LimitQuantiles& limit) {
  if (limit.key.pq != config.p * config.q || limit.key.functional != config.functional) {
    throw Error(ErrorKind::ConfigError, "critical values were simulated for pq=" +
                                            std::to_string(limit.key.pq) + " / " +
                                            std::string(to_string(limit.key.functional)));
  }
  TestResult out;
  out.functional = config.functional;
  out.statistic = config.functional == Functional::Integral ? run.path.stats.integral : run.path.stats.sup;
  out.alpha = config.alpha;
  out.critical_value = critical_value(limit, config.alpha);
  out.p_value = p_value(limit, out.statistic);
  out.reject = out.statistic > out.critical_value;
  out.argmax_t = run.path.stats.argmax_t;
  out.config = config;
  out.limit = limit.key;
  out.sample_size = static_cast<std::size_t>(run.path.v_quad.size());
  out.diagnostics = run.diagnostics;
  return out;
}

TestResult run_test(const FunctionalSample& x, const FunctionalSample& y, const TestConfig& config,
                    const LimitQuantiles& limit) {
  validate_test_inputs(x, y, config);
  const DetectorRun run = compute_detector(x, y, config.p, config.q, config.kernel, config.bandwidth);
  TestResult out = decide(run, config, limit);
  out.grid_size = x.grid().size();
  return out;
}

std::string to_json(const TestResult& r, int indent) {
  nlohmann::json doc;
  doc["statistic"] = r.statistic;
  doc["functional"] = to_string(r.functional);
  doc["alpha"] = r.alpha;
  doc["critical_value"] = r.critical_value;
  doc["p_value"] = r.p_value;
  doc["reject"] = r.reject;
  doc["argmax_t"] = r.argmax_t;
  doc["argmax_t_note"] = "heuristic change location";
  doc["config"] = {
      {"p", r.config.p},
      {"q", r.config.q},
      {"kernel", r.config.kernel.name()},
      {"bandwidth", r.config.bandwidth.describe()},
      {"bandwidth_value", r.diagnostics.bandwidth},
      {"N", r.sample_size},
      {"grid_size", r.grid_size},
      {"seed", r.limit.seed},
      {"limit_reps", r.limit.reps},
      {"limit_grid_size", r.limit.grid_size},
  };
  doc["diagnostics"] = {
      {"second_term_norm", r.diagnostics.second_term_norm},
      {"lrc_condition", r.diagnostics.lrc_condition},
      {"lrc_rank", r.diagnostics.lrc_rank},
      {"regularized", r.diagnostics.regularized},
      {"indefinite", r.diagnostics.indefinite},
      {"bandwidth_too_wide", r.diagnostics.bandwidth_too_wide},
      {"near_tie_x", r.diagnostics.near_tie_x},
      {"near_tie_y", r.diagnostics.near_tie_y},
  };
  return doc.dump(indent);
}

}  // namespace flmcpd
