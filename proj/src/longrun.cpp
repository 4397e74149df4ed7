#include "flmcpd/longrun.hpp"

#include "flmcpd/error.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <string>

namespace flmcpd {

double KernelSpec::support() const {
  switch (kind) {
    case KernelKind::FlatTop: return 1.1;
    case KernelKind::Bartlett: return 1.0;
    case KernelKind::Parzen: return 1.0;
  }
  return 1.0;
}

std::string KernelSpec::name() const {
  switch (kind) {
    case KernelKind::FlatTop: return "flattop";
    case KernelKind::Bartlett: return "bartlett";
    case KernelKind::Parzen: return "parzen";
  }
  return "unknown";
}

KernelSpec KernelSpec::parse(std::string_view text) {
  if (text == "flattop" || text == "flat_top" || text == "flat-top") return {KernelKind::FlatTop};
  if (text == "bartlett") return {KernelKind::Bartlett};
  if (text == "parzen") return {KernelKind::Parzen};
  throw Error(ErrorKind::ConfigError, "unknown kernel '" + std::string(text) + "'");
}

double kernel_eval(const KernelSpec& spec, double u) {
  const double a = std::abs(u);
  switch (spec.kind) {
    case KernelKind::FlatTop:
      if (a < 0.1) return 1.0;
      if (a < 1.1) return 1.1 - a;
      return 0.0;
    case KernelKind::Bartlett:
      return a < 1.0 ? 1.0 - a : 0.0;
    case KernelKind::Parzen:
      if (a <= 0.5) return 1.0 - 6.0 * a * a + 6.0 * a * a * a;
      if (a <= 1.0) return 2.0 * (1.0 - a) * (1.0 - a) * (1.0 - a);
      return 0.0;
  }
  return 0.0;
}

double BandwidthRule::evaluate(std::size_t n) const {
  const double size = static_cast<double>(n);
  switch (kind) {
    case BandwidthKind::Fixed: return value;
    case BandwidthKind::CubeRootOver4: return std::max(1.0, std::cbrt(size) / 4.0);
    case BandwidthKind::Power: return scale * std::pow(size, exponent);
  }
  return value;
}

bool BandwidthRule::too_wide(std::size_t n) const {
  return evaluate(n) >= std::sqrt(static_cast<double>(n));
}

std::string BandwidthRule::describe() const {
  switch (kind) {
    case BandwidthKind::Fixed: return "fixed:" + std::to_string(value);
    case BandwidthKind::CubeRootOver4: return "n13over4";
    case BandwidthKind::Power: return "pow:" + std::to_string(scale) + "," + std::to_string(exponent);
  }
  return "unknown";
}

namespace {

double parse_number(std::string_view text, std::string_view context) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value)) {
    throw Error(ErrorKind::ConfigError, "bad number '" + std::string(text) + "' in " + std::string(context));
  }
  return value;
}

}  // namespace

BandwidthRule BandwidthRule::parse(std::string_view text) {
  if (text == "n13over4") return {};
  if (text.starts_with("fixed:")) {
    BandwidthRule rule{.kind = BandwidthKind::Fixed};
    rule.value = parse_number(text.substr(6), "bandwidth");
    if (rule.value <= 0.0) throw Error(ErrorKind::ConfigError, "fixed bandwidth must be positive");
    return rule;
  }
  if (text.starts_with("pow:")) {
    const auto body = text.substr(4);
    const auto comma = body.find(',');
    if (comma == std::string_view::npos) {
      throw Error(ErrorKind::ConfigError, "expected pow:<c>,<a>");
    }
    BandwidthRule rule{.kind = BandwidthKind::Power};
    rule.scale = parse_number(body.substr(0, comma), "bandwidth");
    rule.exponent = parse_number(body.substr(comma + 1), "bandwidth");
    if (rule.scale <= 0.0) throw Error(ErrorKind::ConfigError, "bandwidth scale must be positive");
    return rule;
  }
  throw Error(ErrorKind::ConfigError, "unknown bandwidth rule '" + std::string(text) + "'");
}

Eigen::MatrixXd lag_autocovariance(const GammaSeries& gammas, long lag) {
  const long n = static_cast<long>(gammas.size());
  if (std::abs(lag) >= n) {
    throw Error(ErrorKind::LagTooLarge, "lag " + std::to_string(lag) + " needs |lag| < N=" + std::to_string(n));
  }
  const Eigen::Index terms = n - std::abs(lag);
  const Eigen::Index first = lag >= 0 ? 0 : -lag;
  const auto& g = gammas.values;
  Eigen::MatrixXd phi = g.middleRows(first, terms).transpose() * g.middleRows(first + lag, terms);
  phi /= static_cast<double>(n);
  return phi;
}

Eigen::MatrixXd kernel_weighted_sum(const GammaSeries& gammas, const KernelSpec& spec,
                                    double bandwidth, std::size_t max_lag) {
  const std::size_t n = gammas.size();
  max_lag = std::min(max_lag, n - 1);
  Eigen::MatrixXd sum = lag_autocovariance(gammas, 0);
  for (std::size_t k = 1; k <= max_lag; ++k) {
    const double weight = kernel_eval(spec, static_cast<double>(k) / bandwidth);
    if (weight == 0.0) continue;
    const Eigen::MatrixXd phi = lag_autocovariance(gammas, static_cast<long>(k));
    sum += weight * (phi + phi.transpose());
  }
  return sum;
}

LongRunCov invert_long_run(Eigen::MatrixXd matrix) {
  matrix = 0.5 * (matrix + matrix.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
  const Eigen::VectorXd& eig = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  const double largest = eig.cwiseAbs().maxCoeff();
  const double threshold = kPseudoInverseThreshold * largest;

  LongRunCov out;
  out.inverse = Eigen::MatrixXd::Zero(matrix.rows(), matrix.cols());
  double smallest_kept = largest;
  for (Eigen::Index j = 0; j < eig.size(); ++j) {
    if (std::abs(eig[j]) <= threshold) {
      out.regularized = true;
      continue;
    }
    if (eig[j] < 0.0) out.indefinite = true;
    ++out.rank;
    smallest_kept = std::min(smallest_kept, std::abs(eig[j]));
    out.inverse += (1.0 / eig[j]) * vectors.col(j) * vectors.col(j).transpose();
  }
  out.inverse = 0.5 * (out.inverse + out.inverse.transpose()).eval();
  out.condition = out.rank > 0 ? largest / smallest_kept : std::numeric_limits<double>::infinity();
  out.matrix = std::move(matrix);
  return out;
}

LongRunCov long_run_cov(const GammaSeries& gammas, const KernelSpec& spec, const BandwidthRule& rule) {
  const std::size_t n = gammas.size();
  if (n < 4) throw Error(ErrorKind::InsufficientData, "long-run covariance needs N >= 4");
  if (gammas.dimension() < 1) throw Error(ErrorKind::DimensionMismatch, "empty gamma series");
  if (!gammas.values.allFinite()) throw Error(ErrorKind::NonFiniteInput, "gamma series has non-finite entries");
  if (gammas.values.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorKind::DegenerateSeries, "gamma series is identically zero");
  }
  const double bandwidth = rule.evaluate(n);
  if (!(bandwidth >= 1.0) || !std::isfinite(bandwidth)) {
    throw Error(ErrorKind::ConfigError, "bandwidth evaluates to " + std::to_string(bandwidth) + ", need >= 1");
  }
  const auto max_lag = static_cast<std::size_t>(std::ceil(spec.support() * bandwidth));

  LongRunCov out = invert_long_run(kernel_weighted_sum(gammas, spec, bandwidth, max_lag));
  out.bandwidth = bandwidth;
  out.bandwidth_too_wide = rule.too_wide(n);
  const auto dim = static_cast<std::size_t>(out.matrix.rows());
  if (2 * out.rank < dim) {
    throw Error(ErrorKind::RankDeficient, "long-run covariance has rank " + std::to_string(out.rank) +
                                              " of " + std::to_string(dim));
  }
  return out;
}

}  // namespace flmcpd
