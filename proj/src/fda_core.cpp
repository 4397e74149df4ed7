#include "flmcpd/fda_core.hpp"

#include "flmcpd/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flmcpd {

Grid Grid::uniform(std::size_t size) {
  if (size < 3) {
    throw Error(ErrorKind::ConfigError, "grid needs at least 3 points, got " + std::to_string(size));
  }
  auto data = std::make_shared<Data>();
  const auto n = static_cast<Eigen::Index>(size);
  const double intervals = static_cast<double>(size - 1);
  data->spacing = 1.0 / intervals;
  data->points.resize(n);
  for (Eigen::Index a = 0; a < n; ++a) data->points[a] = static_cast<double>(a) / intervals;
  data->weights = Eigen::VectorXd::Constant(n, data->spacing);
  data->weights[0] = 0.5 * data->spacing;
  data->weights[n - 1] = 0.5 * data->spacing;
  return Grid(std::move(data));
}

bool operator==(const Grid& a, const Grid& b) {
  if (a.data_ == b.data_) return true;
  return a.size() == b.size() && a.points() == b.points();
}

double inner_product(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& f,
                     const Eigen::Ref<const Eigen::VectorXd>& g) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (f.size() != n || g.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "curve length does not match grid size");
  }
  return (grid.weights().array() * f.array() * g.array()).sum();
}

double inner_product(const Curve& f, const Curve& g) {
  if (!(f.grid == g.grid)) throw Error(ErrorKind::GridMismatch, "curves live on different grids");
  return inner_product(f.grid, f.values, g.values);
}

FunctionalSample::FunctionalSample(Grid grid, Eigen::MatrixXd values, bool centered)
    : grid_(std::move(grid)), values_(std::move(values)), centered_(centered) {
  if (values_.rows() < 1) throw Error(ErrorKind::InsufficientData, "sample has no curves");
  if (values_.cols() != static_cast<Eigen::Index>(grid_.size())) {
    throw Error(ErrorKind::DimensionMismatch,
                "sample has " + std::to_string(values_.cols()) + " columns but grid has " +
                    std::to_string(grid_.size()) + " points");
  }
}

Curve FunctionalSample::curve(std::size_t n) const {
  return Curve{grid_, values_.row(static_cast<Eigen::Index>(n)).transpose()};
}

CenteredSample center(const FunctionalSample& sample) {
  Eigen::VectorXd mean = sample.values().colwise().mean().transpose();
  Eigen::MatrixXd centered = sample.values().rowwise() - mean.transpose();
  return {FunctionalSample(sample.grid(), std::move(centered), true), std::move(mean)};
}

CovKernel empirical_covariance(const FunctionalSample& sample) {
  if (sample.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "covariance needs at least 2 curves");
  }
  const Eigen::RowVectorXd mean = sample.values().colwise().mean();
  const Eigen::MatrixXd centered = sample.values().rowwise() - mean;
  Eigen::MatrixXd cov = centered.transpose() * centered;
  cov = 0.5 * (cov + cov.transpose()).eval();
  cov /= static_cast<double>(sample.size());
  return {sample.grid(), std::move(cov)};
}

Curve EigenSystem::eigenfunction(std::size_t j) const {
  return Curve{grid, eigenfunctions.row(static_cast<Eigen::Index>(j)).transpose()};
}

void apply_sign_rule(Eigen::Ref<Eigen::VectorXd> f) {
  if (f.size() == 0) return;
  const double peak = f.cwiseAbs().maxCoeff();
  if (peak == 0.0) return;
  const double cutoff = peak * (1.0 - 1e-10);
  for (Eigen::Index a = 0; a < f.size(); ++a) {
    if (std::abs(f[a]) >= cutoff) {
      if (f[a] < 0.0) f = -f;
      return;
    }
  }
}

EigenSystem eigendecompose(const CovKernel& kernel, std::size_t k) {
  const std::size_t g = kernel.grid.size();
  const auto n = static_cast<Eigen::Index>(g);
  if (kernel.matrix.rows() != n || kernel.matrix.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch, "kernel matrix does not match its grid");
  }
  if (k < 1 || k > g) {
    throw Error(ErrorKind::KTooLarge, "requested " + std::to_string(k) +
                                          " eigenpairs from a grid of " + std::to_string(g));
  }
  if (!kernel.matrix.allFinite()) throw Error(ErrorKind::NonFiniteInput, "kernel has non-finite entries");
  const double scale = kernel.matrix.cwiseAbs().maxCoeff();
  const double asymmetry = (kernel.matrix - kernel.matrix.transpose()).cwiseAbs().maxCoeff();
  if (asymmetry > 1e-12 * scale) {
    throw Error(ErrorKind::NonSymmetric, "kernel asymmetry " + std::to_string(asymmetry) +
                                             " exceeds tolerance");
  }

  const Eigen::VectorXd root_w = kernel.grid.weights().cwiseSqrt();
  Eigen::MatrixXd weighted = root_w.asDiagonal() * kernel.matrix * root_w.asDiagonal();
  weighted = 0.5 * (weighted + weighted.transpose()).eval();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(weighted);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NonSymmetric, "symmetric eigensolver did not converge");
  }

  EigenSystem out{.grid = kernel.grid, .eigenvalues = {}, .eigenfunctions = {}};
  out.total_variance = weighted.trace();
  out.eigenvalues.resize(static_cast<Eigen::Index>(k));
  out.eigenfunctions.resize(static_cast<Eigen::Index>(k), n);
  const double clip_tolerance = 1e-10 * std::abs(out.total_variance);
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(k); ++j) {
    const Eigen::Index source = n - 1 - j;
    double lambda = solver.eigenvalues()[source];
    if (lambda < 0.0) {
      if (lambda < -clip_tolerance) out.clipped_negative = true;
      lambda = 0.0;
    }
    out.eigenvalues[j] = lambda;
    Eigen::VectorXd f = solver.eigenvectors().col(source).cwiseQuotient(root_w);
    apply_sign_rule(f);
    out.eigenfunctions.row(j) = f.transpose();
  }

  const double leading = out.eigenvalues[0];
  out.degenerate = scale == 0.0 || leading <= 0.0;
  out.near_tie = out.degenerate;
  for (Eigen::Index j = 1; j < out.eigenvalues.size() && !out.near_tie; ++j) {
    if (out.eigenvalues[j - 1] - out.eigenvalues[j] < 1e-8 * leading) out.near_tie = true;
  }
  // The first excluded eigenvalue must also be separated from the last kept one.
  if (!out.near_tie && k < g) {
    const double next = std::max(0.0, solver.eigenvalues()[n - 1 - static_cast<Eigen::Index>(k)]);
    if (out.eigenvalues[static_cast<Eigen::Index>(k) - 1] - next < 1e-8 * leading) out.near_tie = true;
  }
  return out;
}

std::size_t select_by_explained_variance(const EigenSystem& system, double threshold) {
  if (system.total_variance <= 0.0) return system.count();
  double cumulative = 0.0;
  for (std::size_t j = 0; j < system.count(); ++j) {
    cumulative += system.eigenvalues[static_cast<Eigen::Index>(j)];
    if (cumulative >= threshold * system.total_variance) return j + 1;
  }
  return system.count();
}

}  // namespace flmcpd
