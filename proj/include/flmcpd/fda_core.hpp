#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <string_view>

namespace flmcpd {

/// Uniform grid on [0, 1] with trapezoid quadrature weights.
///
/// Copies share the underlying storage, so passing grids around by value
/// is cheap. Weights are h * [1/2, 1, ..., 1, 1/2] with h = 1 / (G - 1)
/// and sum to one.
class Grid {
 public:
  static Grid uniform(std::size_t size);

  std::size_t size() const { return static_cast<std::size_t>(data_->points.size()); }
  double spacing() const { return data_->spacing; }
  const Eigen::VectorXd& points() const { return data_->points; }
  const Eigen::VectorXd& weights() const { return data_->weights; }

  friend bool operator==(const Grid& a, const Grid& b);

 private:
  struct Data {
    Eigen::VectorXd points;
    Eigen::VectorXd weights;
    double spacing = 0.0;
  };
  explicit Grid(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

  std::shared_ptr<const Data> data_;
};

inline constexpr std::size_t kDefaultGridSize = 101;

/// A single discretized function.
struct Curve {
  Grid grid;
  Eigen::VectorXd values;
};

/// Quadrature inner product sum_a w_a f_a g_a.
double inner_product(const Curve& f, const Curve& g);
double inner_product(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& f,
                     const Eigen::Ref<const Eigen::VectorXd>& g);

/// N curves evaluated on a shared grid (row n = curve n).
class FunctionalSample {
 public:
  FunctionalSample(Grid grid, Eigen::MatrixXd values, bool centered = false);

  const Grid& grid() const { return grid_; }
  const Eigen::MatrixXd& values() const { return values_; }
  bool centered() const { return centered_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }
  Curve curve(std::size_t n) const;

 private:
  Grid grid_;
  Eigen::MatrixXd values_;
  bool centered_;
};

struct CenteredSample {
  FunctionalSample sample;
  Eigen::VectorXd mean;
};

/// Subtracts the pointwise mean curve.
CenteredSample center(const FunctionalSample& sample);

/// Discretized covariance kernel C(s, t) on a grid.
struct CovKernel {
  Grid grid;
  Eigen::MatrixXd matrix;
};

/// (1/N) sum_n (x_n - xbar)(x_n - xbar)^T. Requires N >= 2.
CovKernel empirical_covariance(const FunctionalSample& sample);

inline constexpr std::string_view kSignRuleMaxAbsPositive = "max-abs-positive";

/// Leading eigenpairs of a covariance operator.
struct EigenSystem {
  Grid grid;
  Eigen::VectorXd eigenvalues;     // descending, nonnegative
  Eigen::MatrixXd eigenfunctions;  // count x G, L2-orthonormal rows
  double total_variance = 0.0;     // operator trace, sum over all eigenvalues
  std::string_view sign_rule = kSignRuleMaxAbsPositive;
  bool near_tie = false;      // consecutive eigenvalues closer than 1e-8 * leading
  bool degenerate = false;    // zero operator; eigenfunctions arbitrary
  bool clipped_negative = false;  // an eigenvalue below -1e-10 * trace was clipped

  std::size_t count() const { return static_cast<std::size_t>(eigenvalues.size()); }
  Curve eigenfunction(std::size_t j) const;
};

/// Top-k eigenpairs of the integral operator f -> int K(., s) f(s) ds.
///
/// Solves the symmetric problem W^{1/2} K W^{1/2} and maps eigenvectors back
/// through W^{-1/2}. Each eigenfunction is flipped so that its entry of
/// largest magnitude is positive; entries within a relative 1e-10 of the
/// maximum count as ties and the smallest index wins.
EigenSystem eigendecompose(const CovKernel& kernel, std::size_t k);

/// Flips `eigenfunction` in place according to the max-abs-positive rule.
void apply_sign_rule(Eigen::Ref<Eigen::VectorXd> eigenfunction);

/// Smallest k whose cumulative eigenvalue share of the total variance
/// reaches `threshold`. Returns the number of stored pairs if none does.
std::size_t select_by_explained_variance(const EigenSystem& system, double threshold = 0.85);

}  // namespace flmcpd
