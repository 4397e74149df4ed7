#pragma once

#include "flmcpd/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace flmcpd {

enum class Functional { Integral, Sup };

std::string_view to_string(Functional f);
Functional parse_functional(std::string_view text);

/// Identifies one Monte Carlo approximation of the law of
/// F(sum_{l <= pq} B_l^2), with B_l iid standard Brownian bridges.
struct LimitKey {
  std::size_t pq = 1;
  Functional functional = Functional::Integral;
  std::size_t grid_size = 1000;
  std::size_t reps = 100000;
  std::uint64_t seed = 20240601;

  /// critvals-<pq>-<functional>-<grid>-<reps>-<seed>.json
  std::string cache_file_name() const;
};

struct LimitSample {
  LimitKey key;
  std::vector<double> sorted_draws;
};

/// Quantiles of a LimitSample at levels 0, 0.001, ..., 1 (type-7).
struct LimitQuantiles {
  LimitKey key;
  std::vector<double> quantiles;  // kQuantileCount entries, nondecreasing
};

inline constexpr std::size_t kQuantileCount = 1001;

/// Standard Brownian bridge on a uniform grid of `grid_size` points,
/// built as W(t) - t W(1) from N(0, h) increments. Both endpoints are 0.
Eigen::VectorXd simulate_bridge(std::size_t grid_size, RandomStream& stream);

/// Replication r draws from RandomStream(seed, r), so the result does not
/// depend on `threads`. Integral: (1/(G-1)) * sum over grid points of the
/// summed squared bridges. Sup: maximum over grid points.
LimitSample simulate_limit(const LimitKey& key, unsigned threads = 1);

/// Empirical (1 - alpha) quantile, linear interpolation between order statistics.
double critical_value(const LimitSample& sample, double alpha);
double critical_value(const LimitQuantiles& summary, double alpha);

/// (1 + #{draws >= statistic}) / (reps + 1).
double p_value(const LimitSample& sample, double statistic);
/// Same quantity with the draw count interpolated from the stored quantiles.
double p_value(const LimitQuantiles& summary, double statistic);

/// Type-7 quantile of sorted data at probability `level`.
double sorted_quantile(const std::vector<double>& sorted, double level);

LimitQuantiles summarize(const LimitSample& sample);

std::string quantiles_to_json(const LimitQuantiles& summary);
LimitQuantiles quantiles_from_json(std::string_view text);

/// $FLMCPD_CACHE_DIR, else $XDG_CACHE_HOME/flmcpd, else ~/.cache/flmcpd,
/// else ./.flmcpd-cache.
std::filesystem::path default_cache_dir();

/// Reads the cached summary for `key`, or simulates and writes it atomically
/// (temporary file, then rename).
LimitQuantiles load_or_simulate(const LimitKey& key, const std::filesystem::path& cache_dir,
                                unsigned threads = 1, bool* from_cache = nullptr);

}  // namespace flmcpd
