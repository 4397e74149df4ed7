#include "flmcpd/error.hpp"
#include "flmcpd/limit_dist.hpp"
#include "flmcpd/parallel.hpp"
#include "flmcpd/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <unistd.h>

namespace {

using namespace flmcpd;

double ks_distance(const std::vector<double>& a, const std::vector<double>& b) {
  std::size_t i = 0, j = 0;
  double worst = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                                     static_cast<double>(j) / static_cast<double>(b.size())));
  }
  return worst;
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("flmcpd-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Bridge, EndpointsAndCovariance) {
  const std::size_t g = 101, reps = 100000;
  const std::array<Eigen::Index, 3> idx{25, 50, 80};
  std::array<double, 3> var{};
  double cov_25_80 = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    RandomStream stream(3, r);
    const auto b = simulate_bridge(g, stream);
    ASSERT_EQ(b[0], 0.0);
    ASSERT_EQ(b[g - 1], 0.0);
    for (std::size_t k = 0; k < 3; ++k) var[k] += b[idx[k]] * b[idx[k]];
    cov_25_80 += b[25] * b[80];
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const double t = static_cast<double>(idx[k]) / 100.0;
    EXPECT_NEAR(var[k] / reps, t * (1.0 - t), 0.01);
  }
  EXPECT_NEAR(cov_25_80 / reps, 0.25 - 0.25 * 0.8, 0.01);
}

TEST(LimitLaw, IntegralMeanIsPqOverSix) {
  for (std::size_t pq : {1, 2, 3}) {
    LimitKey key{.pq = pq, .functional = Functional::Integral, .grid_size = 500, .reps = 40000, .seed = 5};
    const auto sample = simulate_limit(key, default_thread_count());
    const double mean = std::accumulate(sample.sorted_draws.begin(), sample.sorted_draws.end(), 0.0) / key.reps;
    // Standard deviation of one draw is sqrt(pq / 45).
    EXPECT_NEAR(mean, pq / 6.0, 4.0 * std::sqrt(pq / 45.0 / key.reps)) << "pq=" << pq;
  }
}

TEST(LimitLaw, KnownUpperQuantiles) {
  LimitKey key{.pq = 1, .functional = Functional::Integral, .grid_size = 1000, .reps = 50000, .seed = 6};
  EXPECT_NEAR(critical_value(simulate_limit(key, default_thread_count()), 0.05), 0.4614, 0.006);

  // sup_t B(t)^2 has 95% point 1.3581^2 from the Kolmogorov law; the grid maximum sits slightly below.
  key.functional = Functional::Sup;
  const double sup95 = critical_value(simulate_limit(key, default_thread_count()), 0.05);
  EXPECT_LT(sup95, 1.3581 * 1.3581 + 0.02);
  EXPECT_GT(sup95, 1.3581 * 1.3581 - 0.08);
}

TEST(LimitLaw, DeterministicAcrossThreadCounts) {
  const LimitKey key{.pq = 2, .functional = Functional::Integral, .grid_size = 200, .reps = 5000, .seed = 9};
  const auto one = simulate_limit(key, 1);
  EXPECT_EQ(one.sorted_draws, simulate_limit(key, 4).sorted_draws);
  EXPECT_EQ(one.sorted_draws, simulate_limit(key, 7).sorted_draws);
  EXPECT_TRUE(std::is_sorted(one.sorted_draws.begin(), one.sorted_draws.end()));
}

TEST(LimitLaw, GridConvergenceWithCommonBridges) {
  // Each replication draws one bridge on 2001 points; the 501-point version is every fourth point.
  const std::size_t reps = 20000;
  for (std::size_t pq = 1; pq <= 4; ++pq) {
    for (Functional f : {Functional::Integral, Functional::Sup}) {
      std::vector<double> fine(reps), coarse(reps);
      parallel_for(reps, default_thread_count(), [&](std::size_t r) {
        RandomStream stream(77, r);
        Eigen::VectorXd sq_fine = Eigen::VectorXd::Zero(2001);
        for (std::size_t l = 0; l < pq; ++l) sq_fine += simulate_bridge(2001, stream).array().square().matrix();
        Eigen::VectorXd sq_coarse(501);
        for (Eigen::Index a = 0; a < 501; ++a) sq_coarse[a] = sq_fine[4 * a];
        fine[r] = f == Functional::Integral ? sq_fine.sum() / 2000.0 : sq_fine.maxCoeff();
        coarse[r] = f == Functional::Integral ? sq_coarse.sum() / 500.0 : sq_coarse.maxCoeff();
      });
      std::sort(fine.begin(), fine.end());
      std::sort(coarse.begin(), coarse.end());
      const double a = sorted_quantile(fine, 0.95), b = sorted_quantile(coarse, 0.95);
      if (f == Functional::Integral) {
        EXPECT_LT(std::abs(a - b) / a, 0.005) << "pq=" << pq;
      } else {
        // The discrete maximum converges at rate sqrt(h); only report it.
        RecordProperty("sup_relative_gap_pq" + std::to_string(pq), std::to_string(std::abs(a - b) / a));
      }
    }
  }
}

TEST(LimitLaw, TwoBridgesEqualSumOfIndependentSingles) {
  const std::size_t reps = 100000;
  const auto threads = default_thread_count();
  const auto pair = simulate_limit({.pq = 2, .functional = Functional::Integral, .grid_size = 1000, .reps = reps, .seed = 101}, threads);
  auto a = simulate_limit({.pq = 1, .functional = Functional::Integral, .grid_size = 1000, .reps = reps, .seed = 202}, threads).sorted_draws;
  auto b = simulate_limit({.pq = 1, .functional = Functional::Integral, .grid_size = 1000, .reps = reps, .seed = 303}, threads).sorted_draws;
  // Both are sorted; shuffle one deterministically before pairing.
  std::mt19937_64 shuffler(1);
  std::shuffle(b.begin(), b.end(), shuffler);
  std::vector<double> sums(reps);
  for (std::size_t r = 0; r < reps; ++r) sums[r] = a[r] + b[r];
  std::sort(sums.begin(), sums.end());
  EXPECT_LT(ks_distance(pair.sorted_draws, sums), 0.01);
}

TEST(CriticalValue, OrderStatisticsAndErrors) {
  LimitSample uniform;
  for (int i = 0; i <= 1000; ++i) uniform.sorted_draws.push_back(i / 1000.0);
  uniform.key.reps = uniform.sorted_draws.size();
  EXPECT_NEAR(critical_value(uniform, 0.5), 0.5, 1.0 / 1001);
  EXPECT_NEAR(critical_value(uniform, 0.1), 0.9, 1e-12);

  const auto sample = simulate_limit({.pq = 1, .functional = Functional::Integral, .grid_size = 100, .reps = 4000, .seed = 4});
  double previous = HUGE_VAL;
  for (double alpha : {0.001, 0.01, 0.05, 0.1, 0.3, 0.5, 0.9}) {
    const double cv = critical_value(sample, alpha);
    EXPECT_LE(cv, previous);
    previous = cv;
  }
  for (double bad : {0.0, 1.0, -0.2, 1.5, std::nan("")}) {
    try {
      critical_value(sample, bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::AlphaOutOfRange);
    }
  }
}

TEST(PValue, EdgesAndDefinition) {
  const auto sample = simulate_limit({.pq = 1, .functional = Functional::Integral, .grid_size = 200, .reps = 20000, .seed = 8});
  const double reps = 20000;
  EXPECT_DOUBLE_EQ(p_value(sample, -1.0), 1.0);
  EXPECT_DOUBLE_EQ(p_value(sample, 1e6), 1.0 / (reps + 1));
  EXPECT_NEAR(p_value(sample, critical_value(sample, 0.05)), 0.05, 2.0 / std::sqrt(reps));

  const auto table = summarize(sample);
  EXPECT_DOUBLE_EQ(p_value(table, -1.0), 1.0);
  EXPECT_DOUBLE_EQ(p_value(table, 1e6), 1.0 / (reps + 1));
  for (double s = 0.01; s < 2.0; s += 0.013) {
    const double pv = p_value(table, s);
    EXPECT_GE(pv, 0.0);
    EXPECT_LE(pv, 1.0);
    EXPECT_NEAR(pv, p_value(sample, s), 2.0 / std::sqrt(reps)) << s;
  }
}

TEST(Summary, MatchesSampleAtStoredLevels) {
  const auto sample = simulate_limit({.pq = 3, .functional = Functional::Sup, .grid_size = 150, .reps = 3000, .seed = 12});
  const auto table = summarize(sample);
  ASSERT_EQ(table.quantiles.size(), kQuantileCount);
  EXPECT_EQ(table.quantiles.front(), sample.sorted_draws.front());
  EXPECT_EQ(table.quantiles.back(), sample.sorted_draws.back());
  for (double alpha : {0.1, 0.05, 0.01, 0.001, 0.5}) {
    EXPECT_NEAR(critical_value(table, alpha), critical_value(sample, alpha), 1e-12);
  }
}

TEST(Cache, RoundTripAndAtomicWrite) {
  const auto dir = fresh_dir("cache");
  const LimitKey key{.pq = 2, .functional = Functional::Sup, .grid_size = 120, .reps = 2000, .seed = 13};
  EXPECT_EQ(key.cache_file_name(), "critvals-2-sup-120-2000-13.json");

  bool from_cache = true;
  const auto first = load_or_simulate(key, dir, 2, &from_cache);
  EXPECT_FALSE(from_cache);
  EXPECT_TRUE(std::filesystem::exists(dir / key.cache_file_name()));
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& entry : std::filesystem::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);

  const auto second = load_or_simulate(key, dir, 1, &from_cache);
  EXPECT_TRUE(from_cache);
  EXPECT_EQ(first.quantiles, second.quantiles);
  EXPECT_EQ(first.quantiles, summarize(simulate_limit(key)).quantiles);

  { std::ofstream(dir / key.cache_file_name()) << "{not json"; }
  const auto third = load_or_simulate(key, dir, 1, &from_cache);
  EXPECT_FALSE(from_cache);
  EXPECT_EQ(third.quantiles, first.quantiles);

  const auto parsed = quantiles_from_json(quantiles_to_json(first));
  EXPECT_EQ(parsed.quantiles, first.quantiles);
  EXPECT_EQ(parsed.key.functional, Functional::Sup);
  EXPECT_THROW(quantiles_from_json(R"({"pq":1})"), Error);
  std::filesystem::remove_all(dir);
}

TEST(Cache, EnvironmentOverride) {
  ::setenv("FLMCPD_CACHE_DIR", "/tmp/somewhere-else", 1);
  EXPECT_EQ(default_cache_dir(), std::filesystem::path("/tmp/somewhere-else"));
}

TEST(FunctionalNames, ParseAndPrint) {
  EXPECT_EQ(parse_functional("integral"), Functional::Integral);
  EXPECT_EQ(parse_functional(to_string(Functional::Sup)), Functional::Sup);
  EXPECT_THROW(parse_functional("l2"), Error);
}
