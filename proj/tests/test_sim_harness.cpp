#include "flmcpd/error.hpp"
#include "flmcpd/sim_harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

namespace {

using namespace flmcpd;

const LimitQuantiles& default_limit() {
  static const LimitQuantiles limit = load_or_simulate(LimitKey{}, default_cache_dir());
  return limit;
}

SimConfig small_config() {
  SimConfig config;
  config.n = 100;
  config.grid_size = 41;
  config.reps = 10;
  return config;
}

}  // namespace

TEST(PsiGauss, Values) {
  EXPECT_EQ(psi_gauss(0.3, 0.3), 1.0);
  EXPECT_NEAR(psi_gauss(0.0, 1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(psi_gauss(0.0, 1.0), 0.3679, 1e-4);
  for (double s = 0.0; s <= 1.0; s += 0.13)
    for (double t = 0.0; t <= 1.0; t += 0.17) EXPECT_EQ(psi_gauss(s, t), psi_gauss(t, s));
}

TEST(ApplyOperator, ZeroCasesAndSeparableKernel) {
  const Grid grid = Grid::uniform(101);
  const Curve x{grid, grid.points()};
  const Curve zero{grid, Eigen::VectorXd::Zero(101)};
  EXPECT_EQ(apply_operator([](double, double) { return 0.0; }, x).values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(apply_operator(psi_gauss, zero).values.cwiseAbs().maxCoeff(), 0.0);

  // psi(s, t) = sin(pi s) cos(t) with x(s) = s gives y(t) = cos(t) / pi.
  const auto y = apply_operator([](double s, double t) { return std::sin(std::numbers::pi * s) * std::cos(t); }, x);
  for (Eigen::Index g = 0; g < 101; ++g) {
    EXPECT_NEAR(y.values[g], std::cos(grid.points()[g]) / std::numbers::pi, 1e-4);
  }

  const Eigen::MatrixXd m = operator_matrix(psi_gauss, grid);
  const Eigen::VectorXd via_matrix = (x.values.transpose() * m).transpose();
  EXPECT_LT((via_matrix - apply_operator(psi_gauss, x).values).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Validate, RejectsBadConfigurations) {
  auto kind = [](SimConfig c) {
    try {
      validate(c);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::IoError;
  };
  SimConfig c = small_config();
  EXPECT_EQ(kind(c), ErrorKind::IoError);
  c.n = 19;
  EXPECT_EQ(kind(c), ErrorKind::ConfigError);
  c = small_config();
  c.change_fraction = 0.0;
  EXPECT_EQ(kind(c), ErrorKind::ConfigError);
  c.change_fraction = 1.5;
  EXPECT_EQ(kind(c), ErrorKind::ConfigError);
  c = small_config();
  c.c = 0.0;
  EXPECT_EQ(kind(c), ErrorKind::ConfigError);
  c = small_config();
  c.reps = 0;
  EXPECT_EQ(kind(c), ErrorKind::ConfigError);
  c = small_config();
  c.alphas = {0.05, 1.0};
  EXPECT_EQ(kind(c), ErrorKind::AlphaOutOfRange);
}

TEST(GenerateDataset, DeterministicAndRegimeStructure) {
  SimConfig config = small_config();
  config.c = 2.0;
  const auto a = generate_dataset(config, 4);
  const auto b = generate_dataset(config, 4);
  EXPECT_EQ(a.x.values(), b.x.values());
  EXPECT_EQ(a.y.values(), b.y.values());
  EXPECT_NE(generate_dataset(config, 5).x.values(), a.x.values());

  SimConfig stationary = config;
  stationary.c = 1.0;
  const auto s = generate_dataset(stationary, 4);
  EXPECT_EQ(s.x.values(), a.x.values());
  EXPECT_EQ(s.y.values().topRows(50), a.y.values().topRows(50));
  EXPECT_NE(s.y.values().row(50), a.y.values().row(50));

  // With change_fraction = 1 the second regime is empty, so c has no effect.
  config.change_fraction = 1.0;
  stationary.change_fraction = 1.0;
  EXPECT_EQ(generate_dataset(config, 4).y.values(), generate_dataset(stationary, 4).y.values());

  // X and eps come from different substreams.
  const Eigen::MatrixXd eps = s.y.values() - s.x.values() * operator_matrix(psi_gauss, s.x.grid());
  EXPECT_NE(eps.row(0), s.x.values().row(0));
}

TEST(GenerateDataset, CovarianceMatchesModel) {
  SimConfig config;
  config.n = 500;
  config.grid_size = 21;
  const Grid grid = Grid::uniform(21);
  Eigen::MatrixXd bridge(21, 21);
  for (Eigen::Index a = 0; a < 21; ++a)
    for (Eigen::Index b = 0; b < 21; ++b) {
      const double s = grid.points()[a], t = grid.points()[b];
      bridge(a, b) = std::min(s, t) - s * t;
    }
  const Eigen::MatrixXd m = operator_matrix(psi_gauss, grid);
  const Eigen::MatrixXd model = m.transpose() * bridge * m + bridge;

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(21, 21);
  std::size_t count = 0;
  for (std::size_t rep = 0; rep < 40; ++rep) {
    const auto data = generate_dataset(config, rep);
    sum += data.y.values().transpose() * data.y.values();
    count += config.n;
  }
  EXPECT_LT((sum / static_cast<double>(count) - model).cwiseAbs().maxCoeff(), 0.02);
}

TEST(PowerStudy, RatesIncreaseWithC) {
  SimConfig config = small_config();
  config.reps = 200;
  config.alphas = {0.05};
  double previous = -1.0;
  for (double c : {1.0, 1.4, 2.0, 3.0}) {
    config.c = c;
    const auto study = run_power_study(config, default_limit());
    const double rate = study.table.rows[0].reject_rate_pct;
    EXPECT_GE(rate, 0.0);
    EXPECT_LE(rate, 100.0);
    if (previous >= 0.0) {
      const double p0 = previous / 100.0, p1 = rate / 100.0;
      const double se = 100.0 * std::sqrt((p0 * (1 - p0) + p1 * (1 - p1)) / config.reps);
      EXPECT_GE(rate, previous - 2.0 * se) << "c=" << c;
    }
    previous = rate;
  }
  EXPECT_GT(previous, 50.0);
}

TEST(PowerStudy, SeedIsolationAndThreadInvariance) {
  SimConfig config = small_config();
  config.c = 1.6;
  const auto base = run_power_study(config, default_limit(), 1);
  SimConfig longer = config;
  longer.reps = 14;
  const auto extended = run_power_study(longer, default_limit(), 3);
  for (std::size_t r = 0; r < config.reps; ++r) EXPECT_EQ(base.statistics[r], extended.statistics[r]);
  EXPECT_EQ(base.statistics, run_power_study(config, default_limit(), 4).statistics);

  SimConfig reseeded = config;
  reseeded.master_seed = 2;
  EXPECT_NE(run_power_study(reseeded, default_limit()).statistics[0], base.statistics[0]);

  std::size_t calls = 0;
  run_power_study(config, default_limit(), 1, [&](std::size_t done, std::size_t total) {
    ++calls;
    EXPECT_LE(done, total);
  });
  EXPECT_EQ(calls, config.reps);
}

TEST(PowerStudy, LimitMustMatchConfiguration) {
  SimConfig config = small_config();
  config.p = 2;
  EXPECT_THROW(run_power_study(config, default_limit()), Error);
}

TEST(PowerStudy, RepsOfOneGiveZeroOrHundred) {
  SimConfig config = small_config();
  config.reps = 1;
  const auto study = run_power_study(config, default_limit());
  for (const auto& row : study.table.rows) {
    EXPECT_TRUE(row.reject_rate_pct == 0.0 || row.reject_rate_pct == 100.0);
  }
}

TEST(PowerTableOutput, CsvTextAndGnuplot) {
  SimConfig config = small_config();
  config.reps = 3;
  const auto table = run_power_sweep(config, {1.0, 2.0}, {40, 60}, default_limit());
  ASSERT_EQ(table.rows.size(), 2u * 2u * 3u);

  std::ostringstream csv;
  write_power_csv(csv, table);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "c,N,alpha,reject_rate_pct,reps,seed");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 12u);

  std::ostringstream text;
  write_power_text(text, table);
  EXPECT_NE(text.str().find("N=40"), std::string::npos);
  EXPECT_NE(text.str().find("N=60"), std::string::npos);
  EXPECT_NE(text.str().find("2.0"), std::string::npos);

  std::ostringstream plot;
  write_power_gnuplot(plot, table);
  std::istringstream plot_lines(plot.str());
  std::getline(plot_lines, line);
  EXPECT_EQ(line.front(), '#');
  std::size_t plot_rows = 0;
  while (std::getline(plot_lines, line)) ++plot_rows;
  EXPECT_EQ(plot_rows, 2u);
}
