#include "flmcpd/sim_harness.hpp"

#include "flmcpd/error.hpp"
#include "flmcpd/parallel.hpp"
#include "flmcpd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

namespace flmcpd {

double psi_gauss(double s, double t) {
  const double d = s - t;
  return std::exp(-d * d);
}

Eigen::MatrixXd operator_matrix(const KernelFunction& psi, const Grid& grid) {
  const auto g = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd m(g, g);
  for (Eigen::Index a = 0; a < g; ++a) {
    for (Eigen::Index b = 0; b < g; ++b) {
      m(a, b) = grid.weights()[a] * psi(grid.points()[a], grid.points()[b]);
    }
  }
  return m;
}

Curve apply_operator(const KernelFunction& psi, const Curve& x) {
  const Grid& grid = x.grid;
  const auto g = static_cast<Eigen::Index>(grid.size());
  if (x.values.size() != g) throw Error(ErrorKind::DimensionMismatch, "curve does not match its grid");
  Curve y{grid, Eigen::VectorXd::Zero(g)};
  for (Eigen::Index b = 0; b < g; ++b) {
    double sum = 0.0;
    for (Eigen::Index a = 0; a < g; ++a) {
      sum += grid.weights()[a] * psi(grid.points()[a], grid.points()[b]) * x.values[a];
    }
    y.values[b] = sum;
  }
  return y;
}

void validate(const SimConfig& config) {
  auto fail = [](const std::string& message) { throw Error(ErrorKind::ConfigError, message); };
  if (config.n < 20) fail("N must be at least 20");
  if (config.reps < 1) fail("reps must be at least 1");
  if (!(config.change_fraction > 0.0 && config.change_fraction <= 1.0)) fail("change_fraction must lie in (0, 1]");
  if (!(config.c > 0.0) || !std::isfinite(config.c)) fail("c must be positive");
  if (config.p < 1 || config.q < 1) fail("p and q must be positive");
  if (config.grid_size < 3) fail("grid_size must be at least 3");
  if (config.p > config.grid_size || config.q > config.grid_size) fail("p and q cannot exceed the grid size");
  if (config.n <= std::max(config.p, config.q) + 2) fail("need N > max(p, q) + 2");
  if (config.alphas.empty()) fail("at least one alpha is required");
  for (double a : config.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw Error(ErrorKind::AlphaOutOfRange, "alpha must lie in (0, 1)");
  }
}

SimDataset generate_dataset(const SimConfig& config, std::size_t rep_index) {
  validate(config);
  const Grid grid = Grid::uniform(config.grid_size);
  const auto n = static_cast<Eigen::Index>(config.n);
  const auto g = static_cast<Eigen::Index>(config.grid_size);

  RandomStream x_stream(config.master_seed, rep_index, 0);
  RandomStream eps_stream(config.master_seed, rep_index, 1);
  Eigen::MatrixXd x(n, g);
  Eigen::MatrixXd eps(n, g);
  for (Eigen::Index row = 0; row < n; ++row) x.row(row) = simulate_bridge(config.grid_size, x_stream).transpose();
  for (Eigen::Index row = 0; row < n; ++row) eps.row(row) = simulate_bridge(config.grid_size, eps_stream).transpose();

  const auto first_regime = static_cast<Eigen::Index>(
      std::floor(static_cast<double>(config.n) * config.change_fraction));
  const Eigen::MatrixXd before = operator_matrix(psi_gauss, grid);
  Eigen::MatrixXd y(n, g);
  y.topRows(first_regime).noalias() = x.topRows(first_regime) * before;
  if (first_regime < n) {
    const Eigen::MatrixXd after = config.c * before;
    y.bottomRows(n - first_regime).noalias() = x.bottomRows(n - first_regime) * after;
  }
  y += eps;
  return {FunctionalSample(grid, std::move(x)), FunctionalSample(grid, std::move(y))};
}

PowerStudy run_power_study(const SimConfig& config, const LimitQuantiles& limit, unsigned threads,
                           const ProgressCallback& progress) {
  validate(config);
  if (limit.key.pq != config.p * config.q || limit.key.functional != config.functional) {
    throw Error(ErrorKind::ConfigError, "critical values do not match pq or functional of the study");
  }
  std::vector<double> critical(config.alphas.size());
  for (std::size_t a = 0; a < config.alphas.size(); ++a) critical[a] = critical_value(limit, config.alphas[a]);

  PowerStudy study;
  study.statistics.assign(config.reps, std::numeric_limits<double>::quiet_NaN());
  study.rejections.assign(config.reps, std::vector<bool>(config.alphas.size(), false));
  std::vector<char> failed(config.reps, 0);
  std::vector<char> regularized(config.reps, 0);
  std::vector<char> indefinite(config.reps, 0);

  std::mutex progress_mutex;
  std::size_t done = 0;
  parallel_for(config.reps, threads, [&](std::size_t rep) {
    try {
      const SimDataset data = generate_dataset(config, rep);
      const DetectorRun run =
          compute_detector(data.x, data.y, config.p, config.q, config.kernel, config.bandwidth);
      const double stat =
          config.functional == Functional::Integral ? run.path.stats.integral : run.path.stats.sup;
      study.statistics[rep] = stat;
      for (std::size_t a = 0; a < critical.size(); ++a) study.rejections[rep][a] = stat > critical[a];
      regularized[rep] = run.diagnostics.regularized;
      indefinite[rep] = run.diagnostics.indefinite;
    } catch (const Error&) {
      failed[rep] = 1;
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(++done, config.reps);
    }
  });

  for (std::size_t rep = 0; rep < config.reps; ++rep) {
    study.failures += failed[rep];
    study.regularized += regularized[rep];
    study.indefinite += indefinite[rep];
  }
  study.table.config = config;
  for (std::size_t a = 0; a < config.alphas.size(); ++a) {
    std::size_t rejects = 0;
    for (const auto& r : study.rejections) rejects += r[a];
    study.table.rows.push_back(PowerRow{
        .c = config.c,
        .n = config.n,
        .alpha = config.alphas[a],
        .reject_rate_pct = 100.0 * static_cast<double>(rejects) / static_cast<double>(config.reps),
        .reps = config.reps,
        .seed = config.master_seed,
        .failures = study.failures,
        .regularized = study.regularized,
    });
  }
  return study;
}

PowerTable run_power_sweep(const SimConfig& base, const std::vector<double>& cs,
                           const std::vector<std::size_t>& ns, const LimitQuantiles& limit,
                           unsigned threads, const ProgressCallback& progress) {
  PowerTable table{{}, base};
  for (double c : cs) {
    for (std::size_t n : ns) {
      SimConfig cell = base;
      cell.c = c;
      cell.n = n;
      const PowerStudy study = run_power_study(cell, limit, threads, progress);
      table.rows.insert(table.rows.end(), study.table.rows.begin(), study.table.rows.end());
    }
  }
  return table;
}

void write_power_csv(std::ostream& out, const PowerTable& table) {
  out << "c,N,alpha,reject_rate_pct,reps,seed\n";
  for (const auto& row : table.rows) {
    out << row.c << ',' << row.n << ',' << row.alpha << ',' << row.reject_rate_pct << ',' << row.reps << ','
        << row.seed << '\n';
  }
}

namespace {

struct Layout {
  std::vector<double> cs;
  std::vector<std::size_t> ns;
  std::vector<double> alphas;
  std::map<std::tuple<double, std::size_t, double>, double> rates;
};

template <typename T>
void push_unique(std::vector<T>& values, T v) {
  if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
}

Layout layout_of(const PowerTable& table) {
  Layout layout;
  for (const auto& row : table.rows) {
    push_unique(layout.cs, row.c);
    push_unique(layout.ns, row.n);
    push_unique(layout.alphas, row.alpha);
    layout.rates[{row.c, row.n, row.alpha}] = row.reject_rate_pct;
  }
  return layout;
}

std::string format_number(double v, int precision) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

}  // namespace

void write_power_text(std::ostream& out, const PowerTable& table) {
  const Layout layout = layout_of(table);
  const auto& cfg = table.config;
  out << "Empirical rejection rate (%), p=" << cfg.p << ", q=" << cfg.q << ", B_N=" << cfg.bandwidth.describe()
      << ", kernel=" << cfg.kernel.name() << ", functional=" << to_string(cfg.functional)
      << ", grid=" << cfg.grid_size << "\n";
  const int cell = 8;
  out << std::setw(6) << "c";
  for (std::size_t n : layout.ns) {
    out << " |" << std::setw(cell * static_cast<int>(layout.alphas.size())) << ("N=" + std::to_string(n));
  }
  out << '\n' << std::setw(6) << "";
  for (std::size_t i = 0; i < layout.ns.size(); ++i) {
    out << " |";
    for (double a : layout.alphas) out << std::setw(cell) << ("a=" + format_number(a, 2));
  }
  out << '\n';
  for (double c : layout.cs) {
    out << std::setw(6) << format_number(c, 1);
    for (std::size_t n : layout.ns) {
      out << " |";
      for (double a : layout.alphas) {
        auto it = layout.rates.find({c, n, a});
        out << std::setw(cell) << (it == layout.rates.end() ? std::string("-") : format_number(it->second, 1));
      }
    }
    out << '\n';
  }
}

void write_power_gnuplot(std::ostream& out, const PowerTable& table) {
  const Layout layout = layout_of(table);
  out << "# c";
  for (std::size_t n : layout.ns) {
    for (double a : layout.alphas) out << "  N" << n << "_a" << a;
  }
  out << '\n';
  for (double c : layout.cs) {
    out << c;
    for (std::size_t n : layout.ns) {
      for (double a : layout.alphas) {
        auto it = layout.rates.find({c, n, a});
        out << ' ' << (it == layout.rates.end() ? std::numeric_limits<double>::quiet_NaN() : it->second);
      }
    }
    out << '\n';
  }
}

}  // namespace flmcpd
