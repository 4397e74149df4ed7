#include "flmcpd/cli.hpp"

#include "flmcpd/curve_csv.hpp"
#include "flmcpd/detector.hpp"
#include "flmcpd/error.hpp"
#include "flmcpd/fda_core.hpp"
#include "flmcpd/limit_dist.hpp"
#include "flmcpd/longrun.hpp"
#include "flmcpd/parallel.hpp"
#include "flmcpd/sim_harness.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace flmcpd::cli {

namespace {

namespace fs = std::filesystem;

struct LimitOptions {
  std::size_t reps = 100000;
  std::size_t grid = 1000;
  std::uint64_t seed = 20240601;
  std::string cache_dir;
  unsigned threads = default_thread_count();

  fs::path cache_path() const { return cache_dir.empty() ? default_cache_dir() : fs::path(cache_dir); }
};

void add_limit_options(CLI::App* cmd, LimitOptions& opts) {
  cmd->add_option("--limit-reps", opts.reps, "Monte Carlo replications for the limit law")
      ->check(CLI::Range(std::size_t{1000}, std::size_t{100000000}))
      ->capture_default_str();
  cmd->add_option("--limit-grid", opts.grid, "Grid size for simulated Brownian bridges")
      ->check(CLI::Range(std::size_t{3}, std::size_t{1000000}))
      ->capture_default_str();
  cmd->add_option("--seed", opts.seed, "Seed for the limit-law simulation")->capture_default_str();
  cmd->add_option("--cache-dir", opts.cache_dir, "Critical-value cache directory (default $FLMCPD_CACHE_DIR)");
  cmd->add_option("--threads", opts.threads, "Worker threads; results do not depend on this")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
}

LimitQuantiles resolve_limit(const LimitOptions& opts, std::size_t pq, Functional functional,
                             std::ostream& err, int verbosity) {
  LimitKey key{.pq = pq, .functional = functional, .grid_size = opts.grid, .reps = opts.reps, .seed = opts.seed};
  bool cached = false;
  auto summary = load_or_simulate(key, opts.cache_path(), opts.threads, &cached);
  if (verbosity > 0) {
    err << (cached ? "using cached " : "simulated and cached ") << (opts.cache_path() / key.cache_file_name()).string()
        << '\n';
  }
  return summary;
}

class OutputSink {
 public:
  OutputSink(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorKind::IoError, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : fallback_; }

 private:
  std::ofstream file_;
  std::ostream& fallback_;
};

// ---- test -----------------------------------------------------------------

struct TestOptions {
  std::string input_x;
  std::string input_y;
  std::size_t p = 1;
  std::size_t q = 1;
  std::string kernel = "flattop";
  std::string bandwidth = "n13over4";
  std::string functional = "integral";
  double alpha = 0.05;
  std::string output;
  LimitOptions limit;
};

int cmd_test(const TestOptions& o, std::ostream& out, std::ostream& err, int verbosity) {
  TestConfig config{.p = o.p,
                    .q = o.q,
                    .kernel = KernelSpec::parse(o.kernel),
                    .bandwidth = BandwidthRule::parse(o.bandwidth),
                    .functional = parse_functional(o.functional),
                    .alpha = o.alpha};
  const FunctionalSample x = read_curves(fs::path(o.input_x));
  const FunctionalSample y = read_curves(fs::path(o.input_y));
  validate_test_inputs(x, y, config);
  const LimitQuantiles limit = resolve_limit(o.limit, o.p * o.q, config.functional, err, verbosity);
  const TestResult result = run_test(x, y, config, limit);
  if (result.diagnostics.bandwidth_too_wide) err << "warning: B_N >= sqrt(N)\n";
  if (result.diagnostics.regularized) err << "warning: long-run covariance was regularized\n";
  if (result.diagnostics.near_tie_x || result.diagnostics.near_tie_y) err << "warning: near-tied eigenvalues\n";
  OutputSink sink(o.output, out);
  sink.stream() << to_json(result) << '\n';
  return kOk;
}

// ---- simulate -------------------------------------------------------------

struct SimulateOptions {
  std::string config_path;
  std::vector<std::size_t> ns{1000};
  std::vector<double> cs{1.0};
  std::size_t p = 1;
  std::size_t q = 1;
  std::size_t grid = kDefaultGridSize;
  std::size_t reps = 1000;
  std::vector<double> alphas{0.01, 0.05, 0.10};
  double change_fraction = 0.5;
  std::string kernel = "flattop";
  std::string bandwidth = "n13over4";
  std::string functional = "integral";
  std::uint64_t sim_seed = 1;
  std::string output;
  std::string table;
  std::string gnuplot;
  std::size_t progress_every = 0;
  std::string emit_dir;
  std::size_t emit_rep = 0;
  LimitOptions limit;
};

// Keys present in the JSON file fill options the command line left unset.
void apply_json_config(const std::string& path, SimulateOptions& o, const CLI::App& cmd) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
  auto unset = [&](const char* flag) { return cmd.count(flag) == 0; };
  try {
    auto take = [&](const char* key, const char* flag, auto& target) {
      if (doc.contains(key) && unset(flag)) doc.at(key).get_to(target);
    };
    if (doc.contains("N") && unset("--N")) {
      o.ns = doc["N"].is_array() ? doc["N"].get<std::vector<std::size_t>>()
                                 : std::vector<std::size_t>{doc["N"].get<std::size_t>()};
    }
    if (doc.contains("c") && unset("--c")) {
      o.cs = doc["c"].is_array() ? doc["c"].get<std::vector<double>>() : std::vector<double>{doc["c"].get<double>()};
    }
    take("p", "--p", o.p);
    take("q", "--q", o.q);
    take("grid_size", "--grid", o.grid);
    take("reps", "--reps", o.reps);
    take("alphas", "--alpha", o.alphas);
    take("change_fraction", "--change-fraction", o.change_fraction);
    take("kernel", "--kernel", o.kernel);
    take("bandwidth", "--bandwidth", o.bandwidth);
    take("functional", "--functional", o.functional);
    take("seed", "--sim-seed", o.sim_seed);
    take("limit_reps", "--limit-reps", o.limit.reps);
    take("limit_grid", "--limit-grid", o.limit.grid);
    take("limit_seed", "--seed", o.limit.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, path + ": " + e.what());
  }
}

int cmd_simulate(SimulateOptions o, const CLI::App& cmd, std::ostream& out, std::ostream& err, int verbosity) {
  if (!o.config_path.empty()) apply_json_config(o.config_path, o, cmd);
  if (o.ns.empty() || o.cs.empty()) throw Error(ErrorKind::ConfigError, "need at least one N and one c");

  SimConfig base;
  base.grid_size = o.grid;
  base.p = o.p;
  base.q = o.q;
  base.reps = o.reps;
  base.alphas = o.alphas;
  base.change_fraction = o.change_fraction;
  base.kernel = KernelSpec::parse(o.kernel);
  base.bandwidth = BandwidthRule::parse(o.bandwidth);
  base.functional = parse_functional(o.functional);
  base.master_seed = o.sim_seed;
  for (double c : o.cs) {
    for (std::size_t n : o.ns) {
      SimConfig cell = base;
      cell.c = c;
      cell.n = n;
      validate(cell);
    }
  }
  if (!o.emit_dir.empty() && o.emit_rep >= o.reps) {
    throw Error(ErrorKind::ConfigError, "--emit-rep must be smaller than --reps");
  }

  const LimitQuantiles limit = resolve_limit(o.limit, o.p * o.q, base.functional, err, verbosity);

  PowerTable table{{}, base};
  for (double c : o.cs) {
    for (std::size_t n : o.ns) {
      SimConfig cell = base;
      cell.c = c;
      cell.n = n;
      ProgressCallback progress;
      if (o.progress_every > 0) {
        progress = [&err, &o, c, n](std::size_t done, std::size_t total) {
          if (done % o.progress_every == 0 || done == total) {
            err << "c=" << c << " N=" << n << ": " << done << '/' << total << '\n';
          }
        };
      }
      const PowerStudy study = run_power_study(cell, limit, o.limit.threads, progress);
      if (study.failures > 0) err << "warning: " << study.failures << " replications failed (c=" << c << ", N=" << n << ")\n";
      if (verbosity > 0 && study.regularized > 0) {
        err << study.regularized << " replications used a regularized long-run covariance\n";
      }
      table.rows.insert(table.rows.end(), study.table.rows.begin(), study.table.rows.end());

      if (!o.emit_dir.empty() && c == o.cs.front() && n == o.ns.front()) {
        fs::create_directories(o.emit_dir);
        const SimDataset data = generate_dataset(cell, o.emit_rep);
        write_curves(fs::path(o.emit_dir) / "x.csv", data.x.grid(), data.x.values());
        write_curves(fs::path(o.emit_dir) / "y.csv", data.y.grid(), data.y.values());
        nlohmann::json record{{"rep", o.emit_rep},
                              {"c", c},
                              {"N", n},
                              {"p", o.p},
                              {"q", o.q},
                              {"kernel", base.kernel.name()},
                              {"bandwidth", base.bandwidth.describe()},
                              {"functional", to_string(base.functional)},
                              {"sim_seed", o.sim_seed},
                              {"statistic", study.statistics[o.emit_rep]}};
        std::ofstream rec(fs::path(o.emit_dir) / "replication.json");
        rec << record.dump(2) << '\n';
        if (!rec) throw Error(ErrorKind::IoError, "cannot write replication record");
      }
    }
  }

  OutputSink sink(o.output, out);
  write_power_csv(sink.stream(), table);
  if (!o.table.empty()) {
    std::ofstream t(o.table);
    if (!t) throw Error(ErrorKind::IoError, "cannot write " + o.table);
    write_power_text(t, table);
  }
  if (!o.gnuplot.empty()) {
    std::ofstream g(o.gnuplot);
    if (!g) throw Error(ErrorKind::IoError, "cannot write " + o.gnuplot);
    write_power_gnuplot(g, table);
  }
  return kOk;
}

// ---- critvals -------------------------------------------------------------

struct CritvalOptions {
  std::size_t pq = 1;
  std::string functional = "integral";
  LimitOptions limit;
};

int cmd_critvals(const CritvalOptions& o, std::ostream& out, std::ostream& err, int verbosity) {
  const Functional functional = parse_functional(o.functional);
  const LimitQuantiles summary = resolve_limit(o.limit, o.pq, functional, err, std::max(verbosity, 1));
  out << "# pq=" << o.pq << " functional=" << to_string(functional) << " grid=" << o.limit.grid
      << " reps=" << o.limit.reps << " seed=" << o.limit.seed << '\n';
  out << "level,quantile\n";
  for (double level : {0.90, 0.95, 0.99}) {
    out << std::fixed << std::setprecision(2) << level << ',' << std::setprecision(6)
        << critical_value(summary, 1.0 - level) << '\n';
  }
  return kOk;
}

// ---- fpca -----------------------------------------------------------------

struct FpcaOptions {
  std::string input;
  std::size_t k = 3;
  std::string output;
  std::string eigenfunctions;
  double explained = 0.85;
};

int cmd_fpca(const FpcaOptions& o, std::ostream& out, std::ostream& err) {
  const FunctionalSample sample = read_curves(fs::path(o.input));
  if (o.k > sample.grid().size()) {
    throw Error(ErrorKind::KTooLarge, "k=" + std::to_string(o.k) + " exceeds grid size " +
                                          std::to_string(sample.grid().size()));
  }
  const CenteredSample centered = center(sample);
  const CovKernel kernel = empirical_covariance(centered.sample);
  const EigenSystem system = eigendecompose(kernel, o.k);
  const EigenSystem full = eigendecompose(kernel, sample.grid().size());

  nlohmann::json doc;
  doc["k"] = o.k;
  doc["N"] = sample.size();
  doc["grid_size"] = sample.grid().size();
  doc["total_variance"] = system.total_variance;
  std::vector<double> values(system.eigenvalues.data(), system.eigenvalues.data() + system.count());
  std::vector<double> ratios, cumulative;
  double running = 0.0;
  for (double v : values) {
    const double ratio = system.total_variance > 0.0 ? v / system.total_variance : 0.0;
    running += ratio;
    ratios.push_back(ratio);
    cumulative.push_back(running);
  }
  doc["eigenvalues"] = values;
  doc["explained_variance_ratio"] = ratios;
  doc["cumulative_explained_variance"] = cumulative;
  doc["explained_threshold"] = o.explained;
  doc["selected_by_explained_variance"] = select_by_explained_variance(full, o.explained);
  doc["sign_rule"] = std::string(system.sign_rule);
  std::vector<std::string> warnings;
  if (system.degenerate) warnings.emplace_back("degenerate: covariance operator is zero");
  if (system.near_tie) warnings.emplace_back("near_tie: consecutive eigenvalues are not separated");
  if (system.clipped_negative) warnings.emplace_back("clipped_negative: negative eigenvalues were set to 0");
  doc["warnings"] = warnings;
  for (const auto& w : warnings) err << "warning: " << w << '\n';

  if (!o.eigenfunctions.empty()) write_curves(fs::path(o.eigenfunctions), system.grid, system.eigenfunctions);
  OutputSink sink(o.output, out);
  sink.stream() << doc.dump(2) << '\n';
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (classify(e.kind())) {
    case ErrorClass::Usage: return kUsage;
    case ErrorClass::Data: return kDataError;
    case ErrorClass::Numerical: return kNumericalFailure;
  }
  return kInternal;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Projection-based test for a change in the operator of a functional linear model", "flmcpd"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  int verbosity = 0;
  app.add_flag("--version", show_version, "Print the version and exit");
  app.add_flag("-v,--verbose", verbosity, "More diagnostics on stderr");

  TestOptions test_opts;
  auto* test = app.add_subcommand("test", "Run the change-point test on curve CSV files");
  test->add_option("--input-x", test_opts.input_x, "Predictor curves (CSV)")->required();
  test->add_option("--input-y", test_opts.input_y, "Response curves (CSV)")->required();
  test->add_option("--p", test_opts.p, "Number of X eigenfunctions")->check(CLI::PositiveNumber)->capture_default_str();
  test->add_option("--q", test_opts.q, "Number of Y eigenfunctions")->check(CLI::PositiveNumber)->capture_default_str();
  test->add_option("--kernel", test_opts.kernel, "flattop|bartlett|parzen")->capture_default_str();
  test->add_option("--bandwidth", test_opts.bandwidth, "n13over4|fixed:<h>|pow:<c>,<a>")->capture_default_str();
  test->add_option("--functional", test_opts.functional, "integral|sup")->capture_default_str();
  test->add_option("--alpha", test_opts.alpha, "Significance level")->capture_default_str();
  test->add_option("--output", test_opts.output, "Result JSON path (default stdout)");
  add_limit_options(test, test_opts.limit);

  SimulateOptions sim_opts;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo size/power study with psi(s,t)=exp(-(s-t)^2)");
  sim->add_option("--config", sim_opts.config_path, "JSON file with study settings; flags take precedence");
  sim->add_option("--N", sim_opts.ns, "Sample sizes")->delimiter(',');
  sim->add_option("--c", sim_opts.cs, "Post-change scale factors")->delimiter(',');
  sim->add_option("--p", sim_opts.p, "Number of X eigenfunctions")->check(CLI::PositiveNumber);
  sim->add_option("--q", sim_opts.q, "Number of Y eigenfunctions")->check(CLI::PositiveNumber);
  sim->add_option("--grid", sim_opts.grid, "Curve grid size")->check(CLI::Range(std::size_t{3}, std::size_t{100000}));
  sim->add_option("--reps", sim_opts.reps, "Replications per cell")->check(CLI::PositiveNumber);
  sim->add_option("--alpha", sim_opts.alphas, "Significance levels")->delimiter(',');
  sim->add_option("--change-fraction", sim_opts.change_fraction, "Fraction of curves before the change");
  sim->add_option("--kernel", sim_opts.kernel, "flattop|bartlett|parzen");
  sim->add_option("--bandwidth", sim_opts.bandwidth, "n13over4|fixed:<h>|pow:<c>,<a>");
  sim->add_option("--functional", sim_opts.functional, "integral|sup");
  sim->add_option("--sim-seed", sim_opts.sim_seed, "Master seed for simulated datasets");
  sim->add_option("--output", sim_opts.output, "Power table CSV path (default stdout)");
  sim->add_option("--table", sim_opts.table, "Also write a formatted text table here");
  sim->add_option("--gnuplot", sim_opts.gnuplot, "Also write gnuplot-ready power curves here");
  sim->add_option("--progress-every", sim_opts.progress_every, "Report progress every n replications (0 = off)");
  sim->add_option("--emit-dataset", sim_opts.emit_dir, "Write x.csv, y.csv and replication.json of one replication");
  sim->add_option("--emit-rep", sim_opts.emit_rep, "Replication index to emit (first c and N)");
  add_limit_options(sim, sim_opts.limit);

  CritvalOptions crit_opts;
  auto* crit = app.add_subcommand("critvals", "Simulate (or load) limit-law quantiles and print 0.90/0.95/0.99");
  crit->add_option("--pq", crit_opts.pq, "Number of squared bridges")->check(CLI::PositiveNumber)->capture_default_str();
  crit->add_option("--functional", crit_opts.functional, "integral|sup")->capture_default_str();
  add_limit_options(crit, crit_opts.limit);

  FpcaOptions fpca_opts;
  auto* fpca = app.add_subcommand("fpca", "Eigenvalues and eigenfunctions of the sample covariance");
  fpca->add_option("--input", fpca_opts.input, "Curve CSV")->required();
  fpca->add_option("--k", fpca_opts.k, "Number of eigenpairs")->check(CLI::PositiveNumber)->capture_default_str();
  fpca->add_option("--output", fpca_opts.output, "Summary JSON path (default stdout)");
  fpca->add_option("--eigenfunctions", fpca_opts.eigenfunctions, "Eigenfunction CSV path");
  fpca->add_option("--explained", fpca_opts.explained, "Explained-variance threshold for component selection")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (show_version) {
    out << "flmcpd " << kVersion << '\n';
    return kOk;
  }

  try {
    if (test->parsed()) return cmd_test(test_opts, out, err, verbosity);
    if (sim->parsed()) return cmd_simulate(sim_opts, *sim, out, err, verbosity);
    if (crit->parsed()) return cmd_critvals(crit_opts, out, err, verbosity);
    if (fpca->parsed()) return cmd_fpca(fpca_opts, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
  out << app.help();
  return kUsage;
}

}  // namespace flmcpd::cli
