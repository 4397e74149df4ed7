#include "flmcpd/limit_dist.hpp"

#include "flmcpd/error.hpp"
#include "flmcpd/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include <unistd.h>

namespace flmcpd {

std::string_view to_string(Functional f) {
  return f == Functional::Integral ? "integral" : "sup";
}

Functional parse_functional(std::string_view text) {
  if (text == "integral") return Functional::Integral;
  if (text == "sup") return Functional::Sup;
  throw Error(ErrorKind::ConfigError, "unknown functional '" + std::string(text) + "'");
}

std::string LimitKey::cache_file_name() const {
  std::ostringstream name;
  name << "critvals-" << pq << '-' << to_string(functional) << '-' << grid_size << '-' << reps << '-'
       << seed << ".json";
  return name.str();
}

Eigen::VectorXd simulate_bridge(std::size_t grid_size, RandomStream& stream) {
  if (grid_size < 3) throw Error(ErrorKind::ConfigError, "bridge grid needs at least 3 points");
  const auto g = static_cast<Eigen::Index>(grid_size);
  const double intervals = static_cast<double>(grid_size - 1);
  const double step_sd = std::sqrt(1.0 / intervals);
  Eigen::VectorXd path(g);
  path[0] = 0.0;
  for (Eigen::Index a = 1; a < g; ++a) path[a] = path[a - 1] + step_sd * stream.normal();
  const double endpoint = path[g - 1];
  for (Eigen::Index a = 1; a < g - 1; ++a) {
    path[a] -= (static_cast<double>(a) / intervals) * endpoint;
  }
  path[g - 1] = 0.0;
  return path;
}

LimitSample simulate_limit(const LimitKey& key, unsigned threads) {
  if (key.pq < 1) throw Error(ErrorKind::ConfigError, "pq must be positive");
  if (key.reps < 1) throw Error(ErrorKind::ConfigError, "reps must be positive");
  if (key.grid_size < 3) throw Error(ErrorKind::ConfigError, "grid_size must be at least 3");
  LimitSample out{key, std::vector<double>(key.reps)};
  const auto g = static_cast<Eigen::Index>(key.grid_size);
  const double spacing = 1.0 / static_cast<double>(key.grid_size - 1);
  parallel_for(key.reps, threads, [&](std::size_t r) {
    RandomStream stream(key.seed, r);
    Eigen::VectorXd squared = Eigen::VectorXd::Zero(g);
    for (std::size_t l = 0; l < key.pq; ++l) {
      squared += simulate_bridge(key.grid_size, stream).array().square().matrix();
    }
    out.sorted_draws[r] =
        key.functional == Functional::Integral ? spacing * squared.sum() : squared.maxCoeff();
  });
  std::sort(out.sorted_draws.begin(), out.sorted_draws.end());
  return out;
}

double sorted_quantile(const std::vector<double>& sorted, double level) {
  if (sorted.empty()) throw Error(ErrorKind::InsufficientData, "no draws");
  const double position = level * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  if (lower + 1 >= sorted.size()) return sorted.back();
  const double fraction = position - static_cast<double>(lower);
  return sorted[lower] + fraction * (sorted[lower + 1] - sorted[lower]);
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::AlphaOutOfRange, "alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

}  // namespace

double critical_value(const LimitSample& sample, double alpha) {
  check_alpha(alpha);
  return sorted_quantile(sample.sorted_draws, 1.0 - alpha);
}

double critical_value(const LimitQuantiles& summary, double alpha) {
  check_alpha(alpha);
  // The stored quantiles form an evenly spaced table of levels, so a type-7
  // read of the table reproduces the sample quantile at every stored level.
  return sorted_quantile(summary.quantiles, 1.0 - alpha);
}

double p_value(const LimitSample& sample, double statistic) {
  const auto& d = sample.sorted_draws;
  const auto at_least = static_cast<double>(d.end() - std::lower_bound(d.begin(), d.end(), statistic));
  return (1.0 + at_least) / (static_cast<double>(d.size()) + 1.0);
}

double p_value(const LimitQuantiles& summary, double statistic) {
  const auto& q = summary.quantiles;
  const double reps = static_cast<double>(summary.key.reps);
  const double floor_p = 1.0 / (reps + 1.0);
  if (statistic <= q.front()) return 1.0;
  if (statistic > q.back()) return floor_p;
  // Fraction of draws strictly below the statistic, read off the quantile table.
  const auto upper = static_cast<std::size_t>(std::lower_bound(q.begin(), q.end(), statistic) - q.begin());
  const std::size_t lower = upper - 1;
  const double span = q[upper] - q[lower];
  const double within = span > 0.0 ? (statistic - q[lower]) / span : 1.0;
  const double below = (static_cast<double>(lower) + within) / static_cast<double>(q.size() - 1);
  const double at_least = (1.0 - below) * reps;
  return std::clamp((1.0 + at_least) / (reps + 1.0), floor_p, 1.0);
}

LimitQuantiles summarize(const LimitSample& sample) {
  LimitQuantiles out{sample.key, std::vector<double>(kQuantileCount)};
  for (std::size_t i = 0; i < kQuantileCount; ++i) {
    out.quantiles[i] = sorted_quantile(sample.sorted_draws,
                                       static_cast<double>(i) / static_cast<double>(kQuantileCount - 1));
  }
  return out;
}

std::string quantiles_to_json(const LimitQuantiles& summary) {
  nlohmann::json doc;
  doc["format"] = "flmcpd-critvals/1";
  doc["pq"] = summary.key.pq;
  doc["functional"] = to_string(summary.key.functional);
  doc["grid_size"] = summary.key.grid_size;
  doc["reps"] = summary.key.reps;
  doc["seed"] = summary.key.seed;
  doc["levels"] = kQuantileCount;
  doc["quantiles"] = summary.quantiles;
  return doc.dump(1);
}

LimitQuantiles quantiles_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    LimitQuantiles out;
    out.key.pq = doc.at("pq").get<std::size_t>();
    out.key.functional = parse_functional(doc.at("functional").get<std::string>());
    out.key.grid_size = doc.at("grid_size").get<std::size_t>();
    out.key.reps = doc.at("reps").get<std::size_t>();
    out.key.seed = doc.at("seed").get<std::uint64_t>();
    out.quantiles = doc.at("quantiles").get<std::vector<double>>();
    if (out.quantiles.size() != kQuantileCount ||
        !std::is_sorted(out.quantiles.begin(), out.quantiles.end())) {
      throw Error(ErrorKind::ParseError, "critical-value cache has a malformed quantile table");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("critical-value cache: ") + e.what());
  }
}

std::filesystem::path default_cache_dir() {
  if (const char* dir = std::getenv("FLMCPD_CACHE_DIR"); dir && *dir) return dir;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return std::filesystem::path(xdg) / "flmcpd";
  if (const char* home = std::getenv("HOME"); home && *home) {
    return std::filesystem::path(home) / ".cache" / "flmcpd";
  }
  return ".flmcpd-cache";
}

namespace {

bool same_key(const LimitKey& a, const LimitKey& b) {
  return a.pq == b.pq && a.functional == b.functional && a.grid_size == b.grid_size &&
         a.reps == b.reps && a.seed == b.seed;
}

}  // namespace

LimitQuantiles load_or_simulate(const LimitKey& key, const std::filesystem::path& cache_dir,
                                unsigned threads, bool* from_cache) {
  const auto path = cache_dir / key.cache_file_name();
  if (std::ifstream in{path}) {
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
      auto cached = quantiles_from_json(buffer.str());
      if (same_key(cached.key, key)) {
        if (from_cache) *from_cache = true;
        return cached;
      }
    } catch (const Error&) {
      // Unreadable cache entries are regenerated below.
    }
  }
  if (from_cache) *from_cache = false;
  LimitQuantiles summary = summarize(simulate_limit(key, threads));

  std::error_code ec;
  std::filesystem::create_directories(cache_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create cache directory " + cache_dir.string());
  auto temp = path;
  temp += ".tmp." + std::to_string(::getpid()) + "." +
          std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(temp);
    out << quantiles_to_json(summary) << '\n';
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + temp.string());
  }
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    std::filesystem::remove(temp, ec);
    throw Error(ErrorKind::IoError, "cannot move cache file into place at " + path.string());
  }
  return summary;
}

}  // namespace flmcpd
