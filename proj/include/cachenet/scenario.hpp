#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cachenet/bounds.hpp"
#include "cachenet/core.hpp"
#include "cachenet/csv.hpp"
#include "cachenet/delivery.hpp"
#include "cachenet/demand.hpp"
#include "cachenet/messages.hpp"
#include "cachenet/placement.hpp"

namespace cachenet {

// Runs fn(0..n-1) on up to `jobs` threads. Each index writes only its own output slot, so
// results do not depend on scheduling. The exception of the lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> workers;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    for (std::size_t w = 0; w < count; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

enum class DemandMode { explicit_vector, pattern, pattern_average, gibbs };

inline std::string_view to_string(DemandMode m) {
  switch (m) {
    case DemandMode::explicit_vector: return "explicit";
    case DemandMode::pattern: return "pattern";
    case DemandMode::pattern_average: return "pattern-average";
    case DemandMode::gibbs: return "gibbs";
  }
  return "?";
}

inline DemandMode parse_demand_mode(std::string_view s) {
  if (s == "explicit") return DemandMode::explicit_vector;
  if (s == "pattern") return DemandMode::pattern;
  if (s == "pattern-average") return DemandMode::pattern_average;
  if (s == "gibbs") return DemandMode::gibbs;
  throw ConfigError("unknown demand mode '" + std::string(s) + "' (explicit, pattern, pattern-average, gibbs)");
}

// "a:step:b" inclusive of b up to rounding, a single value, or a comma list of either; values
// are rounded to 12 decimals so grid points print cleanly.
inline std::vector<double> parse_m_grid(std::string_view text) {
  if (const auto comma = text.find(','); comma != std::string_view::npos) {
    auto out = parse_m_grid(text.substr(0, comma));
    const auto rest = parse_m_grid(text.substr(comma + 1));
    out.insert(out.end(), rest.begin(), rest.end());
    if (out.size() > 100000) throw ConfigError("grid has too many points");
    return out;
  }
  auto to_double = [&](std::string_view s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(std::string(s), &used);
      if (used != s.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("'" + std::string(s) + "' is not a number");
    }
  };
  const auto c1 = text.find(':');
  if (c1 == std::string_view::npos) return {to_double(text)};
  const auto c2 = text.find(':', c1 + 1);
  if (c2 == std::string_view::npos) throw ConfigError("grid must be start:step:end, got '" + std::string(text) + "'");
  const double start = to_double(text.substr(0, c1));
  const double step = to_double(text.substr(c1 + 1, c2 - c1 - 1));
  const double end = to_double(text.substr(c2 + 1));
  if (!(step > 0.0)) throw ConfigError("grid step must be positive");
  if (end < start) throw ConfigError("grid end is below its start");
  const auto count = static_cast<long>(std::floor((end - start) / step + 1e-9)) + 1;
  if (count > 100000) throw ConfigError("grid has too many points");
  std::vector<double> out;
  for (long i = 0; i < count; ++i) out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
  return out;
}

inline std::vector<int> parse_int_list(std::string_view text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const std::string item(text.substr(pos, comma - pos));
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("'" + item + "' is not an integer");
    }
    pos = comma + 1;
  }
  return out;
}

// Prefixes configuration errors raised by fn with the offending field name.
template <class Fn>
auto field_context(const std::string& field, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

// Experiment description. JSON keys: K, N, m_ratio, placement, delivery, demand_mode, demands,
// pattern, L, r, theta, chains, burn_in, samples, graph, neighborhood, seed, F, out, jobs.
struct ScenarioConfig {
  int caches = 0;
  int files = 1000;
  std::vector<double> m_grid;
  PlacementScheme placement = PlacementScheme::centralized;
  std::vector<DeliveryScheme> delivery{DeliveryScheme::nonadaptive, DeliveryScheme::simplified, DeliveryScheme::adaptive};
  std::optional<DemandMode> demand_mode;
  std::vector<int> demands;
  std::vector<int> pattern;
  int distinct = 0;  // L, for pattern-average
  double r = 0.9;
  double theta = 0.0;
  int chains = 5;
  int burn_in = 150;
  int samples = 1000;
  std::string graph = "complete";
  Neighborhood neighborhood = Neighborhood::closed;
  std::uint64_t seed = 1;
  std::size_t file_length = 0;  // F
  std::string out;
  int jobs = 1;

  static ScenarioConfig from_json(const nlohmann::json& j);

  SystemConfig system(double m_ratio) const { return SystemConfig{caches, files, m_ratio, file_length}; }

  // Checks everything that does not depend on the subcommand.
  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) { throw ConfigError(field + ": " + why); };
    if (caches < 1 || caches > kMaxCaches) fail("K", "must lie in [1, " + std::to_string(kMaxCaches) + "]");
    if (files < caches) fail("N", "must be at least K");
    for (std::size_t i = 0; i < m_grid.size(); ++i) {
      if (!(m_grid[i] >= 0.0 && m_grid[i] <= 1.0)) fail("m_ratio[" + std::to_string(i) + "]", "must lie in [0, 1]");
    }
    if (delivery.empty()) fail("delivery", "needs at least one scheme");
    if (!(r >= 0.0 && r <= 1.0)) fail("r", "must lie in [0, 1]");
    if (!(theta >= 0.0)) fail("theta", "must be non-negative");
    if (chains < 1) fail("chains", "must be positive");
    if (burn_in < 0) fail("burn_in", "must be non-negative");
    if (samples < 1) fail("samples", "must be positive");
    if (jobs < 1) fail("jobs", "must be positive");
    if (!demand_mode) return;
    switch (*demand_mode) {
      case DemandMode::explicit_vector:
        if (static_cast<int>(demands.size()) != caches) fail("demands", "needs exactly K entries");
        for (std::size_t i = 0; i < demands.size(); ++i) {
          if (demands[i] < 1 || demands[i] > files) fail("demands[" + std::to_string(i) + "]", "must lie in [1, N]");
        }
        break;
      case DemandMode::pattern:
        if (pattern.empty()) fail("pattern", "required by demand_mode pattern");
        if (field_context("pattern", [&] { return RedundancyPattern(pattern); }).caches() != caches) {
          fail("pattern", "counts must sum to K");
        }
        if (static_cast<int>(pattern.size()) > files) fail("pattern", "more distinct files than N");
        break;
      case DemandMode::pattern_average:
        if (distinct < 1 || distinct > caches) fail("L", "must lie in [1, K]");
        break;
      case DemandMode::gibbs:
        break;
    }
  }

  DemandMode mode() const {
    if (!demand_mode) throw ConfigError("demand_mode: not set and cannot be inferred (give demands, pattern, L or r)");
    return *demand_mode;
  }
};

namespace detail {

inline std::string field_type_error(const std::string& field, const char* expected) {
  return field + ": expected " + expected;
}

inline int json_int(const nlohmann::json& v, const std::string& field) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) return static_cast<int>(v.get<double>());
  throw ConfigError(field_type_error(field, "integer"));
}

inline double json_real(const nlohmann::json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field_type_error(field, "number"));
  return v.get<double>();
}

inline std::string json_string(const nlohmann::json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field_type_error(field, "string"));
  return v.get<std::string>();
}

// Array of integers or a comma-separated string.
inline std::vector<int> json_int_list(const nlohmann::json& v, const std::string& field) {
  if (v.is_string()) {
    try {
      return parse_int_list(v.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(field + ": " + e.what());
    }
  }
  if (!v.is_array()) throw ConfigError(field_type_error(field, "array of integers or comma-separated string"));
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(json_int(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace detail

inline ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ScenarioConfig c;
  bool gibbs_field = false;
  for (const auto& [key, v] : j.items()) {
    if (key == "K") {
      c.caches = json_int(v, key);
    } else if (key == "N") {
      c.files = json_int(v, key);
    } else if (key == "m_ratio") {
      if (v.is_number()) {
        c.m_grid = {v.get<double>()};
      } else if (v.is_string()) {
        c.m_grid = field_context(key, [&] { return parse_m_grid(v.get<std::string>()); });
      } else if (v.is_array()) {
        c.m_grid.clear();
        for (std::size_t i = 0; i < v.size(); ++i) c.m_grid.push_back(json_real(v[i], key + "[" + std::to_string(i) + "]"));
      } else {
        throw ConfigError(field_type_error(key, "number, array or start:step:end string"));
      }
    } else if (key == "placement") {
      c.placement = field_context(key, [&] { return parse_placement(json_string(v, key)); });
    } else if (key == "delivery") {
      c.delivery.clear();
      std::vector<std::string> names;
      if (v.is_string()) {
        std::string s = v.get<std::string>();
        std::stringstream ss(s);
        for (std::string item; std::getline(ss, item, ',');) names.push_back(item);
      } else if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) names.push_back(json_string(v[i], key + "[" + std::to_string(i) + "]"));
      } else {
        throw ConfigError(field_type_error(key, "string or array of strings"));
      }
      for (std::size_t i = 0; i < names.size(); ++i) {
        const auto scheme = field_context(key + "[" + std::to_string(i) + "]", [&] { return parse_delivery(names[i]); });
        if (std::find(c.delivery.begin(), c.delivery.end(), scheme) == c.delivery.end()) c.delivery.push_back(scheme);
      }
    } else if (key == "demand_mode") {
      c.demand_mode = field_context(key, [&] { return parse_demand_mode(json_string(v, key)); });
    } else if (key == "demands") {
      c.demands = json_int_list(v, key);
    } else if (key == "pattern") {
      c.pattern = json_int_list(v, key);
    } else if (key == "L") {
      c.distinct = json_int(v, key);
    } else if (key == "r") {
      c.r = json_real(v, key);
      gibbs_field = true;
    } else if (key == "theta") {
      c.theta = json_real(v, key);
      gibbs_field = true;
    } else if (key == "chains") {
      c.chains = json_int(v, key);
    } else if (key == "burn_in") {
      c.burn_in = json_int(v, key);
    } else if (key == "samples") {
      c.samples = json_int(v, key);
    } else if (key == "graph") {
      c.graph = json_string(v, key);
    } else if (key == "neighborhood") {
      c.neighborhood = field_context(key, [&] { return parse_neighborhood(json_string(v, key)); });
    } else if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ConfigError(field_type_error(key, "non-negative integer"));
      }
      c.seed = v.get<std::uint64_t>();
    } else if (key == "F") {
      const int f = json_int(v, key);
      if (f < 0) throw ConfigError("F: must be non-negative");
      c.file_length = static_cast<std::size_t>(f);
    } else if (key == "out") {
      c.out = json_string(v, key);
    } else if (key == "jobs") {
      c.jobs = json_int(v, key);
    } else {
      throw ConfigError(key + ": unknown field");
    }
  }
  if (!c.demand_mode) {
    if (!c.demands.empty()) {
      c.demand_mode = DemandMode::explicit_vector;
    } else if (!c.pattern.empty()) {
      c.demand_mode = DemandMode::pattern;
    } else if (c.distinct > 0) {
      c.demand_mode = DemandMode::pattern_average;
    } else if (gibbs_field) {
      c.demand_mode = DemandMode::gibbs;
    }
  }
  c.validate();
  return c;
}

// 1-based "u v" pairs, one per line; blank lines and '#' comments are skipped.
inline std::vector<std::vector<bool>> load_edge_list(const std::string& path, int caches) {
  std::ifstream in(path);
  if (!in) throw ConfigError("graph: cannot open '" + path + "'");
  std::vector<std::pair<int, int>> edges;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    int u = 0, v = 0;
    if (!(ss >> u)) continue;
    std::string rest;
    if (!(ss >> v) || (ss >> rest)) throw ConfigError("graph: " + path + ":" + std::to_string(lineno) + ": expected 'u v'");
    edges.emplace_back(u, v);
  }
  return field_context("graph", [&] { return CorrelationModel::from_edges(caches, edges); });
}

inline CorrelationModel correlation_model(const ScenarioConfig& cfg) {
  auto adjacency = cfg.graph == "complete" ? CorrelationModel::complete_graph(cfg.caches) : load_edge_list(cfg.graph, cfg.caches);
  return CorrelationModel(std::move(adjacency), cfg.r, zipf_pmf(cfg.files, cfg.theta), cfg.neighborhood);
}

// Gap to the lower bound closed by a scheme: (R_na - R) / (R_na - bound).
// Undefined when the non-adaptive rate already meets the bound.
inline std::optional<double> gap_reduction(double r_na, double r_scheme, double bound) {
  const double gap = r_na - bound;
  if (!(gap > 1e-12 * std::max(1.0, std::abs(r_na)))) return std::nullopt;
  return (r_na - r_scheme) / gap;
}

struct GapReport {
  double m_ratio = 0.0;
  DeliveryScheme scheme = DeliveryScheme::nonadaptive;
  std::string pattern;   // dash-joined, or "mean" for averages
  double distinct = 0.0; // L, averaged for Gibbs runs
  double rate_nonadaptive = 0.0;
  double rate = 0.0;
  double bound = 0.0;
  std::optional<double> gap;

  // m_ratio,scheme,pattern,L,rate,bound,gap_reduction
  std::string csv_row() const {
    return csv::join({csv::num(m_ratio), std::string(to_string(scheme)), pattern, csv::num(distinct), csv::num(rate),
                      csv::num(bound), gap ? csv::num(*gap) : std::string()});
  }
};

inline constexpr std::string_view kRatesHeader = "m_ratio,scheme,pattern,L,rate,bound,gap_reduction";
inline constexpr std::string_view kSamplesPrefix = "sample_index";
inline constexpr std::string_view kStatsHeader = "r,theta,rho_max,rho_avg,L_avg";
inline constexpr std::string_view kDiagnosticsHeader = "chains,burn_in,samples,epsr";
inline constexpr std::string_view kBoundsHeader = "m_ratio,pattern,L,bound";

inline std::string placement_header(int caches) {
  std::string h = "scheme,K,m_ratio";
  for (int s = 0; s <= caches; ++s) h += ",x_" + std::to_string(s);
  return h;
}

inline std::string samples_header(int caches) {
  std::string h(kSamplesPrefix);
  for (int k = 1; k <= caches; ++k) h += ",d_" + std::to_string(k);
  return h;
}

// Output of one Gibbs run: pooled post-burn-in samples of all chains (chain-major) plus
// diagnostics.
struct GibbsRun {
  std::vector<DemandVector> samples;
  EmpiricalStats stats;
  double epsr = 0.0;
};

// Chain c uses substream `stream_base + c` of the scenario seed.
inline GibbsRun run_gibbs(const ScenarioConfig& cfg, std::uint64_t stream_base = 0) {
  const auto model = correlation_model(cfg);
  const auto n_chains = static_cast<std::size_t>(cfg.chains);
  std::vector<std::vector<DemandVector>> per_chain(n_chains);
  parallel_for(n_chains, cfg.jobs, [&](std::size_t c) {
    per_chain[c] = sample_demands(model, cfg.samples, cfg.burn_in, cfg.seed, stream_base + c);
  });
  GibbsRun run;
  std::vector<std::vector<double>> traces;
  for (auto& chain : per_chain) {
    std::vector<double> trace;
    trace.reserve(chain.size());
    for (const auto& d : chain) trace.push_back(mean_file_index(d));
    traces.push_back(std::move(trace));
    run.samples.insert(run.samples.end(), chain.begin(), chain.end());
  }
  run.epsr = cfg.chains >= 2 && cfg.samples >= 2 ? epsr(traces) : std::nan("");
  run.stats = empirical_stats(run.samples);
  return run;
}

namespace detail {

inline double scheme_rate(DeliveryScheme scheme, const PlacementProfile& p, const RedundancyPattern& pattern) {
  switch (scheme) {
    case DeliveryScheme::nonadaptive: return rate_nonadaptive(p, pattern.distinct());
    case DeliveryScheme::simplified: return simplified_plan(p, pattern.distinct()).rate;
    case DeliveryScheme::adaptive: return adaptive_rate(p, pattern);
  }
  throw ConfigError("unknown delivery scheme");
}

}  // namespace detail

// Rate rows for one profile and a weighted set of patterns. With a single pattern the row
// carries its label; otherwise rates, L and bounds are weighted means labelled "mean" and the
// gap reduction is taken on the means. Adaptive LPs run once per distinct pattern.
inline std::vector<GapReport> weighted_rates(const ScenarioConfig& cfg, const PlacementProfile& p,
                                             const std::vector<std::pair<RedundancyPattern, double>>& weighted,
                                             int jobs = 1) {
  const double cache_size = p.m_ratio * cfg.files;
  const auto n = weighted.size();
  std::vector<double> adaptive(n, 0.0);
  const bool wants_adaptive = std::find(cfg.delivery.begin(), cfg.delivery.end(), DeliveryScheme::adaptive) != cfg.delivery.end();
  if (wants_adaptive) {
    parallel_for(n, jobs, [&](std::size_t i) { adaptive[i] = adaptive_rate(p, weighted[i].first); });
  }
  double total = 0.0;
  for (const auto& [pat, w] : weighted) total += w;
  if (!(total > 0.0)) throw ConfigError("pattern weights must be positive");

  double l_avg = 0.0, bound_avg = 0.0, na_avg = 0.0;
  for (const auto& [pat, w] : weighted) {
    l_avg += w * pat.distinct();
    bound_avg += w * cutset_bound(cfg.caches, pat.distinct(), cfg.files, cache_size).value;
    na_avg += w * rate_nonadaptive(p, pat.distinct());
  }
  l_avg /= total;
  bound_avg /= total;
  na_avg /= total;

  std::vector<GapReport> rows;
  for (DeliveryScheme scheme : cfg.delivery) {
    double rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = scheme == DeliveryScheme::adaptive ? adaptive[i] : detail::scheme_rate(scheme, p, weighted[i].first);
      rate += weighted[i].second * v;
    }
    rate /= total;
    GapReport g;
    g.m_ratio = p.m_ratio;
    g.scheme = scheme;
    g.pattern = n == 1 ? weighted.front().first.label() : "mean";
    g.distinct = l_avg;
    g.rate_nonadaptive = na_avg;
    g.rate = rate;
    g.bound = bound_avg;
    g.gap = gap_reduction(na_avg, rate, bound_avg);
    rows.push_back(std::move(g));
  }
  return rows;
}

// Pattern histogram of a sample set, in pattern order.
inline std::vector<std::pair<RedundancyPattern, double>> pattern_histogram(std::span<const DemandVector> samples) {
  std::map<RedundancyPattern, double> counts;
  for (const auto& d : samples) counts[redundancy_pattern(d).pattern] += 1.0;
  return {counts.begin(), counts.end()};
}

struct ScenarioOutput {
  std::string placement;    // empty when not produced
  std::string rates;
  std::string bounds;
  std::string samples;
  std::string stats;
  std::string diagnostics;
  std::vector<GapReport> reports;
  std::optional<GibbsRun> gibbs;
};

// Placement rows and rate rows for every grid point, plus sample dumps and statistics in Gibbs
// mode. Pattern-average mode emits one row per pattern and scheme followed by the uniform mean.
inline ScenarioOutput run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  ScenarioOutput out;
  const auto& grid = cfg.m_grid;
  std::vector<PlacementProfile> profiles(grid.size());
  parallel_for(grid.size(), cfg.jobs, [&](std::size_t i) { profiles[i] = make_profile(cfg.placement, cfg.caches, grid[i]); });

  out.placement = placement_header(cfg.caches) + '\n';
  for (const auto& p : profiles) out.placement += p.csv_row() + '\n';

  if (!cfg.demand_mode) return out;
  const DemandMode mode = *cfg.demand_mode;

  std::vector<std::vector<std::pair<RedundancyPattern, double>>> groups;  // each group yields rows
  switch (mode) {
    case DemandMode::explicit_vector:
      groups.push_back({{redundancy_pattern(DemandVector(cfg.demands, cfg.files)).pattern, 1.0}});
      break;
    case DemandMode::pattern:
      groups.push_back({{RedundancyPattern(cfg.pattern), 1.0}});
      break;
    case DemandMode::pattern_average: {
      std::vector<std::pair<RedundancyPattern, double>> all;
      for (const auto& pat : partitions_into_parts(cfg.caches, cfg.distinct)) {
        groups.push_back({{pat, 1.0}});
        all.emplace_back(pat, 1.0);
      }
      if (all.size() > 1) groups.push_back(std::move(all));
      break;
    }
    case DemandMode::gibbs: {
      out.gibbs = run_gibbs(cfg);
      const auto& run = *out.gibbs;
      groups.push_back(pattern_histogram(run.samples));
      out.samples = samples_header(cfg.caches) + '\n';
      for (std::size_t i = 0; i < run.samples.size(); ++i) {
        out.samples += std::to_string(i);
        for (int req : run.samples[i].requests()) out.samples += ',' + std::to_string(req);
        out.samples += '\n';
      }
      out.stats = std::string(kStatsHeader) + '\n' +
                  csv::join({csv::num(cfg.r), csv::num(cfg.theta), csv::num(run.stats.rho_max),
                             csv::num(run.stats.rho_avg), csv::num(run.stats.l_avg)}) + '\n';
      out.diagnostics = std::string(kDiagnosticsHeader) + '\n' +
                        csv::join({std::to_string(cfg.chains), std::to_string(cfg.burn_in), std::to_string(cfg.samples),
                                   csv::num(run.epsr)}) + '\n';
      break;
    }
  }

  // One task per (grid point, group); rows are assembled in task order.
  const std::size_t tasks = grid.size() * groups.size();
  std::vector<std::vector<GapReport>> rows(tasks);
  parallel_for(tasks, cfg.jobs, [&](std::size_t t) {
    rows[t] = weighted_rates(cfg, profiles[t / groups.size()], groups[t % groups.size()]);
  });
  out.rates = std::string(kRatesHeader) + '\n';
  out.bounds = std::string(kBoundsHeader) + '\n';
  for (auto& task_rows : rows) {
    if (!task_rows.empty()) {
      const auto& g = task_rows.front();
      out.bounds += csv::join({csv::num(g.m_ratio), g.pattern, csv::num(g.distinct), csv::num(g.bound)}) + '\n';
    }
    for (auto& g : task_rows) {
      out.rates += g.csv_row() + '\n';
      out.reports.push_back(std::move(g));
    }
  }
  return out;
}

// Bit-level verification.

struct VerifyCase {
  double m_ratio = 0.0;
  DeliveryScheme scheme = DeliveryScheme::nonadaptive;
  DemandVector demand;
  double schedule_rate = 0.0;
  double analytic_rate = 0.0;  // plan objective on the realized subset sizes
  double nominal_rate = 0.0;   // plan objective on the profile
  bool decoded = false;
  bool rate_ok = false;
  std::vector<int> failed_caches;
  std::string detail;

  bool ok() const { return decoded && rate_ok; }
};

struct VerifyReport {
  std::vector<VerifyCase> cases;

  bool ok() const {
    return std::all_of(cases.begin(), cases.end(), [](const VerifyCase& c) { return c.ok(); });
  }
  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(cases.begin(), cases.end(), [](const VerifyCase& c) { return !c.ok(); }));
  }

  std::string csv() const {
    std::string s = "m_ratio,scheme,demand,schedule_rate,analytic_rate,nominal_rate,status,detail\n";
    for (const auto& c : cases) {
      std::string demand;
      for (int r : c.demand.requests()) demand += (demand.empty() ? "" : "-") + std::to_string(r);
      s += csv::join({csv::num(c.m_ratio), std::string(to_string(c.scheme)), demand, csv::num(c.schedule_rate),
                      csv::num(c.analytic_rate), csv::num(c.nominal_rate), c.ok() ? "pass" : "fail", c.detail}) + '\n';
    }
    return s;
  }
};

inline double rate_slack(int caches, std::size_t file_length) {
  return static_cast<double>(std::size_t{1} << caches) * caches / static_cast<double>(file_length);
}

// Decodes every cache's request from the schedule. Returns the caches that failed, each with
// the reason.
inline std::vector<std::pair<int, std::string>> verify_schedule(const PartitionMap& pm, const FileLibrary& library,
                                                                 const MessageSchedule& schedule) {
  std::vector<std::pair<int, std::string>> failed;
  const DemandVector& d = schedule.demand;
  for (int k = 1; k <= d.caches(); ++k) {
    const CacheContents held(k, pm, library);
    try {
      const auto got = decode(k, held, schedule);
      if (const auto at = first_mismatch(got, library.content(d.request(k)))) {
        failed.emplace_back(k, "cache " + std::to_string(k) + ": symbol " + std::to_string(*at) + " of file " +
                                   std::to_string(d.request(k)) + " decoded wrongly");
      }
    } catch (const VerificationError& e) {
      failed.emplace_back(k, e.what());
    }
  }
  return failed;
}

inline TransferPlan make_plan(DeliveryScheme scheme, const PlacementProfile& p, const DemandVector& d, double* nominal) {
  switch (scheme) {
    case DeliveryScheme::nonadaptive: {
      auto plan = TransferPlan::identity(d, p);
      *nominal = plan.rate();
      return plan;
    }
    case DeliveryScheme::simplified: {
      const auto sp = simplified_plan(p, redundancy_pattern(d).distinct);
      auto plan = TransferPlan::from_symmetric(d, p.x, sp.y);
      *nominal = plan.rate();
      return plan;
    }
    case DeliveryScheme::adaptive: {
      auto ap = adaptive_plan(p, d);
      *nominal = ap.rate;
      return std::move(ap.plan);
    }
  }
  throw ConfigError("unknown delivery scheme");
}

// One round trip: partition, plan, broadcast, decode at every cache, rate comparison.
inline VerifyCase verify_demand(const SystemConfig& sys, const PlacementProfile& p, DeliveryScheme scheme,
                                const DemandVector& d, std::uint64_t seed) {
  VerifyCase c;
  c.m_ratio = p.m_ratio;
  c.scheme = scheme;
  c.demand = d;
  const auto files = redundancy_pattern(d).files;
  const auto pm = materialize_partition(sys, p, seed, files);
  const FileLibrary library(sys.file_length, seed);
  const auto plan = make_plan(scheme, p, d, &c.nominal_rate);
  const auto schedule = build_messages(pm, plan, library);
  c.schedule_rate = rate_of_schedule(schedule, sys.file_length);
  c.analytic_rate = realized_plan_rate(schedule.selection, d, sys.file_length);

  const auto failed = verify_schedule(pm, library, schedule);
  c.decoded = failed.empty();
  for (const auto& [cache, why] : failed) {
    c.failed_caches.push_back(cache);
    c.detail += (c.detail.empty() ? "" : "; ") + why;
  }
  const double slack = rate_slack(sys.caches, sys.file_length);
  c.rate_ok = std::abs(c.schedule_rate - c.analytic_rate) <= slack;
  if (p.scheme != PlacementScheme::decentralized) c.rate_ok = c.rate_ok && std::abs(c.schedule_rate - c.nominal_rate) <= slack;
  if (!c.rate_ok) {
    c.detail += (c.detail.empty() ? "" : "; ") + std::string("rate outside slack ") + csv::num(slack);
  }
  return c;
}

// Demands exercised by verify: the explicit or canonical demand, every canonical demand of the
// pattern-average set, or `samples` Gibbs draws from chain 0.
inline std::vector<DemandVector> verify_demands(const ScenarioConfig& cfg) {
  switch (cfg.mode()) {
    case DemandMode::explicit_vector: return {DemandVector(cfg.demands, cfg.files)};
    case DemandMode::pattern: return {canonical_demand(RedundancyPattern(cfg.pattern))};
    case DemandMode::pattern_average: {
      std::vector<DemandVector> out;
      for (const auto& pat : partitions_into_parts(cfg.caches, cfg.distinct)) out.push_back(canonical_demand(pat));
      return out;
    }
    case DemandMode::gibbs: return sample_demands(correlation_model(cfg), cfg.samples, cfg.burn_in, cfg.seed, 0);
  }
  throw ConfigError("unknown demand mode");
}

inline VerifyReport verify(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.file_length == 0) throw ConfigError("F: required for verification");
  if (cfg.m_grid.empty()) throw ConfigError("m_ratio: required for verification");
  const auto demands = verify_demands(cfg);
  const std::size_t per_m = cfg.delivery.size() * demands.size();
  VerifyReport report;
  report.cases.resize(cfg.m_grid.size() * per_m);
  std::vector<PlacementProfile> profiles;
  for (double m : cfg.m_grid) profiles.push_back(make_profile(cfg.placement, cfg.caches, m));
  parallel_for(report.cases.size(), cfg.jobs, [&](std::size_t t) {
    const auto mi = t / per_m;
    const auto si = (t % per_m) / demands.size();
    const auto di = t % demands.size();
    report.cases[t] = verify_demand(cfg.system(cfg.m_grid[mi]), profiles[mi], cfg.delivery[si], demands[di],
                                    cfg.seed + di);
  });
  return report;
}

}  // namespace cachenet
