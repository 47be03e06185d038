// cachenet: placement, delivery-rate, bound, sweep, Gibbs simulation and bit-level
// verification runs from the command line.
//
// Exit codes: 0 success, 1 invalid config, 2 numerical failure, 3 verification failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cachenet/cachenet.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum Exit : int { kOk = 0, kConfig = 1, kNumerical = 2, kVerification = 3 };

// Command-line values; only flags the user actually passed are overlaid on the config file.
struct Flags {
  std::string config;
  std::optional<int> caches, files, chains, burn_in, samples, distinct, file_length, jobs;
  std::optional<std::string> m_ratio, placement, delivery, demands, pattern, graph, out, demand_mode, neighborhood;
  std::optional<double> r, theta;
  std::optional<std::uint64_t> seed;
};

void add_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "JSON scenario file; flags override its fields");
  cmd.add_option("--K", f.caches, "number of caches (1..12)");
  cmd.add_option("--N", f.files, "library size");
  cmd.add_option("--m-ratio", f.m_ratio, "M/N as a value, a start:step:end grid, or a comma list of these");
  cmd.add_option("--placement", f.placement, "centralized | decentralized | lp");
  cmd.add_option("--delivery", f.delivery, "comma list of nonadaptive, simplified, adaptive");
  cmd.add_option("--demand-mode", f.demand_mode, "explicit | pattern | pattern-average | gibbs");
  cmd.add_option("--demands", f.demands, "comma-separated file indices, one per cache");
  cmd.add_option("--pattern", f.pattern, "comma-separated request multiplicities");
  cmd.add_option("--L", f.distinct, "distinct files, for pattern-average");
  cmd.add_option("--r", f.r, "copy probability of the correlated-request model");
  cmd.add_option("--theta", f.theta, "Zipf exponent");
  cmd.add_option("--chains", f.chains, "Gibbs chains");
  cmd.add_option("--burn-in", f.burn_in, "discarded sweeps per chain");
  cmd.add_option("--samples", f.samples, "recorded sweeps per chain");
  cmd.add_option("--graph", f.graph, "'complete' or an edge-list file");
  cmd.add_option("--neighborhood", f.neighborhood, "closed | open");
  cmd.add_option("--seed", f.seed, "base seed");
  cmd.add_option("--F", f.file_length, "symbols per file (bit-level runs)");
  cmd.add_option("--jobs", f.jobs, "worker threads");
  cmd.add_option("--out", f.out, "output directory; CSV goes to stdout when omitted");
}

json load_config(const Flags& f) {
  json j = json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw cachenet::ConfigError("config: cannot open '" + f.config + "'");
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw cachenet::ConfigError("config: " + f.config + ": " + e.what());
    }
    if (!j.is_object()) throw cachenet::ConfigError("config: expected a JSON object");
  }
  auto put = [&](const char* key, const auto& v) {
    if (v) j[key] = *v;
  };
  put("K", f.caches);
  put("N", f.files);
  put("m_ratio", f.m_ratio);
  put("placement", f.placement);
  put("delivery", f.delivery);
  put("demand_mode", f.demand_mode);
  put("demands", f.demands);
  put("pattern", f.pattern);
  put("L", f.distinct);
  put("r", f.r);
  put("theta", f.theta);
  put("chains", f.chains);
  put("burn_in", f.burn_in);
  put("samples", f.samples);
  put("graph", f.graph);
  put("neighborhood", f.neighborhood);
  put("seed", f.seed);
  put("F", f.file_length);
  put("out", f.out);
  put("jobs", f.jobs);
  // A flag that names a different demand source replaces the file's.
  if (f.demands || f.pattern || f.distinct) {
    if (!f.demand_mode) j.erase("demand_mode");
    if (!f.demands) j.erase("demands");
    if (!f.pattern) j.erase("pattern");
    if (!f.distinct) j.erase("L");
  }
  return j;
}

// Writes artifacts into cfg.out, or the primary one to stdout.
class Sink {
 public:
  explicit Sink(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) fs::create_directories(dir_);
  }

  void emit(const std::string& name, const std::string& content, bool primary) {
    if (content.empty()) return;
    if (dir_.empty()) {
      if (primary) std::cout << content;
      return;
    }
    const auto path = fs::path(dir_) / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw cachenet::ConfigError("out: cannot write '" + path.string() + "'");
  }

 private:
  std::string dir_;
};

void require_grid(const cachenet::ScenarioConfig& cfg) {
  if (cfg.m_grid.empty()) throw cachenet::ConfigError("m_ratio: required");
}

int run(const std::string& command, const Flags& flags) {
  auto cfg = cachenet::ScenarioConfig::from_json(load_config(flags));

  if (command == "simulate") {
    if (cfg.demand_mode && *cfg.demand_mode != cachenet::DemandMode::gibbs) {
      throw cachenet::ConfigError("demand_mode: simulate runs the Gibbs model only");
    }
    cfg.demand_mode = cachenet::DemandMode::gibbs;
  }
  if (command == "placement") {
    cfg.demand_mode.reset();
    require_grid(cfg);
  }
  if (command == "rate" || command == "bound" || command == "sweep") {
    require_grid(cfg);
    cfg.mode();
  }
  if (command == "rate" && cfg.m_grid.size() != 1) {
    throw cachenet::ConfigError("m_ratio: rate takes a single value; use sweep for grids");
  }

  Sink sink(cfg.out);
  if (command == "verify") {
    const auto report = cachenet::verify(cfg);
    sink.emit("verify.csv", report.csv(), true);
    std::cerr << "verify: " << report.cases.size() - report.failures() << "/" << report.cases.size() << " cases passed\n";
    for (const auto& c : report.cases) {
      if (!c.ok()) std::cerr << "  m_ratio=" << c.m_ratio << " " << cachenet::to_string(c.scheme) << ": " << c.detail << '\n';
    }
    return report.ok() ? kOk : kVerification;
  }

  const auto out = cachenet::run_scenario(cfg);
  if (command == "placement") {
    sink.emit("placement.csv", out.placement, true);
  } else if (command == "rate") {
    sink.emit("rates.csv", out.rates, true);
  } else if (command == "bound") {
    sink.emit("bounds.csv", out.bounds, true);
  } else if (command == "sweep") {
    sink.emit("placement.csv", out.placement, false);
    sink.emit("rates.csv", out.rates, true);
    sink.emit("bounds.csv", out.bounds, false);
    sink.emit("samples.csv", out.samples, false);
    sink.emit("stats.csv", out.stats, false);
    sink.emit("diagnostics.csv", out.diagnostics, false);
  } else if (command == "simulate") {
    sink.emit("samples.csv", out.samples, false);
    sink.emit("stats.csv", out.stats, true);
    sink.emit("diagnostics.csv", out.diagnostics, false);
    if (!cfg.m_grid.empty()) {
      sink.emit("placement.csv", out.placement, false);
      sink.emit("rates.csv", out.rates, false);
    }
    if (out.gibbs) std::cerr << "epsr: " << out.gibbs->epsr << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive coded-caching delivery: placement, rates, bounds and simulations"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"placement", "placement fractions x_0..x_K over the m_ratio grid"},
      {"rate", "delivery rates for one demand at a single m_ratio"},
      {"bound", "cutset lower bound"},
      {"sweep", "placement, rates and gap reductions over the m_ratio grid"},
      {"simulate", "Gibbs sampling of correlated demands with statistics"},
      {"verify", "bit-level encode/decode round trips"},
  };
  for (const auto& [name, help] : commands) add_flags(*app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, flags);
  } catch (const cachenet::VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << '\n';
    return kVerification;
  } catch (const cachenet::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::overflow_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const cachenet::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kConfig;
  } catch (const json::exception& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}
