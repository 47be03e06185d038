#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cachenet/core.hpp"
#include "cachenet/rng.hpp"

namespace cachenet {

struct PopularityDist {
  int files = 0;
  double theta = 0.0;
  std::vector<double> pmf;  // p_1..p_N at indices 0..N-1
  std::vector<double> cdf;

  double p(int file) const { return pmf.at(static_cast<std::size_t>(file - 1)); }

  int sample(double u) const {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto i = std::min<std::ptrdiff_t>(it - cdf.begin(), files - 1);
    return static_cast<int>(i) + 1;
  }
};

// p_n proportional to n^-theta; theta = 0 is uniform.
inline PopularityDist zipf_pmf(int files, double theta) {
  if (files < 1) throw ConfigError("library size must be positive");
  if (!(theta >= 0.0)) throw ConfigError("Zipf exponent must be non-negative");
  PopularityDist d{files, theta, std::vector<double>(static_cast<std::size_t>(files)), {}};
  double total = 0.0;
  for (int n = 1; n <= files; ++n) {
    d.pmf[static_cast<std::size_t>(n - 1)] = std::pow(1.0 / n, theta);
    total += d.pmf[static_cast<std::size_t>(n - 1)];
  }
  for (auto& v : d.pmf) v /= total;
  d.cdf.resize(d.pmf.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < d.pmf.size(); ++i) {
    acc += d.pmf[i];
    d.cdf[i] = acc;
  }
  d.cdf.back() = 1.0;
  return d;
}

// Which requests form N(k), the copy set of cache k.
//   open:   distinct current requests of k's neighbours
//   closed: the same plus k's own current request
enum class Neighborhood { open, closed };

inline std::string_view to_string(Neighborhood n) { return n == Neighborhood::open ? "open" : "closed"; }

inline Neighborhood parse_neighborhood(std::string_view s) {
  if (s == "open") return Neighborhood::open;
  if (s == "closed") return Neighborhood::closed;
  throw ConfigError("neighborhood must be 'open' or 'closed', got '" + std::string(s) + "'");
}

// Undirected request-correlation graph, copy probability r, and popularity.
class CorrelationModel {
 public:
  CorrelationModel(std::vector<std::vector<bool>> adjacency, double r, PopularityDist popularity,
                   Neighborhood neighborhood = Neighborhood::closed)
      : adjacency_(std::move(adjacency)), r_(r), popularity_(std::move(popularity)), neighborhood_(neighborhood) {
    const auto k = adjacency_.size();
    if (k == 0) throw ConfigError("correlation graph needs at least one vertex");
    for (std::size_t i = 0; i < k; ++i) {
      if (adjacency_[i].size() != k) throw ConfigError("adjacency matrix must be square");
      if (adjacency_[i][i]) throw ConfigError("adjacency matrix must have a zero diagonal");
      for (std::size_t j = 0; j < k; ++j) {
        if (adjacency_[i][j] != adjacency_[j][i]) throw ConfigError("adjacency matrix must be symmetric");
      }
    }
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("copy probability r must lie in [0, 1]");
  }

  static std::vector<std::vector<bool>> complete_graph(int caches) {
    std::vector<std::vector<bool>> a(static_cast<std::size_t>(caches), std::vector<bool>(static_cast<std::size_t>(caches), true));
    for (std::size_t i = 0; i < a.size(); ++i) a[i][i] = false;
    return a;
  }

  // 1-based edge list.
  static std::vector<std::vector<bool>> from_edges(int caches, std::span<const std::pair<int, int>> edges) {
    std::vector<std::vector<bool>> a(static_cast<std::size_t>(caches), std::vector<bool>(static_cast<std::size_t>(caches), false));
    for (auto [u, v] : edges) {
      if (u < 1 || v < 1 || u > caches || v > caches || u == v) {
        throw ConfigError("invalid edge (" + std::to_string(u) + ", " + std::to_string(v) + ")");
      }
      a[static_cast<std::size_t>(u - 1)][static_cast<std::size_t>(v - 1)] = true;
      a[static_cast<std::size_t>(v - 1)][static_cast<std::size_t>(u - 1)] = true;
    }
    return a;
  }

  int caches() const { return static_cast<int>(adjacency_.size()); }
  double r() const { return r_; }
  const PopularityDist& popularity() const { return popularity_; }
  Neighborhood neighborhood() const { return neighborhood_; }
  bool adjacent(int a, int b) const { return adjacency_[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)]; }

  // Distinct files in N(k), ascending. Empty for an isolated vertex in open mode.
  std::vector<int> copy_set(int cache, const DemandVector& current) const {
    std::vector<int> files;
    for (int j = 1; j <= caches(); ++j) {
      if (adjacent(cache, j) || (j == cache && neighborhood_ == Neighborhood::closed)) {
        files.push_back(current.request(j));
      }
    }
    std::sort(files.begin(), files.end());
    files.erase(std::unique(files.begin(), files.end()), files.end());
    return files;
  }

 private:
  std::vector<std::vector<bool>> adjacency_;
  double r_;
  PopularityDist popularity_;
  Neighborhood neighborhood_;
};

// p-hat_{n,k} = r/|N(k)| + (1-r) p_n for n in N(k), (1-r) p_n otherwise.
// An empty N(k) falls back to the popularity pmf.
inline std::vector<double> conditional_pmf(int cache, const DemandVector& current, const CorrelationModel& model) {
  const auto& pop = model.popularity();
  const auto copy = model.copy_set(cache, current);
  if (copy.empty()) return pop.pmf;
  const double r = model.r();
  std::vector<double> out(pop.pmf.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pop.pmf[i] * (1.0 - r);
  for (int n : copy) out[static_cast<std::size_t>(n - 1)] += r / static_cast<double>(copy.size());
  return out;
}

struct ChainState {
  DemandVector current;
  Rng rng;
  std::vector<DemandVector> history;
};

// Independent draws from the popularity pmf on the chain's substream.
inline ChainState start_chain(const CorrelationModel& model, std::uint64_t seed, std::uint64_t chain = 0) {
  Rng rng(seed, chain);
  std::vector<int> requests(static_cast<std::size_t>(model.caches()));
  for (auto& d : requests) d = model.popularity().sample(rng.uniform());
  return ChainState{DemandVector(std::move(requests)), std::move(rng), {}};
}

// One systematic-scan sweep: caches 1..K in order, each redrawn from its conditional given the
// latest values. The draw uses the mixture form of the conditional: with probability r copy a
// uniform member of N(k), otherwise sample the popularity pmf.
inline void gibbs_sweep(ChainState& state, const CorrelationModel& model) {
  for (int k = 1; k <= model.caches(); ++k) {
    const auto copy = model.copy_set(k, state.current);
    const double u = state.rng.uniform();
    const double v = state.rng.uniform();
    int file;
    if (!copy.empty() && u < model.r()) {
      file = copy[static_cast<std::size_t>(std::min<double>(v * static_cast<double>(copy.size()), static_cast<double>(copy.size() - 1)))];
    } else {
      file = model.popularity().sample(v);
    }
    state.current.set_request(k, file);
  }
  state.history.push_back(state.current);
}

// `burn_in` discarded sweeps, then `count` recorded sweeps; stream `chain` of `seed`.
inline std::vector<DemandVector> sample_demands(const CorrelationModel& model, int count, int burn_in,
                                                std::uint64_t seed, std::uint64_t chain = 0) {
  if (count < 1) throw ConfigError("sample count must be positive");
  if (burn_in < 0) throw ConfigError("burn-in must be non-negative");
  auto state = start_chain(model, seed, chain);
  for (int i = 0; i < burn_in; ++i) gibbs_sweep(state, model);
  state.history.clear();
  state.history.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) gibbs_sweep(state, model);
  return std::move(state.history);
}

// Scalar summary used for convergence checks.
inline double mean_file_index(const DemandVector& d) {
  double s = 0.0;
  for (int r : d.requests()) s += r;
  return s / d.caches();
}

// Estimated potential scale reduction over m chains of length T:
//   W = mean within-chain variance, B/T = variance of chain means,
//   R = sqrt(((T-1)/T W + B/T) / W).
inline double epsr(const std::vector<std::vector<double>>& chains) {
  const auto m = chains.size();
  if (m < 2) throw ConfigError("EPSR needs at least two chains");
  const auto t = chains.front().size();
  if (t < 2) throw ConfigError("EPSR needs chains of length >= 2");
  std::vector<double> means(m);
  double w = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    if (chains[c].size() != t) throw ConfigError("EPSR chains must have equal length");
    double mean = 0.0;
    for (double v : chains[c]) mean += v;
    mean /= static_cast<double>(t);
    double var = 0.0;
    for (double v : chains[c]) var += (v - mean) * (v - mean);
    means[c] = mean;
    w += var / static_cast<double>(t - 1);
  }
  w /= static_cast<double>(m);
  if (w <= 0.0) throw NumericalError("EPSR undefined: zero within-chain variance");
  double grand = 0.0;
  for (double v : means) grand += v;
  grand /= static_cast<double>(m);
  double b_over_t = 0.0;
  for (double v : means) b_over_t += (v - grand) * (v - grand);
  b_over_t /= static_cast<double>(m - 1);
  const double tt = static_cast<double>(t);
  return std::sqrt(((tt - 1.0) / tt * w + b_over_t) / w);
}

struct PairCorrelation {
  int first = 0;
  int second = 0;
  std::optional<double> rho;  // empty when either sequence is constant
};

struct EmpiricalStats {
  double rho_max = 0.0;
  double rho_avg = 0.0;
  double l_avg = 0.0;
  std::vector<PairCorrelation> pairs;
};

// Pearson correlation of raw file indices for every cache pair, plus the mean number of
// distinct files per demand. Undefined pairs are reported and left out of the aggregates.
inline EmpiricalStats empirical_stats(std::span<const DemandVector> samples) {
  if (samples.size() < 2) throw ConfigError("empirical statistics need at least two samples");
  const int k = samples.front().caches();
  const double n = static_cast<double>(samples.size());
  std::vector<double> mean(static_cast<std::size_t>(k), 0.0);
  for (const auto& d : samples) {
    for (int c = 1; c <= k; ++c) mean[static_cast<std::size_t>(c - 1)] += d.request(c);
  }
  for (auto& v : mean) v /= n;

  EmpiricalStats out;
  double l_total = 0.0;
  for (const auto& d : samples) l_total += redundancy_pattern(d).distinct;
  out.l_avg = l_total / n;

  double rho_sum = 0.0;
  int defined = 0;
  out.rho_max = -1.0;
  for (int i = 1; i <= k; ++i) {
    for (int j = i + 1; j <= k; ++j) {
      double sij = 0.0, sii = 0.0, sjj = 0.0;
      for (const auto& d : samples) {
        const double a = d.request(i) - mean[static_cast<std::size_t>(i - 1)];
        const double b = d.request(j) - mean[static_cast<std::size_t>(j - 1)];
        sij += a * b;
        sii += a * a;
        sjj += b * b;
      }
      PairCorrelation pc{i, j, std::nullopt};
      if (sii > 0.0 && sjj > 0.0) {
        pc.rho = sij / std::sqrt(sii * sjj);
        rho_sum += *pc.rho;
        out.rho_max = std::max(out.rho_max, *pc.rho);
        ++defined;
      }
      out.pairs.push_back(pc);
    }
  }
  if (defined > 0) {
    out.rho_avg = rho_sum / defined;
  } else {
    out.rho_max = std::nan("");
    out.rho_avg = std::nan("");
  }
  return out;
}

}  // namespace cachenet
