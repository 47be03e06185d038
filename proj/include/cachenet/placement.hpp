#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cachenet/core.hpp"
#include "cachenet/csv.hpp"
#include "cachenet/lp.hpp"
#include "cachenet/rng.hpp"

namespace cachenet {

enum class PlacementScheme { centralized, decentralized, lp };

inline std::string_view to_string(PlacementScheme s) {
  switch (s) {
    case PlacementScheme::centralized: return "centralized";
    case PlacementScheme::decentralized: return "decentralized";
    case PlacementScheme::lp: return "lp";
  }
  return "?";
}

inline PlacementScheme parse_placement(std::string_view name) {
  if (name == "centralized") return PlacementScheme::centralized;
  if (name == "decentralized") return PlacementScheme::decentralized;
  if (name == "lp") return PlacementScheme::lp;
  throw ConfigError("unknown placement scheme '" + std::string(name) + "'");
}

// x_s: fraction of every file stored exclusively at each particular size-s subset of caches.
struct PlacementProfile {
  PlacementScheme scheme = PlacementScheme::centralized;
  double m_ratio = 0.0;
  std::vector<double> x;

  int caches() const { return static_cast<int>(x.size()) - 1; }
  double at(int s) const { return x.at(static_cast<std::size_t>(s)); }

  // scheme,K,m_ratio,x_0,...,x_K
  std::string csv_row() const {
    std::string out = std::string(to_string(scheme)) + ',' + std::to_string(caches()) + ',' + csv::num(m_ratio);
    for (double v : x) out += ',' + csv::num(v);
    return out;
  }
};

inline void check_m_ratio(double m_ratio) {
  if (!(m_ratio >= 0.0 && m_ratio <= 1.0)) {
    throw ConfigError("m_ratio must lie in [0, 1], got " + csv::num(m_ratio));
  }
}

// Integer t within rounding noise is treated as integer.
inline bool is_integral(double t) { return std::abs(t - std::round(t)) <= 1e-9; }

// Optimal worst-case placement; the classical split into C(K,t) subfiles when t = K*m_ratio is
// an integer, otherwise a mix of the two neighbouring subset sizes.
inline PlacementProfile centralized_profile(int caches, double m_ratio) {
  check_cache_count(caches);
  check_m_ratio(m_ratio);
  PlacementProfile p{PlacementScheme::centralized, m_ratio, std::vector<double>(static_cast<std::size_t>(caches) + 1, 0.0)};
  const double t = caches * m_ratio;
  if (is_integral(t)) {
    const int s = static_cast<int>(std::lround(t));
    p.x[static_cast<std::size_t>(s)] = 1.0 / binomial_real(caches, s);
    return p;
  }
  const int lo = static_cast<int>(std::floor(t));
  const int hi = lo + 1;
  p.x[static_cast<std::size_t>(lo)] = (hi - t) / binomial_real(caches, lo);
  p.x[static_cast<std::size_t>(hi)] = (t - lo) / binomial_real(caches, hi);
  return p;
}

// Large-F limit of random placement: x_s = q^s (1-q)^(K-s).
inline PlacementProfile decentralized_profile(int caches, double m_ratio) {
  check_cache_count(caches);
  check_m_ratio(m_ratio);
  PlacementProfile p{PlacementScheme::decentralized, m_ratio, std::vector<double>(static_cast<std::size_t>(caches) + 1, 0.0)};
  const double q = m_ratio;
  for (int s = 0; s <= caches; ++s) {
    p.x[static_cast<std::size_t>(s)] = std::pow(q, s) * std::pow(1.0 - q, caches - s);
  }
  return p;
}

// Worst-case (L = K) rate of the coded delivery for a profile; the placement LP objective.
inline double worst_case_rate(const PlacementProfile& p) {
  const int k = p.caches();
  double r = 0.0;
  for (int s = 0; s < k; ++s) r += binomial_real(k, s + 1) * p.at(s);
  return r;
}

inline PlacementProfile solve_placement_lp(int caches, double m_ratio) {
  check_cache_count(caches);
  check_m_ratio(m_ratio);
  lp::LinearProgram prog;
  for (int s = 0; s <= caches; ++s) prog.add_variable(s < caches ? binomial_real(caches, s + 1) : 0.0, 0.0);
  std::vector<lp::Term> partition;
  std::vector<lp::Term> capacity;
  for (int s = 0; s <= caches; ++s) {
    partition.push_back({s, binomial_real(caches, s)});
    if (s >= 1) capacity.push_back({s, binomial_real(caches - 1, s - 1)});
  }
  prog.add_equality(std::move(partition), 1.0);
  prog.add_less_equal(std::move(capacity), m_ratio);
  const auto sol = lp::solve(prog);
  if (sol.status != lp::Status::optimal) {
    throw NumericalError(std::string("placement LP ") + lp::to_string(sol.status));
  }
  return PlacementProfile{PlacementScheme::lp, m_ratio, sol.assignment};
}

inline PlacementProfile make_profile(PlacementScheme scheme, int caches, double m_ratio) {
  switch (scheme) {
    case PlacementScheme::centralized: return centralized_profile(caches, m_ratio);
    case PlacementScheme::decentralized: return decentralized_profile(caches, m_ratio);
    case PlacementScheme::lp: return solve_placement_lp(caches, m_ratio);
  }
  throw ConfigError("unknown placement scheme");
}

struct ProfileReport {
  bool nonnegative = true;
  double min_fraction = 0.0;
  bool partition_ok = true;
  double partition_residual = 0.0;  // sum_s C(K,s) x_s - 1
  bool capacity_ok = true;
  double capacity_residual = 0.0;   // sum_s C(K-1,s-1) x_s - m_ratio, must be <= 0

  bool ok() const { return nonnegative && partition_ok && capacity_ok; }
};

inline ProfileReport validate_profile(const PlacementProfile& p, int caches, double m_ratio, double tol = 1e-9) {
  ProfileReport r;
  if (p.caches() != caches) {
    r.partition_ok = false;
    r.partition_residual = std::nan("");
    return r;
  }
  r.min_fraction = *std::min_element(p.x.begin(), p.x.end());
  r.nonnegative = r.min_fraction >= -tol;
  double part = 0.0;
  double cap = 0.0;
  for (int s = 0; s <= caches; ++s) {
    part += binomial_real(caches, s) * p.at(s);
    if (s >= 1) cap += binomial_real(caches - 1, s - 1) * p.at(s);
  }
  r.partition_residual = part - 1.0;
  r.partition_ok = std::abs(r.partition_residual) <= tol;
  r.capacity_residual = cap - m_ratio;
  r.capacity_ok = r.capacity_residual <= tol;
  return r;
}

// V^n_S for every materialized file n and subset S: symbol indices stored exactly at S.
class PartitionMap {
 public:
  PartitionMap(int caches, std::size_t file_length, std::vector<int> files)
      : caches_(caches), file_length_(file_length), files_(std::move(files)),
        parts_(files_.size(), std::vector<std::vector<std::uint32_t>>(std::size_t{1} << caches)) {}

  int caches() const { return caches_; }
  std::size_t file_length() const { return file_length_; }
  const std::vector<int>& files() const { return files_; }

  bool has_file(int file) const { return slot_of(file) >= 0; }

  const std::vector<std::uint32_t>& part(int file, CacheSubset s) const { return parts_[slot(file)][s.mask()]; }
  std::vector<std::uint32_t>& part(int file, CacheSubset s) { return parts_[slot(file)][s.mask()]; }

  // Symbols of all materialized files held by one cache.
  std::size_t stored_symbols(int cache) const {
    std::size_t total = 0;
    for (const auto& file_parts : parts_) {
      for (std::size_t mask = 0; mask < file_parts.size(); ++mask) {
        if (CacheSubset(static_cast<std::uint32_t>(mask)).contains(cache)) total += file_parts[mask].size();
      }
    }
    return total;
  }

 private:
  int slot_of(int file) const {
    for (std::size_t i = 0; i < files_.size(); ++i) {
      if (files_[i] == file) return static_cast<int>(i);
    }
    return -1;
  }
  std::size_t slot(int file) const {
    const int s = slot_of(file);
    if (s < 0) throw ConfigError("file " + std::to_string(file) + " not materialized");
    return static_cast<std::size_t>(s);
  }

  int caches_;
  std::size_t file_length_;
  std::vector<int> files_;
  std::vector<std::vector<std::vector<std::uint32_t>>> parts_;
};

// Centralized and LP profiles give contiguous subfiles in ascending subset-mask order with
// lengths apportioned from x_|S| * F. Decentralized profiles store each symbol at each cache
// independently with probability m_ratio, drawn from a per-file substream of `seed`.
// `files` selects which library files to materialize (default: all of 1..N).
inline PartitionMap materialize_partition(const SystemConfig& config, const PlacementProfile& p,
                                          std::uint64_t seed, std::vector<int> files = {}) {
  config.validate(true);
  check_cache_count(config.caches);
  if (p.caches() != config.caches) throw ConfigError("profile K does not match configuration");
  if (files.empty()) {
    files.resize(static_cast<std::size_t>(config.files));
    std::iota(files.begin(), files.end(), 1);
  }
  const int k = config.caches;
  const std::size_t num_masks = std::size_t{1} << k;
  const std::size_t f = config.file_length;
  PartitionMap map(k, f, files);

  if (p.scheme == PlacementScheme::decentralized) {
    const double q = p.m_ratio;
    for (int file : files) {
      Rng rng(seed, static_cast<std::uint64_t>(file));
      for (std::size_t sym = 0; sym < f; ++sym) {
        std::uint32_t mask = 0;
        for (int c = 0; c < k; ++c) {
          if (rng.uniform() < q) mask |= std::uint32_t{1} << c;
        }
        map.part(file, CacheSubset(mask)).push_back(static_cast<std::uint32_t>(sym));
      }
    }
    return map;
  }

  std::vector<double> quotas(num_masks);
  for (std::size_t mask = 0; mask < num_masks; ++mask) {
    quotas[mask] = p.at(std::popcount(static_cast<std::uint32_t>(mask))) * static_cast<double>(f);
  }
  const auto lengths = apportion(quotas, f);
  for (int file : files) {
    std::uint32_t next = 0;
    for (std::size_t mask = 0; mask < num_masks; ++mask) {
      auto& part = map.part(file, CacheSubset(static_cast<std::uint32_t>(mask)));
      part.resize(lengths[mask]);
      std::iota(part.begin(), part.end(), next);
      next += static_cast<std::uint32_t>(lengths[mask]);
    }
  }
  return map;
}

}  // namespace cachenet
