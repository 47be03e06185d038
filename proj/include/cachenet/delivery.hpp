#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cachenet/core.hpp"
#include "cachenet/csv.hpp"
#include "cachenet/lp.hpp"
#include "cachenet/placement.hpp"

namespace cachenet {

enum class DeliveryScheme { nonadaptive, simplified, adaptive };

inline std::string_view to_string(DeliveryScheme s) {
  switch (s) {
    case DeliveryScheme::nonadaptive: return "nonadaptive";
    case DeliveryScheme::simplified: return "simplified";
    case DeliveryScheme::adaptive: return "adaptive";
  }
  return "?";
}

inline DeliveryScheme parse_delivery(std::string_view name) {
  if (name == "nonadaptive") return DeliveryScheme::nonadaptive;
  if (name == "simplified") return DeliveryScheme::simplified;
  if (name == "adaptive") return DeliveryScheme::adaptive;
  throw ConfigError("unknown delivery scheme '" + std::string(name) + "'");
}

struct RateReport {
  DeliveryScheme scheme = DeliveryScheme::nonadaptive;
  int caches = 0;
  int files = 0;
  double m_ratio = 0.0;
  std::string pattern;  // dash-joined
  double rate = 0.0;

  // scheme,K,N,m_ratio,pattern,rate
  std::string csv_row() const {
    return csv::join({std::string(to_string(scheme)), std::to_string(caches), std::to_string(files),
                      csv::num(m_ratio), pattern, csv::num(rate)});
  }
};

inline void check_distinct(int distinct, int caches) {
  if (distinct < 1 || distinct > caches) throw ConfigError("L must lie in [1, K]");
}

// Coded delivery without message selection: uncoded parts once per distinct file (L x_0)
// plus one coded message per subset of size >= 2.
inline double rate_nonadaptive(const PlacementProfile& p, int distinct) {
  const int k = p.caches();
  check_distinct(distinct, k);
  double r = distinct * p.at(0);
  for (int s = 1; s < k; ++s) r += binomial_real(k, s + 1) * p.at(s);
  return r;
}

inline double peak_rate_centralized(int caches, double m_ratio) {
  check_m_ratio(m_ratio);
  if (!is_integral(caches * m_ratio)) throw ConfigError("peak_rate_centralized needs integer t = K*m_ratio");
  return caches * (1.0 - m_ratio) / (1.0 + caches * m_ratio);
}

inline double peak_rate_decentralized(int caches, double m_ratio) {
  check_m_ratio(m_ratio);
  if (m_ratio == 0.0) return caches;
  const double q = m_ratio;
  return caches * (1.0 - q) * (1.0 - std::pow(1.0 - q, caches)) / (caches * q);
}

// Largest subset size whose coded messages are replaced by uncoded ones in the simplified rule.
inline int shat(int caches, int distinct) {
  check_distinct(distinct, caches);
  return (caches - distinct) / (distinct + 1);
}

struct SimplifiedPlan {
  std::vector<double> y;  // y_0..y_K
  double rate = 0.0;
  int shat = 0;
};

inline double symmetric_rate(const std::vector<double>& y, int distinct) {
  const int k = static_cast<int>(y.size()) - 1;
  double r = distinct * y[0];
  for (int s = 1; s < k; ++s) r += binomial_real(k, s + 1) * y[static_cast<std::size_t>(s)];
  return r;
}

// Subsets of size 1..shat go uncoded; the uncoded share keeps the original x_0 as well so the
// partition still sums to one.
inline SimplifiedPlan simplified_plan(const PlacementProfile& p, int distinct) {
  const int k = p.caches();
  SimplifiedPlan out;
  out.shat = shat(k, distinct);
  out.y = p.x;
  for (int s = 1; s <= out.shat; ++s) {
    out.y[0] += binomial_real(k, s) * p.at(s);
    out.y[static_cast<std::size_t>(s)] = 0.0;
  }
  out.rate = symmetric_rate(out.y, distinct);
  return out;
}

// y^n_S for every distinct requested file n and every subset S.
class TransferPlan {
 public:
  TransferPlan(DemandVector demand, std::vector<double> profile_x)
      : demand_(std::move(demand)), x_(std::move(profile_x)) {
    check_cache_count(demand_.caches());
    if (static_cast<int>(x_.size()) != demand_.caches() + 1) throw ConfigError("profile K does not match demand");
    files_ = redundancy_pattern(demand_).files;
    y_.assign(files_.size(), std::vector<double>(std::size_t{1} << demand_.caches(), 0.0));
  }

  // Every file keeps y^n_S = y_|S|.
  static TransferPlan from_symmetric(const DemandVector& demand, const std::vector<double>& profile_x,
                                     const std::vector<double>& y) {
    TransferPlan plan(demand, profile_x);
    for (auto& row : plan.y_) {
      for (std::size_t mask = 0; mask < row.size(); ++mask) {
        row[mask] = y.at(static_cast<std::size_t>(std::popcount(static_cast<std::uint32_t>(mask))));
      }
    }
    return plan;
  }

  static TransferPlan identity(const DemandVector& demand, const PlacementProfile& p) {
    return from_symmetric(demand, p.x, p.x);
  }

  int caches() const { return demand_.caches(); }
  const DemandVector& demand() const { return demand_; }
  const std::vector<int>& files() const { return files_; }
  const std::vector<double>& profile_x() const { return x_; }

  double fraction(int file, CacheSubset s) const { return y_[slot(file)][s.mask()]; }
  void set_fraction(int file, CacheSubset s, double v) { y_[slot(file)][s.mask()] = v; }

  // Broadcast load of the plan: sum_n y^n_0 + sum_{|S|>=2} max_{k in S} y^{d_k}_{S\{k}}.
  double rate() const {
    double r = 0.0;
    for (const auto& row : y_) r += row[0];
    const std::uint32_t limit = std::uint32_t{1} << caches();
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
      const CacheSubset s(mask);
      if (s.size() < 2) continue;
      double longest = 0.0;
      for (int k : s.members()) longest = std::max(longest, fraction(demand_.request(k), s.without(k)));
      r += longest;
    }
    return r;
  }

  // Largest violation of the partition equalities and the range constraints.
  double max_violation() const {
    double worst = 0.0;
    for (const auto& row : y_) {
      double total = 0.0;
      for (std::size_t mask = 0; mask < row.size(); ++mask) {
        total += row[mask];
        const double hi = mask == 0 ? 1.0 : x_[static_cast<std::size_t>(std::popcount(static_cast<std::uint32_t>(mask)))];
        worst = std::max({worst, -row[mask], row[mask] - hi});
      }
      worst = std::max(worst, std::abs(total - 1.0));
    }
    return worst;
  }

 private:
  std::size_t slot(int file) const {
    const auto it = std::lower_bound(files_.begin(), files_.end(), file);
    if (it == files_.end() || *it != file) throw ConfigError("file " + std::to_string(file) + " not in demand");
    return static_cast<std::size_t>(it - files_.begin());
  }

  DemandVector demand_;
  std::vector<double> x_;
  std::vector<int> files_;
  std::vector<std::vector<double>> y_;
};

struct AdaptivePlan {
  TransferPlan plan;
  double rate = 0.0;
  int lp_variables = 0;
  int lp_rows = 0;
};

namespace detail {

// Users grouped by requested file; groups ordered by count (desc) then file index.
struct DemandGroups {
  std::vector<int> files;                 // file of group g
  std::vector<int> counts;                // k_g
  std::vector<std::uint32_t> masks;       // users of group g
  std::vector<int> class_of;              // groups with equal counts share a class
  std::vector<std::pair<int, int>> classes;  // [begin, end) group ranges

  int size() const { return static_cast<int>(files.size()); }
};

inline DemandGroups group_demand(const DemandVector& d) {
  std::map<int, std::uint32_t> users;
  for (int k = 1; k <= d.caches(); ++k) users[d.request(k)] |= std::uint32_t{1} << (k - 1);
  std::vector<std::pair<int, std::uint32_t>> order(users.begin(), users.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return std::popcount(a.second) > std::popcount(b.second);
  });
  DemandGroups g;
  for (const auto& [file, mask] : order) {
    g.files.push_back(file);
    g.counts.push_back(std::popcount(mask));
    g.masks.push_back(mask);
  }
  for (int i = 0; i < g.size();) {
    int j = i;
    while (j < g.size() && g.counts[static_cast<std::size_t>(j)] == g.counts[static_cast<std::size_t>(i)]) ++j;
    for (int t = i; t < j; ++t) g.class_of.push_back(static_cast<int>(g.classes.size()));
    g.classes.emplace_back(i, j);
    i = j;
  }
  return g;
}

// Type of a subset: how many members of each group it contains, in mixed radix (k_g + 1).
class TypeSpace {
 public:
  explicit TypeSpace(const DemandGroups& g) : groups_(g) {
    stride_.resize(static_cast<std::size_t>(g.size()));
    int total = 1;
    for (int i = 0; i < g.size(); ++i) {
      stride_[static_cast<std::size_t>(i)] = total;
      total *= g.counts[static_cast<std::size_t>(i)] + 1;
    }
    size_ = total;
  }
  int size() const { return size_; }
  int component(int type, int g) const {
    return (type / stride_[static_cast<std::size_t>(g)]) % (groups_.counts[static_cast<std::size_t>(g)] + 1);
  }
  int minus(int type, int g) const { return type - stride_[static_cast<std::size_t>(g)]; }
  int weight_size(int type) const {
    int s = 0;
    for (int g = 0; g < groups_.size(); ++g) s += component(type, g);
    return s;
  }
  // Number of subsets S having this type.
  double multiplicity(int type) const {
    double w = 1.0;
    for (int g = 0; g < groups_.size(); ++g) w *= binomial_real(groups_.counts[static_cast<std::size_t>(g)], component(type, g));
    return w;
  }
  int type_of(CacheSubset s) const {
    int t = 0;
    for (int g = 0; g < groups_.size(); ++g) {
      t += std::popcount(s.mask() & groups_.masks[static_cast<std::size_t>(g)]) * stride_[static_cast<std::size_t>(g)];
    }
    return t;
  }
  // Orbit key under permutations of equal-count groups; `marked` tags one group (or -1).
  std::vector<int> orbit_key(int type, int marked) const {
    std::vector<int> key;
    for (const auto& [b, e] : groups_.classes) {
      std::vector<int> cls;
      for (int g = b; g < e; ++g) cls.push_back(2 * component(type, g) + (g == marked ? 1 : 0));
      std::sort(cls.begin(), cls.end(), std::greater<>());
      key.insert(key.end(), cls.begin(), cls.end());
      key.push_back(-1);
    }
    return key;
  }

 private:
  const DemandGroups& groups_;
  std::vector<int> stride_;
  int size_ = 1;
};

}  // namespace detail

// Optimal message selection for one demand vector. The LP is posed over variables that are
// constant on orbits of the demand's symmetry group (users requesting the same file, and
// files with equal request counts, are interchangeable); averaging any optimum over the group
// keeps it optimal, so the restriction is exact. The orbit solution is expanded to y^n_S.
inline AdaptivePlan adaptive_plan(const PlacementProfile& p, const DemandVector& d) {
  const int k = d.caches();
  check_cache_count(k);
  if (p.caches() != k) throw ConfigError("profile K does not match demand length");
  const auto groups = detail::group_demand(d);
  const detail::TypeSpace types(groups);
  const int num_groups = groups.size();

  lp::LinearProgram prog;
  std::map<std::vector<int>, int> y_var;
  std::vector<int> y_index(static_cast<std::size_t>(num_groups * types.size()));
  for (int g = 0; g < num_groups; ++g) {
    for (int t = 0; t < types.size(); ++t) {
      auto key = types.orbit_key(t, g);
      auto [it, inserted] = y_var.try_emplace(std::move(key), prog.num_vars());
      if (inserted) {
        const int s = types.weight_size(t);
        prog.add_variable(0.0, 0.0, s == 0 ? 1.0 : p.at(s));
      }
      y_index[static_cast<std::size_t>(g * types.size() + t)] = it->second;
    }
  }
  auto yv = [&](int g, int t) { return y_index[static_cast<std::size_t>(g * types.size() + t)]; };

  // Uncoded content once per distinct file.
  for (int g = 0; g < num_groups; ++g) prog.objective[static_cast<std::size_t>(yv(g, 0))] += 1.0;

  std::map<std::vector<int>, int> z_var;
  std::vector<int> z_rep;  // one representative type per z orbit
  for (int t = 0; t < types.size(); ++t) {
    if (types.weight_size(t) < 2) continue;
    auto [it, inserted] = z_var.try_emplace(types.orbit_key(t, -1), prog.num_vars());
    if (inserted) {
      prog.add_variable(0.0, 0.0, lp::kInf);
      z_rep.push_back(t);
    }
    prog.objective[static_cast<std::size_t>(it->second)] += types.multiplicity(t);
  }

  // Partition equality, one per class (files in a class share their equations).
  for (const auto& [b, e] : groups.classes) {
    std::map<int, double> coef;
    for (int t = 0; t < types.size(); ++t) coef[yv(b, t)] += types.multiplicity(t);
    std::vector<lp::Term> terms;
    for (const auto& [v, c] : coef) terms.push_back({v, c});
    prog.add_equality(std::move(terms), 1.0);
  }

  // z_S >= y^{d_k}_{S\{k}} for every member k of a representative S.
  std::set<std::pair<int, int>> seen;
  for (int t : z_rep) {
    const int z = z_var.at(types.orbit_key(t, -1));
    for (int g = 0; g < num_groups; ++g) {
      if (types.component(t, g) == 0) continue;
      const int y = yv(g, types.minus(t, g));
      if (seen.emplace(y, z).second) prog.add_less_equal({{y, 1.0}, {z, -1.0}}, 0.0);
    }
  }

  const auto sol = lp::solve(prog);
  if (sol.status != lp::Status::optimal) {
    throw NumericalError(std::string("adaptive message-selection LP ") + lp::to_string(sol.status));
  }

  TransferPlan plan(d, p.x);
  const std::uint32_t limit = std::uint32_t{1} << k;
  for (int g = 0; g < num_groups; ++g) {
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
      const CacheSubset s(mask);
      plan.set_fraction(groups.files[static_cast<std::size_t>(g)], s,
                        sol.assignment[static_cast<std::size_t>(yv(g, types.type_of(s)))]);
    }
  }
  return AdaptivePlan{std::move(plan), sol.value, prog.num_vars(),
                      static_cast<int>(prog.equalities.size() + prog.inequalities.size())};
}

// The same message-selection LP written out over every (file, subset) pair. Exponential in K;
// intended for small instances and as a cross-check of adaptive_plan.
inline AdaptivePlan adaptive_plan_full(const PlacementProfile& p, const DemandVector& d) {
  const int k = d.caches();
  check_cache_count(k);
  if (p.caches() != k) throw ConfigError("profile K does not match demand length");
  const auto files = redundancy_pattern(d).files;
  const int num_masks = 1 << k;
  auto slot = [&](int file) {
    return static_cast<int>(std::lower_bound(files.begin(), files.end(), file) - files.begin());
  };

  lp::LinearProgram prog;
  for (std::size_t f = 0; f < files.size(); ++f) {
    for (int mask = 0; mask < num_masks; ++mask) {
      const int s = std::popcount(static_cast<std::uint32_t>(mask));
      prog.add_variable(mask == 0 ? 1.0 : 0.0, 0.0, mask == 0 ? 1.0 : p.at(s));
    }
  }
  auto yv = [&](int file, int mask) { return slot(file) * num_masks + mask; };
  for (int mask = 0; mask < num_masks; ++mask) {
    const CacheSubset s(static_cast<std::uint32_t>(mask));
    if (s.size() < 2) continue;
    const int z = prog.add_variable(1.0, 0.0, lp::kInf);
    for (int member : s.members()) {
      prog.add_less_equal({{yv(d.request(member), static_cast<int>(s.without(member).mask())), 1.0}, {z, -1.0}}, 0.0);
    }
  }
  for (int file : files) {
    std::vector<lp::Term> terms;
    for (int mask = 0; mask < num_masks; ++mask) terms.push_back({yv(file, mask), 1.0});
    prog.add_equality(std::move(terms), 1.0);
  }
  const auto sol = lp::solve(prog);
  if (sol.status != lp::Status::optimal) {
    throw NumericalError(std::string("adaptive message-selection LP ") + lp::to_string(sol.status));
  }
  TransferPlan plan(d, p.x);
  for (int file : files) {
    for (int mask = 0; mask < num_masks; ++mask) {
      plan.set_fraction(file, CacheSubset(static_cast<std::uint32_t>(mask)),
                        sol.assignment[static_cast<std::size_t>(yv(file, mask))]);
    }
  }
  return AdaptivePlan{std::move(plan), sol.value, prog.num_vars(),
                      static_cast<int>(prog.equalities.size() + prog.inequalities.size())};
}

// Adaptive rate of a pattern through its canonical demand realization.
inline double adaptive_rate(const PlacementProfile& p, const RedundancyPattern& pattern) {
  return adaptive_plan(p, canonical_demand(pattern)).rate;
}

}  // namespace cachenet
