#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cachenet/errors.hpp"

namespace cachenet {

// Subset enumeration, transfer plans and message schedules are indexed by K-bit masks.
inline constexpr int kMaxCaches = 12;

// Exact C(n, k). Throws std::overflow_error when the result does not fit in 64 bits.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  __extension__ unsigned __int128 result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // result * (n - k + i) / i is C(n - k + i, i), always an integer.
    result = result * (n - k + i) / i;
    if (result > std::numeric_limits<std::uint64_t>::max()) {
      throw std::overflow_error("binomial(" + std::to_string(n) + ", " + std::to_string(k) +
                                ") exceeds 64 bits");
    }
  }
  return static_cast<std::uint64_t>(result);
}

inline double binomial_real(int n, int k) {
  if (n < 0 || k < 0) return 0.0;
  return static_cast<double>(binomial(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k)));
}

struct SystemConfig {
  int caches = 1;            // K
  int files = 1;             // N
  double m_ratio = 0.0;      // M / N
  std::size_t file_length = 0;  // F, symbols per file (bit-level mode only)

  double cache_size() const { return m_ratio * files; }  // M in file units

  void validate(bool bit_level = false) const {
    if (caches < 1) throw ConfigError("K must be positive");
    if (files < caches) throw ConfigError("N must be at least K");
    if (!(m_ratio >= 0.0 && m_ratio <= 1.0)) throw ConfigError("m_ratio must lie in [0, 1]");
    if (bit_level && file_length == 0) throw ConfigError("F must be positive in bit-level mode");
  }
};

// The K simultaneous requests, 1-based file indices.
class DemandVector {
 public:
  DemandVector() = default;
  explicit DemandVector(std::vector<int> requests) : requests_(std::move(requests)) {
    if (requests_.empty()) throw ConfigError("demand vector must not be empty");
    for (int d : requests_) {
      if (d < 1) throw ConfigError("file indices are 1-based, got " + std::to_string(d));
    }
  }
  DemandVector(std::vector<int> requests, int num_files) : DemandVector(std::move(requests)) {
    for (int d : requests_) {
      if (d > num_files) {
        throw ConfigError("requested file " + std::to_string(d) + " outside library of " +
                          std::to_string(num_files));
      }
    }
  }

  int caches() const { return static_cast<int>(requests_.size()); }
  // Request of cache k, 1-based.
  int request(int cache) const { return requests_.at(static_cast<std::size_t>(cache - 1)); }
  const std::vector<int>& requests() const { return requests_; }
  void set_request(int cache, int file) { requests_.at(static_cast<std::size_t>(cache - 1)) = file; }

  friend bool operator==(const DemandVector&, const DemandVector&) = default;

 private:
  std::vector<int> requests_;
};

// Non-increasing multiplicities (k_1, ..., k_L) of the distinct files in a demand.
class RedundancyPattern {
 public:
  RedundancyPattern() = default;
  explicit RedundancyPattern(std::vector<int> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw ConfigError("redundancy pattern must have at least one part");
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (counts_[i] < 1) throw ConfigError("redundancy pattern parts must be positive");
      if (i > 0 && counts_[i] > counts_[i - 1]) {
        throw ConfigError("redundancy pattern must be non-increasing");
      }
    }
  }

  int distinct() const { return static_cast<int>(counts_.size()); }  // L
  int caches() const { return std::accumulate(counts_.begin(), counts_.end(), 0); }  // K
  const std::vector<int>& counts() const { return counts_; }
  bool symmetric() const { return counts_.front() == counts_.back(); }

  std::string label() const {
    std::string out;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (i > 0) out += '-';
      out += std::to_string(counts_[i]);
    }
    return out;
  }

  friend auto operator<=>(const RedundancyPattern&, const RedundancyPattern&) = default;

 private:
  std::vector<int> counts_;
};

struct DemandSummary {
  RedundancyPattern pattern;
  int distinct = 0;         // L
  std::vector<int> files;   // D, ascending
};

inline DemandSummary redundancy_pattern(const DemandVector& demand) {
  std::vector<int> sorted = demand.requests();
  std::sort(sorted.begin(), sorted.end());
  DemandSummary out;
  std::vector<int> counts;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    out.files.push_back(sorted[i]);
    counts.push_back(static_cast<int>(j - i));
    i = j;
  }
  std::sort(counts.begin(), counts.end(), std::greater<>());
  out.distinct = static_cast<int>(counts.size());
  out.pattern = RedundancyPattern(std::move(counts));
  return out;
}

// A subset of caches; bit (k - 1) set means cache k is a member.
class CacheSubset {
 public:
  constexpr CacheSubset() = default;
  constexpr explicit CacheSubset(std::uint32_t mask) : mask_(mask) {}

  static CacheSubset of(std::initializer_list<int> caches) {
    std::uint32_t mask = 0;
    for (int k : caches) mask |= bit(k);
    return CacheSubset(mask);
  }

  constexpr std::uint32_t mask() const { return mask_; }
  constexpr int size() const { return std::popcount(mask_); }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr bool contains(int cache) const { return (mask_ & bit(cache)) != 0; }
  constexpr CacheSubset without(int cache) const { return CacheSubset(mask_ & ~bit(cache)); }
  constexpr CacheSubset with(int cache) const { return CacheSubset(mask_ | bit(cache)); }

  std::vector<int> members() const {
    std::vector<int> out;
    for (std::uint32_t m = mask_; m != 0; m &= m - 1) out.push_back(std::countr_zero(m) + 1);
    return out;
  }

  friend constexpr auto operator<=>(CacheSubset, CacheSubset) = default;

 private:
  static constexpr std::uint32_t bit(int cache) { return std::uint32_t{1} << (cache - 1); }
  std::uint32_t mask_ = 0;
};

inline void check_cache_count(int caches) {
  if (caches < 1 || caches > kMaxCaches) {
    throw ConfigError("K = " + std::to_string(caches) + " outside supported range [1, " +
                      std::to_string(kMaxCaches) + "]");
  }
}

// All size-s subsets of {1..K} in ascending mask order.
inline std::vector<CacheSubset> subsets_of_size(int caches, int size) {
  check_cache_count(caches);
  if (size < 0 || size > caches) throw ConfigError("subset size outside [0, K]");
  std::vector<CacheSubset> out;
  out.reserve(binomial(static_cast<std::uint64_t>(caches), static_cast<std::uint64_t>(size)));
  if (size == 0) {
    out.emplace_back(0u);
    return out;
  }
  const std::uint32_t limit = std::uint32_t{1} << caches;
  // Gosper's hack: next larger integer with the same popcount.
  for (std::uint32_t m = (std::uint32_t{1} << size) - 1; m < limit;) {
    out.emplace_back(m);
    const std::uint32_t low = m & (~m + 1);
    const std::uint32_t ripple = m + low;
    m = (((ripple ^ m) >> 2) / low) | ripple;
  }
  return out;
}

namespace detail {
inline void partitions_rec(int remaining, int parts, int max_part, std::vector<int>& prefix,
                           std::vector<RedundancyPattern>& out) {
  if (parts == 0) {
    if (remaining == 0) out.emplace_back(prefix);
    return;
  }
  // Each of the remaining parts needs at least 1.
  for (int p = std::min(max_part, remaining - (parts - 1)); p >= 1; --p) {
    if (p * parts < remaining) break;
    prefix.push_back(p);
    partitions_rec(remaining - p, parts - 1, p, prefix, out);
    prefix.pop_back();
  }
}
}  // namespace detail

// Partitions of K into exactly L parts, reverse lexicographic: (7,1,1), (6,2,1), ... (3,3,3).
inline std::vector<RedundancyPattern> partitions_into_parts(int caches, int parts) {
  std::vector<RedundancyPattern> out;
  if (caches < 1 || parts < 1 || parts > caches) return out;
  std::vector<int> prefix;
  detail::partitions_rec(caches, parts, caches, prefix, out);
  return out;
}

// Demand realizing a pattern: file i goes to the next k_i caches in index order.
inline DemandVector canonical_demand(const RedundancyPattern& pattern) {
  std::vector<int> requests;
  for (int i = 0; i < pattern.distinct(); ++i) {
    requests.insert(requests.end(), static_cast<std::size_t>(pattern.counts()[i]), i + 1);
  }
  return DemandVector(std::move(requests));
}

// Largest-remainder apportionment of real quotas to integers summing to `total`.
// Ties in the fractional part go to the lower index.
inline std::vector<std::size_t> apportion(std::span<const double> quotas, std::size_t total) {
  std::vector<std::size_t> out(quotas.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  remainders.reserve(quotas.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < quotas.size(); ++i) {
    const double q = std::max(0.0, quotas[i]);
    // Snap values within rounding noise of an integer.
    const double nearest = std::round(q);
    const double base = std::abs(q - nearest) < 1e-9 ? nearest : std::floor(q);
    out[i] = static_cast<std::size_t>(base);
    assigned += out[i];
    remainders.emplace_back(q - base, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; assigned < total && j < remainders.size(); ++j) {
    ++out[remainders[j].second];
    ++assigned;
  }
  if (assigned != total) {
    throw NumericalError("apportionment quotas do not sum to " + std::to_string(total));
  }
  return out;
}

}  // namespace cachenet
