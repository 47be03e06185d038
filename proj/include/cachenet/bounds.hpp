#pragma once

#include <algorithm>
#include <span>
#include <string>

#include "cachenet/core.hpp"

namespace cachenet {

struct BoundReport {
  double value = 0.0;
  int argmax = 1;  // maximizing cut size s
  int caches = 0;
  int distinct = 0;
  int files = 0;
  double cache_size = 0.0;  // M, in files
};

// Cutset lower bound for demands with L distinct requests:
//   max_{s=1..L} (s - s*M / floor(N/s)), clamped at 0.
inline BoundReport cutset_bound(int caches, int distinct, int files, double cache_size) {
  if (distinct < 1 || distinct > caches || caches > files) throw ConfigError("cutset bound needs 1 <= L <= K <= N");
  if (!(cache_size >= 0.0 && cache_size <= files)) throw ConfigError("cutset bound needs 0 <= M <= N");
  BoundReport r{0.0, 1, caches, distinct, files, cache_size};
  double best = -1e300;
  for (int s = 1; s <= distinct; ++s) {
    const double v = s - s * cache_size / static_cast<double>(files / s);
    if (v > best) {
      best = v;
      r.argmax = s;
    }
  }
  r.value = std::max(0.0, best);
  return r;
}

// Mean of the per-demand cutset bounds.
inline double average_bound(std::span<const DemandVector> samples, int files, double cache_size, int caches) {
  if (samples.empty()) throw ConfigError("average_bound needs at least one sample");
  double total = 0.0;
  for (const auto& d : samples) {
    total += cutset_bound(caches, redundancy_pattern(d).distinct, files, cache_size).value;
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace cachenet
