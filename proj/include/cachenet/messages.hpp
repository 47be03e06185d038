#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cachenet/core.hpp"
#include "cachenet/delivery.hpp"
#include "cachenet/placement.hpp"
#include "cachenet/rng.hpp"

namespace cachenet {

using Symbol = std::uint8_t;

// Deterministic pseudo-random file contents.
class FileLibrary {
 public:
  FileLibrary(std::size_t file_length, std::uint64_t seed) : file_length_(file_length), seed_(seed) {}

  std::size_t file_length() const { return file_length_; }

  const std::vector<Symbol>& content(int file) const {
    auto it = cache_.find(file);
    if (it != cache_.end()) return it->second;
    Rng rng(seed_ ^ 0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(file));
    std::vector<Symbol> data(file_length_);
    for (auto& s : data) s = static_cast<Symbol>(rng.engine()() >> 56);
    return cache_.emplace(file, std::move(data)).first->second;
  }

 private:
  std::size_t file_length_;
  std::uint64_t seed_;
  mutable std::map<int, std::vector<Symbol>> cache_;
};

// V-hat^n_S: the symbol indices each requested file keeps at subset S after message selection.
// Displaced symbols join V-hat^n_0 and go uncoded. Shared knowledge of server and caches.
class SelectedPartition {
 public:
  SelectedPartition() = default;
  SelectedPartition(int caches, std::vector<int> files)
      : caches_(caches), files_(std::move(files)),
        parts_(files_.size(), std::vector<std::vector<std::uint32_t>>(std::size_t{1} << caches)),
        quotas_(files_.size(), std::vector<double>(std::size_t{1} << caches, 0.0)) {}

  int caches() const { return caches_; }
  const std::vector<int>& files() const { return files_; }
  const std::vector<std::uint32_t>& part(int file, CacheSubset s) const { return parts_[slot(file)][s.mask()]; }
  std::vector<std::uint32_t>& part(int file, CacheSubset s) { return parts_[slot(file)][s.mask()]; }
  // Real-valued symbol count before rounding.
  double quota(int file, CacheSubset s) const { return quotas_[slot(file)][s.mask()]; }
  double& quota(int file, CacheSubset s) { return quotas_[slot(file)][s.mask()]; }

 private:
  std::size_t slot(int file) const {
    const auto it = std::find(files_.begin(), files_.end(), file);
    if (it == files_.end()) throw ConfigError("file " + std::to_string(file) + " not selected");
    return static_cast<std::size_t>(it - files_.begin());
  }
  int caches_ = 0;
  std::vector<int> files_;
  std::vector<std::vector<std::vector<std::uint32_t>>> parts_;
  std::vector<std::vector<double>> quotas_;
};

// Keeps round((y^n_S / x_|S|) * |V^n_S|) leading symbols of each V^n_S, apportioned by largest
// remainder so every file still totals F symbols; the rest is appended to V-hat^n_0.
inline SelectedPartition select_symbols(const PartitionMap& pm, const TransferPlan& plan) {
  const int k = plan.caches();
  if (pm.caches() != k) throw ConfigError("partition and plan disagree on K");
  const std::size_t num_masks = std::size_t{1} << k;
  const std::size_t f = pm.file_length();
  SelectedPartition sel(k, plan.files());
  for (int file : plan.files()) {
    std::vector<double> quotas(num_masks, 0.0);
    double kept = 0.0;
    for (std::size_t mask = 1; mask < num_masks; ++mask) {
      const CacheSubset s(static_cast<std::uint32_t>(mask));
      const double x = plan.profile_x()[static_cast<std::size_t>(s.size())];
      const double y = plan.fraction(file, s);
      const double keep = x > 0.0 ? std::clamp(y / x, 0.0, 1.0) : 1.0;
      quotas[mask] = keep * static_cast<double>(pm.part(file, s).size());
      kept += quotas[mask];
    }
    quotas[0] = static_cast<double>(f) - kept;
    const auto counts = apportion(quotas, f);
    auto& uncoded = sel.part(file, CacheSubset(0));
    const auto& base = pm.part(file, CacheSubset(0));
    uncoded.assign(base.begin(), base.end());
    sel.quota(file, CacheSubset(0)) = quotas[0];
    for (std::size_t mask = 1; mask < num_masks; ++mask) {
      const CacheSubset s(static_cast<std::uint32_t>(mask));
      const auto& src = pm.part(file, s);
      const auto n_keep = std::min(counts[mask], src.size());
      sel.part(file, s).assign(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(n_keep));
      sel.quota(file, s) = quotas[mask];
      uncoded.insert(uncoded.end(), src.begin() + static_cast<std::ptrdiff_t>(n_keep), src.end());
    }
  }
  return sel;
}

// Plan objective on the realized subset sizes (before symbol rounding), in files.
inline double realized_plan_rate(const SelectedPartition& sel, const DemandVector& d, std::size_t file_length) {
  double symbols = 0.0;
  for (int file : sel.files()) symbols += sel.quota(file, CacheSubset(0));
  const std::uint32_t limit = std::uint32_t{1} << d.caches();
  for (std::uint32_t mask = 1; mask < limit; ++mask) {
    const CacheSubset s(mask);
    if (s.size() < 2) continue;
    double longest = 0.0;
    for (int k : s.members()) longest = std::max(longest, sel.quota(d.request(k), s.without(k)));
    symbols += longest;
  }
  return symbols / static_cast<double>(file_length);
}

struct CodedMessage {
  CacheSubset subset;
  std::vector<Symbol> payload;
};

struct UncodedMessage {
  int file = 0;
  std::vector<Symbol> payload;  // V-hat^file_0 in selection order
};

struct MessageSchedule {
  DemandVector demand;
  std::size_t file_length = 0;
  SelectedPartition selection;
  std::vector<CodedMessage> coded;  // subset size K down to 2
  std::vector<UncodedMessage> uncoded;

  std::size_t total_symbols() const {
    std::size_t n = 0;
    for (const auto& m : coded) n += m.payload.size();
    for (const auto& m : uncoded) n += m.payload.size();
    return n;
  }
};

// Sends XOR_{k in S} V-hat^{d_k}_{S\{k}} (zero padded to the longest) for every |S| >= 2 and
// each requested file's uncoded part once.
inline MessageSchedule build_messages(const PartitionMap& pm, const TransferPlan& plan, const FileLibrary& library) {
  const DemandVector& d = plan.demand();
  const int k = d.caches();
  if (pm.caches() != k) throw ConfigError("partition and plan disagree on K");
  if (library.file_length() != pm.file_length()) throw ConfigError("library and partition disagree on F");
  for (int file : plan.files()) {
    if (!pm.has_file(file)) throw ConfigError("requested file " + std::to_string(file) + " not materialized");
  }
  MessageSchedule out{d, pm.file_length(), select_symbols(pm, plan), {}, {}};
  for (int s = k; s >= 2; --s) {
    for (CacheSubset subset : subsets_of_size(k, s)) {
      std::size_t len = 0;
      for (int member : subset.members()) {
        len = std::max(len, out.selection.part(d.request(member), subset.without(member)).size());
      }
      if (len == 0) continue;
      CodedMessage msg{subset, std::vector<Symbol>(len, 0)};
      for (int member : subset.members()) {
        const int file = d.request(member);
        const auto& idx = out.selection.part(file, subset.without(member));
        const auto& data = library.content(file);
        for (std::size_t i = 0; i < idx.size(); ++i) msg.payload[i] ^= data[idx[i]];
      }
      out.coded.push_back(std::move(msg));
    }
  }
  for (int file : plan.files()) {
    const auto& idx = out.selection.part(file, CacheSubset(0));
    const auto& data = library.content(file);
    UncodedMessage msg{file, std::vector<Symbol>(idx.size())};
    for (std::size_t i = 0; i < idx.size(); ++i) msg.payload[i] = data[idx[i]];
    out.uncoded.push_back(std::move(msg));
  }
  return out;
}

inline double rate_of_schedule(const MessageSchedule& schedule, std::size_t file_length) {
  if (file_length == 0) return 0.0;
  return static_cast<double>(schedule.total_symbols()) / static_cast<double>(file_length);
}

// What one cache holds after placement: every symbol of V^n_S with the cache in S.
class CacheContents {
 public:
  CacheContents(int cache, const PartitionMap& pm, const FileLibrary& library) : cache_(cache) {
    const std::uint32_t limit = std::uint32_t{1} << pm.caches();
    for (int file : pm.files()) {
      auto& slots = symbols_[file];
      slots.assign(pm.file_length(), std::nullopt);
      const auto& data = library.content(file);
      for (std::uint32_t mask = 0; mask < limit; ++mask) {
        const CacheSubset s(mask);
        if (!s.contains(cache)) continue;
        for (auto i : pm.part(file, s)) slots[i] = data[i];
      }
    }
  }

  int cache() const { return cache_; }
  std::optional<Symbol> get(int file, std::uint32_t index) const {
    const auto it = symbols_.find(file);
    if (it == symbols_.end()) return std::nullopt;
    return it->second.at(index);
  }

 private:
  int cache_;
  std::map<int, std::vector<std::optional<Symbol>>> symbols_;
};

// Reconstructs the file requested by `cache`. Throws VerificationError when a symbol can be
// neither read from the cache nor recovered from the broadcast.
inline std::vector<Symbol> decode(int cache, const CacheContents& held, const MessageSchedule& schedule) {
  const DemandVector& d = schedule.demand;
  const int wanted = d.request(cache);
  std::vector<std::optional<Symbol>> out(schedule.file_length);

  auto fail = [&](const std::string& why) {
    throw VerificationError("cache " + std::to_string(cache) + ": " + why);
  };
  auto cached = [&](int file, std::uint32_t index) {
    const auto v = held.get(file, index);
    if (!v) fail("side information for file " + std::to_string(file) + " symbol " + std::to_string(index) + " missing");
    return *v;
  };

  for (std::size_t i = 0; i < schedule.file_length; ++i) out[i] = held.get(wanted, static_cast<std::uint32_t>(i));

  for (const auto& msg : schedule.uncoded) {
    if (msg.file != wanted) continue;
    const auto& idx = schedule.selection.part(wanted, CacheSubset(0));
    for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = msg.payload[i];
  }
  for (const auto& msg : schedule.coded) {
    if (!msg.subset.contains(cache)) continue;
    std::vector<Symbol> buf = msg.payload;
    for (int other : msg.subset.members()) {
      if (other == cache) continue;
      const int file = d.request(other);
      const auto& idx = schedule.selection.part(file, msg.subset.without(other));
      for (std::size_t i = 0; i < idx.size(); ++i) buf[i] ^= cached(file, idx[i]);
    }
    const auto& mine = schedule.selection.part(wanted, msg.subset.without(cache));
    for (std::size_t i = 0; i < mine.size(); ++i) out[mine[i]] = buf[i];
  }

  std::vector<Symbol> file(schedule.file_length);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i]) fail("symbol " + std::to_string(i) + " of file " + std::to_string(wanted) + " not delivered");
    file[i] = *out[i];
  }
  return file;
}

// Index of the first differing symbol, if any.
inline std::optional<std::size_t> first_mismatch(const std::vector<Symbol>& got, const std::vector<Symbol>& want) {
  const auto n = std::min(got.size(), want.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (got[i] != want[i]) return i;
  }
  if (got.size() != want.size()) return n;
  return std::nullopt;
}

}  // namespace cachenet
