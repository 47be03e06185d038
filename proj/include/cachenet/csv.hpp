#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>
#include <vector>

namespace cachenet::csv {

// Shortest round-trip decimal form; byte-identical across runs.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += ',';
    out += cells[i];
  }
  return out;
}

}  // namespace cachenet::csv
