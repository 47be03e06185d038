#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cachenet/errors.hpp"

namespace cachenet::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Term {
  int var;
  double coef;
};

struct Row {
  std::vector<Term> terms;
  double rhs = 0.0;
};

// minimize c.v  s.t.  E v = f,  A v <= b,  lo <= v <= hi.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Row> equalities;
  std::vector<Row> inequalities;

  int num_vars() const { return static_cast<int>(objective.size()); }

  int add_variable(double cost, double lo = 0.0, double hi = kInf) {
    if (!(lo <= hi)) throw ConfigError("variable bounds must satisfy lo <= hi");
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    return num_vars() - 1;
  }
  void add_equality(std::vector<Term> terms, double rhs) {
    equalities.push_back({std::move(terms), rhs});
  }
  void add_less_equal(std::vector<Term> terms, double rhs) {
    inequalities.push_back({std::move(terms), rhs});
  }
  void add_greater_equal(std::vector<Term> terms, double rhs) {
    for (auto& t : terms) t.coef = -t.coef;
    inequalities.push_back({std::move(terms), -rhs});
  }

  void validate() const {
    const auto n = objective.size();
    if (lower.size() != n || upper.size() != n) throw ConfigError("bound vectors mismatch");
    for (std::size_t j = 0; j < n; ++j) {
      if (!(lower[j] <= upper[j])) throw ConfigError("variable " + std::to_string(j) + " has lo > hi");
    }
    auto check = [&](const std::vector<Row>& rows) {
      for (const auto& r : rows) {
        for (const auto& t : r.terms) {
          if (t.var < 0 || static_cast<std::size_t>(t.var) >= n) throw ConfigError("row references unknown variable");
        }
      }
    };
    check(equalities);
    check(inequalities);
  }
};

enum class Status { optimal, infeasible, unbounded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
  }
  return "?";
}

struct Solution {
  Status status = Status::infeasible;
  double value = 0.0;
  std::vector<double> assignment;
  int iterations = 0;
};

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 64;
  double max_condition = 1e13;
  int max_iterations = 0;  // 0: derived from problem size
};

// Largest violation of any row or bound, each row scaled by max(1, |row|_inf).
inline double max_violation(const LinearProgram& lp, const std::vector<double>& v) {
  double worst = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    worst = std::max({worst, lp.lower[j] - v[j], v[j] - lp.upper[j]});
  }
  auto activity = [&](const Row& r, double& scale) {
    double s = 0.0;
    scale = 1.0;
    for (const auto& t : r.terms) {
      s += t.coef * v[static_cast<std::size_t>(t.var)];
      scale = std::max(scale, std::abs(t.coef));
    }
    return s;
  };
  for (const auto& r : lp.equalities) {
    double scale;
    worst = std::max(worst, std::abs(activity(r, scale) - r.rhs) / scale);
  }
  for (const auto& r : lp.inequalities) {
    double scale;
    worst = std::max(worst, (activity(r, scale) - r.rhs) / scale);
  }
  return worst;
}

namespace detail {

// Bounded-variable revised simplex with an explicit dense basis inverse.
// Columns: structural variables, one slack per inequality row, one artificial per row.
class RevisedSimplex {
 public:
  RevisedSimplex(const LinearProgram& lp, const Options& opt) : lp_(lp), opt_(opt) {
    lp.validate();
    n_struct_ = lp.num_vars();
    m_eq_ = static_cast<int>(lp.equalities.size());
    m_ = m_eq_ + static_cast<int>(lp.inequalities.size());
    rhs_.resize(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) rhs_[idx(i)] = row(i).rhs;

    cols_.resize(static_cast<std::size_t>(n_struct_));
    for (int i = 0; i < m_; ++i) {
      for (const auto& t : row(i).terms) {
        if (t.coef != 0.0) cols_[idx(t.var)].push_back({i, t.coef});
      }
    }
    // Merge duplicate entries of the same variable within a row.
    for (auto& c : cols_) {
      std::stable_sort(c.begin(), c.end(), [](const Entry& a, const Entry& b) { return a.row < b.row; });
      std::vector<Entry> merged;
      for (const auto& e : c) {
        if (!merged.empty() && merged.back().row == e.row) merged.back().val += e.val;
        else merged.push_back(e);
      }
      c.swap(merged);
    }
    lo_ = lp.lower;
    hi_ = lp.upper;
    cost_.assign(lp.objective.begin(), lp.objective.end());
    for (int i = m_eq_; i < m_; ++i) add_column({{i, 1.0}}, 0.0, kInf, 0.0);
    first_artificial_ = num_cols();
  }

  Solution run() {
    Solution out;
    initialize();
    const int max_iter = opt_.max_iterations > 0 ? opt_.max_iterations : 200 * (m_ + num_cols()) + 1000;

    // Phase I: drive artificials to zero.
    std::vector<double> phase1(static_cast<std::size_t>(num_cols()), 0.0);
    for (int j = first_artificial_; j < num_cols(); ++j) phase1[idx(j)] = 1.0;
    auto status = iterate(phase1, max_iter);
    if (status == Status::unbounded) throw NumericalError("phase I reported unbounded");
    refactor();
    double infeas = 0.0;
    for (int j = first_artificial_; j < num_cols(); ++j) infeas += x_[idx(j)];
    double rhs_scale = 1.0;
    for (double b : rhs_) rhs_scale = std::max(rhs_scale, std::abs(b));
    if (infeas > 1e-8 * rhs_scale) {
      out.status = Status::infeasible;
      out.iterations = iterations_;
      return out;
    }
    for (int j = first_artificial_; j < num_cols(); ++j) {
      hi_[idx(j)] = 0.0;
      if (pos_[idx(j)] < 0) {
        x_[idx(j)] = 0.0;
        state_[idx(j)] = NonBasic::lower;
      }
    }

    // Phase II.
    std::vector<double> phase2 = cost_;
    phase2.resize(static_cast<std::size_t>(num_cols()), 0.0);
    status = iterate(phase2, max_iter);
    out.iterations = iterations_;
    if (status == Status::unbounded) {
      out.status = Status::unbounded;
      return out;
    }
    refactor();
    out.status = Status::optimal;
    out.assignment.assign(x_.begin(), x_.begin() + n_struct_);
    for (int j = 0; j < n_struct_; ++j) {
      // Basic values may sit a rounding error outside their bounds.
      out.assignment[idx(j)] = std::clamp(out.assignment[idx(j)], lp_.lower[idx(j)], lp_.upper[idx(j)]);
    }
    out.value = 0.0;
    for (int j = 0; j < n_struct_; ++j) out.value += lp_.objective[idx(j)] * out.assignment[idx(j)];
    return out;
  }

 private:
  struct Entry {
    int row;
    double val;
  };
  enum class NonBasic { lower, upper, free_zero, basic };

  static std::size_t idx(int i) { return static_cast<std::size_t>(i); }
  const Row& row(int i) const {
    return i < m_eq_ ? lp_.equalities[idx(i)] : lp_.inequalities[idx(i - m_eq_)];
  }
  int num_cols() const { return static_cast<int>(cols_.size()); }
  double& binv(int r, int c) { return binv_[idx(r) * idx(m_) + idx(c)]; }

  void add_column(std::vector<Entry> col, double lo, double hi, double cost) {
    cols_.push_back(std::move(col));
    lo_.push_back(lo);
    hi_.push_back(hi);
    cost_.push_back(cost);
  }

  void initialize() {
    x_.assign(idx(num_cols()), 0.0);
    state_.assign(idx(num_cols()), NonBasic::lower);
    for (int j = 0; j < num_cols(); ++j) {
      if (std::isfinite(lo_[idx(j)])) {
        x_[idx(j)] = lo_[idx(j)];
        state_[idx(j)] = NonBasic::lower;
      } else if (std::isfinite(hi_[idx(j)])) {
        x_[idx(j)] = hi_[idx(j)];
        state_[idx(j)] = NonBasic::upper;
      } else {
        x_[idx(j)] = 0.0;
        state_[idx(j)] = NonBasic::free_zero;
      }
    }
    std::vector<double> residual = rhs_;
    for (int j = 0; j < num_cols(); ++j) {
      if (x_[idx(j)] == 0.0) continue;
      for (const auto& e : cols_[idx(j)]) residual[idx(e.row)] -= e.val * x_[idx(j)];
    }
    basis_.assign(idx(m_), -1);
    for (int i = m_eq_; i < m_; ++i) {
      const int slack = n_struct_ + (i - m_eq_);
      if (residual[idx(i)] >= 0.0) {
        basis_[idx(i)] = slack;
        x_[idx(slack)] = residual[idx(i)];
      }
    }
    for (int i = 0; i < m_; ++i) {
      if (basis_[idx(i)] >= 0) continue;
      const double sign = residual[idx(i)] >= 0.0 ? 1.0 : -1.0;
      add_column({{i, sign}}, 0.0, kInf, 0.0);
      x_.push_back(std::abs(residual[idx(i)]));
      state_.push_back(NonBasic::basic);
      basis_[idx(i)] = num_cols() - 1;
    }
    pos_.assign(idx(num_cols()), -1);
    for (int i = 0; i < m_; ++i) {
      pos_[idx(basis_[idx(i)])] = i;
      state_[idx(basis_[idx(i)])] = NonBasic::basic;
    }
    binv_.assign(idx(m_) * idx(m_), 0.0);
    for (int i = 0; i < m_; ++i) binv(i, i) = cols_[idx(basis_[idx(i)])].front().val;  // +-1
  }

  // Rebuild B^-1 from the basis columns and recompute basic values.
  void refactor() {
    if (m_ == 0) return;
    const std::size_t m = idx(m_);
    std::vector<double> b(m * m, 0.0);
    double norm_b = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      double col_sum = 0.0;
      for (const auto& e : cols_[idx(basis_[c])]) {
        b[idx(e.row) * m + c] = e.val;
        col_sum += std::abs(e.val);
      }
      norm_b = std::max(norm_b, col_sum);
    }
    std::vector<double> inv(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) inv[i * m + i] = 1.0;
    // Gauss-Jordan with partial pivoting.
    for (std::size_t c = 0; c < m; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < m; ++r) {
        if (std::abs(b[r * m + c]) > std::abs(b[piv * m + c])) piv = r;
      }
      if (std::abs(b[piv * m + c]) < 1e-14) throw NumericalError("singular basis during refactorization");
      if (piv != c) {
        for (std::size_t k = 0; k < m; ++k) {
          std::swap(b[piv * m + k], b[c * m + k]);
          std::swap(inv[piv * m + k], inv[c * m + k]);
        }
      }
      const double p = b[c * m + c];
      for (std::size_t k = 0; k < m; ++k) {
        b[c * m + k] /= p;
        inv[c * m + k] /= p;
      }
      for (std::size_t r = 0; r < m; ++r) {
        if (r == c) continue;
        const double f = b[r * m + c];
        if (f == 0.0) continue;
        for (std::size_t k = 0; k < m; ++k) {
          b[r * m + k] -= f * b[c * m + k];
          inv[r * m + k] -= f * inv[c * m + k];
        }
      }
    }
    double norm_inv = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      double col_sum = 0.0;
      for (std::size_t r = 0; r < m; ++r) col_sum += std::abs(inv[r * m + c]);
      norm_inv = std::max(norm_inv, col_sum);
    }
    if (norm_b * norm_inv > opt_.max_condition) {
      throw NumericalError("basis condition estimate " + std::to_string(norm_b * norm_inv) + " exceeds limit");
    }
    binv_.swap(inv);
    recompute_basics();
    since_refactor_ = 0;
  }

  void recompute_basics() {
    std::vector<double> residual = rhs_;
    for (int j = 0; j < num_cols(); ++j) {
      if (pos_[idx(j)] >= 0 || x_[idx(j)] == 0.0) continue;
      for (const auto& e : cols_[idx(j)]) residual[idx(e.row)] -= e.val * x_[idx(j)];
    }
    for (int r = 0; r < m_; ++r) {
      double s = 0.0;
      for (int c = 0; c < m_; ++c) s += binv(r, c) * residual[idx(c)];
      x_[idx(basis_[idx(r)])] = s;
    }
  }

  Status iterate(const std::vector<double>& cost, int max_iter) {
    std::vector<double> pi(idx(m_));
    std::vector<double> alpha(idx(m_));
    bool bland = false;
    for (;;) {
      if (iterations_ >= max_iter) throw NumericalError("simplex iteration limit reached");
      if (since_refactor_ >= opt_.refactor_interval) refactor();

      // Duals: pi = c_B^T B^-1.
      std::fill(pi.begin(), pi.end(), 0.0);
      for (int r = 0; r < m_; ++r) {
        const double cb = cost[idx(basis_[idx(r)])];
        if (cb == 0.0) continue;
        const double* brow = &binv_[idx(r) * idx(m_)];
        for (int c = 0; c < m_; ++c) pi[idx(c)] += cb * brow[c];
      }

      // Pricing.
      int entering = -1;
      double best = 0.0;
      double entering_d = 0.0;
      for (int j = 0; j < num_cols(); ++j) {
        const auto st = state_[idx(j)];
        if (st == NonBasic::basic || lo_[idx(j)] == hi_[idx(j)]) continue;
        double d = cost[idx(j)];
        for (const auto& e : cols_[idx(j)]) d -= pi[idx(e.row)] * e.val;
        const bool eligible = (st == NonBasic::lower && d < -opt_.optimality_tol) ||
                              (st == NonBasic::upper && d > opt_.optimality_tol) ||
                              (st == NonBasic::free_zero && std::abs(d) > opt_.optimality_tol);
        if (!eligible) continue;
        if (bland) {
          entering = j;
          entering_d = d;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          entering = j;
          entering_d = d;
        }
      }
      if (entering < 0) return Status::optimal;
      const double dir = entering_d < 0.0 ? 1.0 : -1.0;

      // alpha = B^-1 a_q.
      std::fill(alpha.begin(), alpha.end(), 0.0);
      for (const auto& e : cols_[idx(entering)]) {
        for (int r = 0; r < m_; ++r) alpha[idx(r)] += binv(r, e.row) * e.val;
      }

      // Ratio test. Basic r moves by -dir * alpha_r * theta.
      const double flip = hi_[idx(entering)] - lo_[idx(entering)];
      int leave = -1;
      double theta = flip;  // kInf when either bound is infinite
      if (bland) {
        double min_lim = kInf;
        for (int r = 0; r < m_; ++r) min_lim = std::min(min_lim, limit(r, dir * alpha[idx(r)], 0.0));
        if (min_lim < flip) {
          // Smallest column index among the tied leaving candidates.
          for (int r = 0; r < m_; ++r) {
            if (limit(r, dir * alpha[idx(r)], 0.0) <= min_lim + 1e-12 &&
                (leave < 0 || basis_[idx(r)] < basis_[idx(leave)])) {
              leave = r;
            }
          }
          theta = min_lim;
        }
      } else {
        // Harris: relax bounds by the feasibility tolerance, then take the largest pivot
        // among rows whose exact limit fits under the relaxed minimum.
        double relaxed = flip;
        for (int r = 0; r < m_; ++r) {
          relaxed = std::min(relaxed, limit(r, dir * alpha[idx(r)], opt_.feasibility_tol));
        }
        double biggest = 0.0;
        for (int r = 0; r < m_; ++r) {
          const double delta = dir * alpha[idx(r)];
          if (std::abs(delta) <= opt_.pivot_tol) continue;
          const double lim = limit(r, delta, 0.0);
          if (lim <= relaxed && std::abs(alpha[idx(r)]) > biggest) {
            biggest = std::abs(alpha[idx(r)]);
            leave = r;
          }
        }
        if (leave >= 0) theta = std::max(0.0, limit(leave, dir * alpha[idx(leave)], 0.0));
        if (flip <= relaxed && (leave < 0 || flip <= theta)) {
          leave = -1;
          theta = flip;
        }
      }
      if (!std::isfinite(theta)) return Status::unbounded;

      // Step.
      x_[idx(entering)] += dir * theta;
      if (theta != 0.0) {
        for (int r = 0; r < m_; ++r) x_[idx(basis_[idx(r)])] -= dir * theta * alpha[idx(r)];
      }
      ++iterations_;
      bland = theta <= 1e-12;

      if (leave < 0) {
        state_[idx(entering)] = dir > 0 ? NonBasic::upper : NonBasic::lower;
        x_[idx(entering)] = dir > 0 ? hi_[idx(entering)] : lo_[idx(entering)];
        continue;
      }

      const int out_col = basis_[idx(leave)];
      const double delta = dir * alpha[idx(leave)];
      if (delta > 0.0) {
        x_[idx(out_col)] = lo_[idx(out_col)];
        state_[idx(out_col)] = NonBasic::lower;
      } else {
        x_[idx(out_col)] = hi_[idx(out_col)];
        state_[idx(out_col)] = NonBasic::upper;
      }
      pos_[idx(out_col)] = -1;
      basis_[idx(leave)] = entering;
      pos_[idx(entering)] = leave;
      state_[idx(entering)] = NonBasic::basic;

      // Product-form update of B^-1 around pivot alpha_leave.
      const double p = alpha[idx(leave)];
      if (std::abs(p) < 1e-12) throw NumericalError("pivot element below tolerance");
      double* prow = &binv_[idx(leave) * idx(m_)];
      for (int c = 0; c < m_; ++c) prow[c] /= p;
      for (int r = 0; r < m_; ++r) {
        if (r == leave || alpha[idx(r)] == 0.0) continue;
        const double f = alpha[idx(r)];
        double* brow = &binv_[idx(r) * idx(m_)];
        for (int c = 0; c < m_; ++c) brow[c] -= f * prow[c];
      }
      ++since_refactor_;
    }
  }

  // Step length at which basic variable r reaches a bound when it moves by -delta per unit.
  double limit(int r, double delta, double tol) const {
    const int j = basis_[idx(r)];
    if (delta > opt_.pivot_tol) {
      if (!std::isfinite(lo_[idx(j)])) return kInf;
      return std::max(0.0, (x_[idx(j)] - lo_[idx(j)] + tol) / delta);
    }
    if (delta < -opt_.pivot_tol) {
      if (!std::isfinite(hi_[idx(j)])) return kInf;
      return std::max(0.0, (hi_[idx(j)] - x_[idx(j)] + tol) / -delta);
    }
    return kInf;
  }

  const LinearProgram& lp_;
  Options opt_;
  int n_struct_ = 0;
  int m_eq_ = 0;
  int m_ = 0;
  int first_artificial_ = 0;
  std::vector<double> rhs_;
  std::vector<std::vector<Entry>> cols_;
  std::vector<double> lo_, hi_, cost_;
  std::vector<double> x_;
  std::vector<NonBasic> state_;
  std::vector<int> basis_;
  std::vector<int> pos_;
  std::vector<double> binv_;
  int iterations_ = 0;
  int since_refactor_ = 0;
};

}  // namespace detail

// Deterministic: identical input yields identical output.
inline Solution solve(const LinearProgram& lp, const Options& options = {}) {
  detail::RevisedSimplex simplex(lp, options);
  return simplex.run();
}

}  // namespace cachenet::lp
