#pragma once

// Self-contained linear programming: minimize c.x subject to sparse >=/<=
// rows and per-variable bounds (infinities allowed). The solver is a
// bounded-variable primal simplex over the slack-augmented standard form
// with a Phase I artificial-variable start, Dantzig pricing, and a switch to
// Bland's rule after 3*(n_vars + n_rows) degenerate pivots so termination is
// guaranteed. Given identical instance and options the pivot sequence and
// solution are bit-identical.
//
// The instance stores rows sparsely; the solver works on a dense tableau,
// which is comfortable up to a few thousand rows (the training problems this
// library builds).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kbpot/types.hpp"

namespace kbpot::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Structurally invalid instance: NaNs, crossed bounds, bad column indices.
struct MalformedInstance : Error {
  using Error::Error;
};

enum class Relation { Ge, Le };

struct Row {
  std::vector<std::pair<int, double>> coeffs;  // (variable index, coefficient)
  Relation rel = Relation::Ge;
  double rhs = 0.0;
};

struct LpInstance {
  int n_vars = 0;
  std::vector<double> objective;  // size n_vars
  std::vector<double> lower;      // size n_vars, -inf allowed
  std::vector<double> upper;      // size n_vars, +inf allowed
  std::vector<Row> rows;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

struct Solution {
  Status status = Status::IterationLimit;
  std::vector<double> values;  // structural variables only
  double objective_value = 0.0;
  long iterations = 0;
};

struct SolveOptions {
  double feas_tol = 1e-7;
  double opt_tol = 1e-9;
  long max_iters = -1;  // -1 selects 50 * (n_vars + n_rows)
  /// Optional pivot trace: (entering column, leaving column or -1 for a
  /// bound flip), appended per iteration. Used by determinism tests.
  std::vector<std::pair<int, int>>* pivot_log = nullptr;
};

namespace detail {

inline void validate_instance(const LpInstance& inst) {
  if (inst.n_vars < 0) throw MalformedInstance("lp: negative variable count");
  const auto n = static_cast<std::size_t>(inst.n_vars);
  if (inst.objective.size() != n || inst.lower.size() != n || inst.upper.size() != n) {
    throw MalformedInstance("lp: objective/bounds size does not match n_vars");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isnan(inst.objective[j])) throw MalformedInstance("lp: NaN objective coefficient");
    if (std::isinf(inst.objective[j])) throw MalformedInstance("lp: infinite objective coefficient");
    if (std::isnan(inst.lower[j]) || std::isnan(inst.upper[j])) {
      throw MalformedInstance("lp: NaN bound");
    }
    if (inst.lower[j] > inst.upper[j]) {
      throw MalformedInstance("lp: lower bound exceeds upper bound for variable " +
                              std::to_string(j));
    }
  }
  for (std::size_t i = 0; i < inst.rows.size(); ++i) {
    const Row& row = inst.rows[i];
    if (!std::isfinite(row.rhs)) throw MalformedInstance("lp: non-finite rhs in row " + std::to_string(i));
    for (const auto& [j, a] : row.coeffs) {
      if (j < 0 || j >= inst.n_vars) {
        throw MalformedInstance("lp: column index out of range in row " + std::to_string(i));
      }
      if (!std::isfinite(a)) throw MalformedInstance("lp: non-finite coefficient in row " + std::to_string(i));
    }
  }
}

class Simplex {
 public:
  Simplex(const LpInstance& inst, const SolveOptions& opt) : inst_(inst), opt_(opt) {
    n_ = inst.n_vars;
    m_ = static_cast<int>(inst.rows.size());
    max_iters_ = opt.max_iters >= 0 ? opt.max_iters : 50L * (static_cast<long>(n_) + m_);
    bland_threshold_ = 3L * (static_cast<long>(n_) + m_);
  }

  Solution run() {
    setup();
    Status status = Status::Optimal;
    if (n_art_ > 0) {
      set_phase1_costs();
      const Status s1 = iterate();
      if (s1 == Status::IterationLimit) return finish(Status::IterationLimit);
      refresh_basic_values();
      double infeas = 0.0;
      for (int a = art_begin_; a < total_; ++a) infeas += std::abs(xv_[a]);
      if (infeas > opt_.feas_tol * b_scale_) return finish(Status::Infeasible);
      expel_artificials();
    }
    set_phase2_costs();
    status = iterate();
    return finish(status);
  }

 private:
  enum : std::int8_t { kAtLower = 0, kAtUpper = 1, kBasic = 2, kFreeZero = 3 };

  const LpInstance& inst_;
  const SolveOptions& opt_;
  int n_ = 0;       // structural variables
  int m_ = 0;       // rows
  int art_begin_ = 0;
  int n_art_ = 0;
  int total_ = 0;   // structural + slack + artificial columns
  long max_iters_ = 0;
  long bland_threshold_ = 0;
  long iters_ = 0;
  long degenerate_pivots_ = 0;
  bool bland_ = false;
  double b_scale_ = 1.0;

  std::vector<double> tab_;        // m_ x total_, row-major: B^-1 * A
  std::vector<double> d_;          // reduced costs per column
  std::vector<double> cost_;       // active phase costs per column
  std::vector<double> lo_, up_, xv_;
  std::vector<int> basis_;         // row -> basic column
  std::vector<std::int8_t> where_; // column -> kAtLower/kAtUpper/kBasic/kFreeZero
  // Scaled original system, kept sparse for periodic value refreshes.
  std::vector<std::vector<std::pair<int, double>>> arows_;
  std::vector<double> slack_coeff_;  // +1 or -1 per row after scaling
  std::vector<double> b_;

  double& tab(int i, int j) { return tab_[static_cast<std::size_t>(i) * total_ + j]; }
  double tab(int i, int j) const { return tab_[static_cast<std::size_t>(i) * total_ + j]; }

  double nonbasic_value(int j) const {
    switch (where_[static_cast<std::size_t>(j)]) {
      case kAtLower: return lo_[static_cast<std::size_t>(j)];
      case kAtUpper: return up_[static_cast<std::size_t>(j)];
      default: return 0.0;
    }
  }

  void setup() {
    // Column layout: [0, n_) structural, [n_, n_+m_) slacks, artificials after.
    arows_.resize(static_cast<std::size_t>(m_));
    slack_coeff_.assign(static_cast<std::size_t>(m_), 1.0);
    b_.assign(static_cast<std::size_t>(m_), 0.0);

    const int n_slack_end = n_ + m_;
    lo_.assign(static_cast<std::size_t>(n_slack_end), 0.0);
    up_.assign(static_cast<std::size_t>(n_slack_end), 0.0);
    where_.assign(static_cast<std::size_t>(n_slack_end), kAtLower);
    for (int j = 0; j < n_; ++j) {
      lo_[static_cast<std::size_t>(j)] = inst_.lower[static_cast<std::size_t>(j)];
      up_[static_cast<std::size_t>(j)] = inst_.upper[static_cast<std::size_t>(j)];
    }
    for (int i = 0; i < m_; ++i) {
      const int s = n_ + i;
      if (inst_.rows[static_cast<std::size_t>(i)].rel == Relation::Ge) {
        lo_[static_cast<std::size_t>(s)] = -kInf;  // a.x - |t| = rhs  =>  a.x >= rhs
        up_[static_cast<std::size_t>(s)] = 0.0;
      } else {
        lo_[static_cast<std::size_t>(s)] = 0.0;
        up_[static_cast<std::size_t>(s)] = kInf;
      }
    }

    // Nonbasic start: every structural variable at a finite bound (lower
    // preferred), free variables at zero.
    xv_.assign(static_cast<std::size_t>(n_slack_end), 0.0);
    for (int j = 0; j < n_slack_end; ++j) {
      const double lo = lo_[static_cast<std::size_t>(j)];
      const double up = up_[static_cast<std::size_t>(j)];
      if (std::isfinite(lo)) {
        where_[static_cast<std::size_t>(j)] = kAtLower;
        xv_[static_cast<std::size_t>(j)] = lo;
      } else if (std::isfinite(up)) {
        where_[static_cast<std::size_t>(j)] = kAtUpper;
        xv_[static_cast<std::size_t>(j)] = up;
      } else {
        where_[static_cast<std::size_t>(j)] = kFreeZero;
        xv_[static_cast<std::size_t>(j)] = 0.0;
      }
    }

    // Row residuals with the structural variables at their start values
    // decide which rows get a basic slack and which need an artificial.
    basis_.assign(static_cast<std::size_t>(m_), -1);
    std::vector<double> art_value;
    std::vector<int> art_row;
    b_scale_ = 1.0;
    for (int i = 0; i < m_; ++i) {
      const Row& row = inst_.rows[static_cast<std::size_t>(i)];
      arows_[static_cast<std::size_t>(i)].assign(row.coeffs.begin(), row.coeffs.end());
      b_[static_cast<std::size_t>(i)] = row.rhs;
      b_scale_ = std::max(b_scale_, std::abs(row.rhs));
      double t = row.rhs;
      for (const auto& [j, a] : row.coeffs) t -= a * xv_[static_cast<std::size_t>(j)];
      const int s = n_ + i;
      const double slo = lo_[static_cast<std::size_t>(s)];
      const double sup = up_[static_cast<std::size_t>(s)];
      if (t >= slo && t <= sup) {
        basis_[static_cast<std::size_t>(i)] = s;
        where_[static_cast<std::size_t>(s)] = kBasic;
        xv_[static_cast<std::size_t>(s)] = t;
        continue;
      }
      // Slack parks at the violated bound; the leftover residual becomes a
      // nonnegative artificial. Scale the whole row by -1 when the residual
      // is negative so the artificial column stays a +1 unit column.
      const double parked = (t < slo) ? slo : sup;
      where_[static_cast<std::size_t>(s)] = (t < slo) ? kAtLower : kAtUpper;
      xv_[static_cast<std::size_t>(s)] = parked;
      double residual = t - parked;
      if (residual < 0.0) {
        for (auto& [j, a] : arows_[static_cast<std::size_t>(i)]) a = -a;
        slack_coeff_[static_cast<std::size_t>(i)] = -1.0;
        b_[static_cast<std::size_t>(i)] = -b_[static_cast<std::size_t>(i)];
        residual = -residual;
      }
      art_row.push_back(i);
      art_value.push_back(residual);
    }

    n_art_ = static_cast<int>(art_row.size());
    art_begin_ = n_slack_end;
    total_ = n_slack_end + n_art_;
    lo_.resize(static_cast<std::size_t>(total_), 0.0);
    up_.resize(static_cast<std::size_t>(total_), kInf);
    xv_.resize(static_cast<std::size_t>(total_), 0.0);
    where_.resize(static_cast<std::size_t>(total_), kAtLower);

    tab_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(total_), 0.0);
    for (int i = 0; i < m_; ++i) {
      for (const auto& [j, a] : arows_[static_cast<std::size_t>(i)]) tab(i, j) += a;
      tab(i, n_ + i) = slack_coeff_[static_cast<std::size_t>(i)];
    }
    for (int k = 0; k < n_art_; ++k) {
      const int col = art_begin_ + k;
      const int i = art_row[static_cast<std::size_t>(k)];
      tab(i, col) = 1.0;
      basis_[static_cast<std::size_t>(i)] = col;
      where_[static_cast<std::size_t>(col)] = kBasic;
      xv_[static_cast<std::size_t>(col)] = art_value[static_cast<std::size_t>(k)];
    }
    cost_.assign(static_cast<std::size_t>(total_), 0.0);
    d_.assign(static_cast<std::size_t>(total_), 0.0);
  }

  void set_phase1_costs() {
    std::fill(cost_.begin(), cost_.end(), 0.0);
    for (int a = art_begin_; a < total_; ++a) cost_[static_cast<std::size_t>(a)] = 1.0;
    recompute_reduced_costs();
  }

  void set_phase2_costs() {
    std::fill(cost_.begin(), cost_.end(), 0.0);
    for (int j = 0; j < n_; ++j) cost_[static_cast<std::size_t>(j)] = inst_.objective[static_cast<std::size_t>(j)];
    recompute_reduced_costs();
  }

  void recompute_reduced_costs() {
    d_ = cost_;
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];
      if (cb == 0.0) continue;
      const double* row = &tab_[static_cast<std::size_t>(i) * total_];
      for (int j = 0; j < total_; ++j) d_[static_cast<std::size_t>(j)] -= cb * row[j];
    }
    for (int i = 0; i < m_; ++i) d_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = 0.0;
  }

  /// Recomputes the basic variable values from the original (scaled) system,
  /// using the slack block of the tableau as B^-1. Kills accumulated drift.
  void refresh_basic_values() {
    std::vector<double> w = b_;
    for (int i = 0; i < m_; ++i) {
      for (const auto& [j, a] : arows_[static_cast<std::size_t>(i)]) {
        if (where_[static_cast<std::size_t>(j)] != kBasic) {
          w[static_cast<std::size_t>(i)] -= a * nonbasic_value(j);
        }
      }
      const int s = n_ + i;
      if (where_[static_cast<std::size_t>(s)] != kBasic) {
        w[static_cast<std::size_t>(i)] -= slack_coeff_[static_cast<std::size_t>(i)] * nonbasic_value(s);
      }
    }
    // Basic artificials are pinned at zero bounds and contribute nothing.
    for (int r = 0; r < m_; ++r) {
      double v = 0.0;
      const double* row = &tab_[static_cast<std::size_t>(r) * total_];
      for (int i = 0; i < m_; ++i) {
        const double wi = w[static_cast<std::size_t>(i)];
        if (wi != 0.0) v += wi * slack_coeff_[static_cast<std::size_t>(i)] * row[n_ + i];
      }
      xv_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])] = v;
    }
  }

  /// Pivots basic artificials out of the basis at zero step where possible;
  /// rows with no eligible pivot column are degenerate and keep a pinned
  /// artificial. Afterwards every artificial is fixed to [0, 0].
  void expel_artificials() {
    for (int r = 0; r < m_; ++r) {
      const int bcol = basis_[static_cast<std::size_t>(r)];
      if (bcol < art_begin_) continue;
      int enter = -1;
      const double* row = &tab_[static_cast<std::size_t>(r) * total_];
      for (int j = 0; j < art_begin_; ++j) {
        if (where_[static_cast<std::size_t>(j)] == kBasic) continue;
        if (std::abs(row[j]) > 1e-9) {
          enter = j;
          break;
        }
      }
      if (enter >= 0) {
        const double entering_value = nonbasic_value(enter);
        where_[static_cast<std::size_t>(bcol)] = kAtLower;
        xv_[static_cast<std::size_t>(bcol)] = 0.0;
        pivot(r, enter, entering_value);
      }
    }
    for (int a = art_begin_; a < total_; ++a) {
      lo_[static_cast<std::size_t>(a)] = 0.0;
      up_[static_cast<std::size_t>(a)] = 0.0;
      if (where_[static_cast<std::size_t>(a)] != kBasic) {
        where_[static_cast<std::size_t>(a)] = kAtLower;
        xv_[static_cast<std::size_t>(a)] = 0.0;
      }
    }
  }

  int choose_entering() const {
    const double tol = opt_.opt_tol;
    if (bland_) {
      for (int j = 0; j < total_; ++j) {
        if (eligible_gain(j) > tol) return j;
      }
      return -1;
    }
    double best = tol;
    for (int j = 0; j < total_; ++j) {
      const double g = eligible_gain(j);
      if (g > best) best = g;
    }
    if (best <= tol) return -1;
    for (int j = 0; j < total_; ++j) {
      if (eligible_gain(j) >= best - tol) return j;
    }
    return -1;
  }

  /// Improvement rate |d_j| if column j may enter, else 0.
  double eligible_gain(int j) const {
    const auto sj = static_cast<std::size_t>(j);
    if (where_[sj] == kBasic) return 0.0;
    if (lo_[sj] == up_[sj]) return 0.0;  // fixed (artificials after Phase I)
    const double dj = d_[sj];
    switch (where_[sj]) {
      case kAtLower: return dj < 0.0 ? -dj : 0.0;
      case kAtUpper: return dj > 0.0 ? dj : 0.0;
      case kFreeZero: return std::abs(dj);
      default: return 0.0;
    }
  }

  Status iterate() {
    const double ratio_tol = 1e-10;
    int refresh_countdown = 64;
    for (;;) {
      const int e = choose_entering();
      if (e < 0) {
        // Claimed optimal: recompute reduced costs once to shed drift, and
        // resume if a genuinely improving column appears.
        recompute_reduced_costs();
        const int e2 = choose_entering();
        if (e2 < 0) return Status::Optimal;
        continue;
      }
      if (iters_ >= max_iters_) return Status::IterationLimit;
      const auto se = static_cast<std::size_t>(e);
      const double sigma = (where_[se] == kAtUpper) ? -1.0 : (d_[se] < 0.0 ? 1.0 : -1.0);

      // Ratio test: smallest step at which a basic variable or the entering
      // variable's own opposite bound blocks.
      double theta = kInf;
      int leave_row = -1;
      double own_gap = kInf;
      if (std::isfinite(lo_[se]) && std::isfinite(up_[se])) own_gap = up_[se] - lo_[se];
      for (int i = 0; i < m_; ++i) {
        const double alpha = tab(i, e);
        if (std::abs(alpha) <= ratio_tol) continue;
        const double delta = -sigma * alpha;  // rate of change of basic i
        const int bcol = basis_[static_cast<std::size_t>(i)];
        const auto sb = static_cast<std::size_t>(bcol);
        double step;
        if (delta < 0.0) {
          if (!std::isfinite(lo_[sb])) continue;
          step = (xv_[sb] - lo_[sb]) / (-delta);
        } else {
          if (!std::isfinite(up_[sb])) continue;
          step = (up_[sb] - xv_[sb]) / delta;
        }
        if (step < 0.0) step = 0.0;
        if (leave_row < 0 || step < theta - 1e-12) {
          theta = step;
          leave_row = i;
        } else if (step <= theta + 1e-12) {
          // Tie break: Bland wants the lowest basic column index; otherwise
          // prefer the larger pivot magnitude for stability.
          const int cur = basis_[static_cast<std::size_t>(leave_row)];
          if (bland_) {
            if (bcol < cur) {
              theta = std::min(theta, step);
              leave_row = i;
            }
          } else if (std::abs(alpha) > std::abs(tab(leave_row, e))) {
            theta = std::min(theta, step);
            leave_row = i;
          }
        }
      }

      if (std::isfinite(own_gap) && own_gap <= theta) {
        // Bound flip: the entering variable crosses to its other bound.
        ++iters_;
        if (opt_.pivot_log) opt_.pivot_log->emplace_back(e, -1);
        apply_step(e, sigma, own_gap);
        const double target = (where_[se] == kAtLower) ? up_[se] : lo_[se];
        where_[se] = (where_[se] == kAtLower) ? kAtUpper : kAtLower;
        xv_[se] = target;
        continue;
      }
      if (leave_row < 0) return Status::Unbounded;

      ++iters_;
      if (theta <= 1e-11) {
        ++degenerate_pivots_;
        if (!bland_ && degenerate_pivots_ > bland_threshold_) bland_ = true;
      }
      if (opt_.pivot_log) {
        opt_.pivot_log->emplace_back(e, basis_[static_cast<std::size_t>(leave_row)]);
      }
      apply_step(e, sigma, theta);
      const double entering_value = nonbasic_value(e) + sigma * theta;
      // The leaving variable lands on the bound it was driven into.
      const int lcol = basis_[static_cast<std::size_t>(leave_row)];
      const double rate = -sigma * tab(leave_row, e);
      where_[static_cast<std::size_t>(lcol)] = rate < 0.0 ? kAtLower : kAtUpper;
      xv_[static_cast<std::size_t>(lcol)] = rate < 0.0 ? lo_[static_cast<std::size_t>(lcol)]
                                                       : up_[static_cast<std::size_t>(lcol)];
      pivot(leave_row, e, entering_value);

      if (--refresh_countdown <= 0) {
        refresh_countdown = 64;
        refresh_basic_values();
      }
    }
  }

  /// Moves the current point: entering column e changes by sigma * theta,
  /// every basic variable follows its tableau column.
  void apply_step(int e, double sigma, double theta) {
    if (theta == 0.0 || !std::isfinite(theta)) return;
    for (int i = 0; i < m_; ++i) {
      const double alpha = tab(i, e);
      if (alpha == 0.0) continue;
      xv_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] -= sigma * alpha * theta;
    }
  }

  /// Gaussian elimination step making column e the unit column of leave_row.
  void pivot(int leave_row, int e, double entering_value) {
    const auto se = static_cast<std::size_t>(e);
    double* prow = &tab_[static_cast<std::size_t>(leave_row) * total_];
    const double inv = 1.0 / prow[e];
    for (int j = 0; j < total_; ++j) prow[j] *= inv;
    prow[e] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == leave_row) continue;
      double* row = &tab_[static_cast<std::size_t>(i) * total_];
      const double f = row[e];
      if (f == 0.0) continue;
      for (int j = 0; j < total_; ++j) row[j] -= f * prow[j];
      row[e] = 0.0;
    }
    const double fd = d_[se];
    if (fd != 0.0) {
      for (int j = 0; j < total_; ++j) d_[static_cast<std::size_t>(j)] -= fd * prow[j];
    }
    d_[se] = 0.0;
    basis_[static_cast<std::size_t>(leave_row)] = e;
    where_[se] = kBasic;
    xv_[se] = entering_value;
  }

  Solution finish(Status status) {
    refresh_basic_values();
    Solution sol;
    sol.status = status;
    sol.iterations = iters_;
    sol.values.assign(xv_.begin(), xv_.begin() + n_);
    sol.objective_value = 0.0;
    if (status == Status::Unbounded) {
      sol.objective_value = -kInf;
      return sol;
    }
    for (int j = 0; j < n_; ++j) {
      sol.objective_value += inst_.objective[static_cast<std::size_t>(j)] * sol.values[static_cast<std::size_t>(j)];
    }
    return sol;
  }
};

}  // namespace detail

inline Solution solve(const LpInstance& inst, const SolveOptions& options = {}) {
  detail::validate_instance(inst);
  detail::Simplex simplex(inst, options);
  return simplex.run();
}

// ---------------------------------------------------------------------------
// MPS export. Layout follows the classic fixed-field column starts (fields at
// columns 2, 5, 15, 25, 40, 50); values are printed with %.12g, which can
// overrun the historical 12-character value field for extreme magnitudes but
// stays well inside it for the tame coefficients this library produces.
// Variables appear in index order as X0000001..., rows as R0000001... in
// instance order; within a column the objective entry precedes row entries.
// ---------------------------------------------------------------------------

inline void write_mps(const LpInstance& inst, std::ostream& out, std::string_view name = "KBPOT") {
  detail::validate_instance(inst);
  auto var_name = [](int j) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "X%07d", j + 1);
    return std::string(buf);
  };
  auto row_name = [](int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "R%07d", i + 1);
    return std::string(buf);
  };
  auto value_str = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  auto field = [](const std::string& s, std::size_t width) {
    std::string f = s;
    while (f.size() < width) f.push_back(' ');
    return f;
  };

  out << "NAME          " << name << "\n";
  out << "ROWS\n";
  out << " N  COST\n";
  for (std::size_t i = 0; i < inst.rows.size(); ++i) {
    out << (inst.rows[i].rel == Relation::Ge ? " G  " : " L  ") << row_name(static_cast<int>(i))
        << "\n";
  }

  // Column-major entries: collect per variable from the sparse rows.
  std::vector<std::vector<std::pair<int, double>>> cols(static_cast<std::size_t>(inst.n_vars));
  for (std::size_t i = 0; i < inst.rows.size(); ++i) {
    for (const auto& [j, a] : inst.rows[i].coeffs) {
      cols[static_cast<std::size_t>(j)].emplace_back(static_cast<int>(i), a);
    }
  }
  out << "COLUMNS\n";
  for (int j = 0; j < inst.n_vars; ++j) {
    auto& entries = cols[static_cast<std::size_t>(j)];
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<std::string, double>> cells;
    if (inst.objective[static_cast<std::size_t>(j)] != 0.0) {
      cells.emplace_back("COST", inst.objective[static_cast<std::size_t>(j)]);
    }
    double merged = 0.0;
    int prev = -1;
    auto flush_merged = [&] {
      if (prev >= 0 && merged != 0.0) cells.emplace_back(row_name(prev), merged);
    };
    for (const auto& [i, a] : entries) {
      if (i != prev) {
        flush_merged();
        prev = i;
        merged = 0.0;
      }
      merged += a;
    }
    flush_merged();
    for (std::size_t k = 0; k < cells.size(); k += 2) {
      out << "    " << field(var_name(j), 10) << field(cells[k].first, 10)
          << value_str(cells[k].second);
      if (k + 1 < cells.size()) {
        out << "   " << field(cells[k + 1].first, 10) << value_str(cells[k + 1].second);
      }
      out << "\n";
    }
  }

  out << "RHS\n";
  for (std::size_t i = 0; i < inst.rows.size(); ++i) {
    if (inst.rows[i].rhs == 0.0) continue;
    out << "    " << field("RHS", 10) << field(row_name(static_cast<int>(i)), 10)
        << value_str(inst.rows[i].rhs) << "\n";
  }

  out << "BOUNDS\n";
  for (int j = 0; j < inst.n_vars; ++j) {
    const double lo = inst.lower[static_cast<std::size_t>(j)];
    const double up = inst.upper[static_cast<std::size_t>(j)];
    if (lo == up) {
      out << " FX " << field("BND", 10) << field(var_name(j), 10) << value_str(lo) << "\n";
    } else if (!std::isfinite(lo) && !std::isfinite(up)) {
      out << " FR " << field("BND", 10) << var_name(j) << "\n";
    } else {
      if (std::isfinite(lo)) {
        out << " LO " << field("BND", 10) << field(var_name(j), 10) << value_str(lo) << "\n";
      } else {
        out << " MI " << field("BND", 10) << var_name(j) << "\n";
      }
      if (std::isfinite(up)) {
        out << " UP " << field("BND", 10) << field(var_name(j), 10) << value_str(up) << "\n";
      }
    }
  }
  out << "ENDATA\n";
}

}  // namespace kbpot::lp
