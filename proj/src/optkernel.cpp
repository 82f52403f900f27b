// SPDX-License-Identifier: Apache-2.0
#include "optkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rangebound {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr double kIntTol = 1e-6;
constexpr double kDblInf = std::numeric_limits<double>::infinity();

// Dense tableau for problems in the standard form
//   max c'y   s.t.  A y (<=|>=|=) b,  y >= 0,  b >= 0 after normalization.
class Tableau {
 public:
  // Returns false (infeasible) from phase 1, throws nothing.
  SolveStatus solve(const std::vector<double>& c, const std::vector<LinearRow>& rows,
                    std::vector<double>& y_out, double& obj_out) {
    n_ = c.size();
    m_ = rows.size();
    // Column layout: [structural n][slack/surplus s][artificial a][rhs]
    size_t slack_count = 0, art_count = 0;
    for (const auto& r : rows) {
      bool flip = r.rhs < 0;
      Relation2 rel = r.rel;
      if (flip) rel = rel == Relation2::LE ? Relation2::GE : (rel == Relation2::GE ? Relation2::LE : Relation2::EQ);
      if (rel != Relation2::EQ) ++slack_count;
      if (rel != Relation2::LE) ++art_count;
    }
    cols_ = n_ + slack_count + art_count;
    tab_.assign(m_, std::vector<double>(cols_ + 1, 0.0));
    basis_.assign(m_, 0);
    art_start_ = n_ + slack_count;

    size_t si = n_, ai = art_start_;
    for (size_t i = 0; i < m_; ++i) {
      const auto& r = rows[i];
      double sign = r.rhs < 0 ? -1.0 : 1.0;
      Relation2 rel = r.rel;
      if (sign < 0)
        rel = rel == Relation2::LE ? Relation2::GE : (rel == Relation2::GE ? Relation2::LE : Relation2::EQ);
      for (size_t j = 0; j < n_; ++j) tab_[i][j] = sign * r.coeffs[j];
      tab_[i][cols_] = sign * r.rhs;
      if (rel == Relation2::LE) {
        tab_[i][si] = 1.0;
        basis_[i] = si++;
      } else if (rel == Relation2::GE) {
        tab_[i][si] = -1.0;
        ++si;
        tab_[i][ai] = 1.0;
        basis_[i] = ai++;
      } else {
        tab_[i][ai] = 1.0;
        basis_[i] = ai++;
      }
    }

    if (art_count > 0) {
      // Phase 1: minimize the sum of artificials == maximize -sum.
      std::vector<double> c1(cols_, 0.0);
      for (size_t j = art_start_; j < cols_; ++j) c1[j] = -1.0;
      build_objective(c1);
      SolveStatus st = iterate();
      if (st == SolveStatus::Unbounded) return SolveStatus::Infeasible;  // cannot happen
      if (obj_row_[cols_] < -kFeasTol) return SolveStatus::Infeasible;
      // Pivot remaining artificials out of the basis where possible.
      for (size_t i = 0; i < m_; ++i) {
        if (basis_[i] < art_start_) continue;
        size_t enter = cols_;
        for (size_t j = 0; j < art_start_; ++j) {
          if (std::fabs(tab_[i][j]) > kPivotTol) {
            enter = j;
            break;
          }
        }
        if (enter < cols_) pivot(i, enter);
        // A row with no eligible column is redundant; its artificial stays at
        // zero and never re-enters because phase 2 prices it out.
      }
    }

    std::vector<double> c2(cols_, 0.0);
    for (size_t j = 0; j < n_; ++j) c2[j] = c[j];
    build_objective(c2);
    SolveStatus st = iterate(/*forbid_artificials=*/true);
    if (st != SolveStatus::Optimal) return st;

    y_out.assign(n_, 0.0);
    for (size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) y_out[basis_[i]] = tab_[i][cols_];
    obj_out = obj_row_[cols_];
    return SolveStatus::Optimal;
  }

 private:
  size_t n_ = 0, m_ = 0, cols_ = 0, art_start_ = 0;
  std::vector<std::vector<double>> tab_;
  std::vector<double> obj_row_;  // reduced costs; last entry is the objective value
  std::vector<size_t> basis_;

  void build_objective(const std::vector<double>& c) {
    obj_row_.assign(cols_ + 1, 0.0);
    for (size_t j = 0; j < cols_; ++j) obj_row_[j] = -c[j];
    for (size_t i = 0; i < m_; ++i) {
      double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      for (size_t j = 0; j <= cols_; ++j) obj_row_[j] += cb * tab_[i][j];
    }
  }

  void pivot(size_t row, size_t col) {
    double inv = 1.0 / tab_[row][col];
    for (size_t j = 0; j <= cols_; ++j) tab_[row][j] *= inv;
    tab_[row][col] = 1.0;
    for (size_t i = 0; i < m_; ++i) {
      if (i == row) continue;
      double f = tab_[i][col];
      if (std::fabs(f) <= kPivotTol) {
        tab_[i][col] = 0.0;
        continue;
      }
      for (size_t j = 0; j <= cols_; ++j) tab_[i][j] -= f * tab_[row][j];
      tab_[i][col] = 0.0;
    }
    double f = obj_row_[col];
    if (std::fabs(f) > 0) {
      for (size_t j = 0; j <= cols_; ++j) obj_row_[j] -= f * tab_[row][j];
      obj_row_[col] = 0.0;
    }
    basis_[row] = col;
  }

  SolveStatus iterate(bool forbid_artificials = false) {
    size_t limit = forbid_artificials ? art_start_ : cols_;
    long long stall = 0;
    double last_obj = obj_row_[cols_];
    bool bland = false;
    for (long long iter = 0;; ++iter) {
      if (iter > 200000) throw std::runtime_error("simplex iteration limit exceeded");
      size_t enter = limit;
      if (!bland) {
        double best = -kPivotTol;
        for (size_t j = 0; j < limit; ++j) {
          if (obj_row_[j] < best) {
            best = obj_row_[j];
            enter = j;
          }
        }
      } else {
        for (size_t j = 0; j < limit; ++j) {
          if (obj_row_[j] < -kPivotTol) {
            enter = j;
            break;
          }
        }
      }
      if (enter == limit) return SolveStatus::Optimal;

      size_t leave = m_;
      double best_ratio = kDblInf;
      for (size_t i = 0; i < m_; ++i) {
        if (tab_[i][enter] > kPivotTol) {
          double ratio = tab_[i][cols_] / tab_[i][enter];
          if (ratio < best_ratio - kPivotTol ||
              (ratio < best_ratio + kPivotTol && (leave == m_ || basis_[i] < basis_[leave]))) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave == m_) return SolveStatus::Unbounded;
      pivot(leave, enter);

      if (obj_row_[cols_] > last_obj + kPivotTol) {
        stall = 0;
        last_obj = obj_row_[cols_];
        bland = false;
      } else if (++stall > 64) {
        bland = true;  // degeneracy: switch to Bland's rule, which cannot cycle
      }
    }
  }
};

}  // namespace

SolveOutcome solve_lp(const LinearProgram& lp) {
  size_t n = lp.num_vars();
  for (size_t j = 0; j < n; ++j) {
    if (!std::isfinite(lp.lower[j]))
      throw std::invalid_argument("solve_lp: variable lower bounds must be finite");
    if (lp.lower[j] > lp.upper[j]) return SolveOutcome{SolveStatus::Infeasible, 0.0, {}, 1};
  }

  // Shift y = x - lower so y >= 0; finite upper bounds become extra rows.
  std::vector<double> c(n);
  double const_term = 0.0;
  double sense = lp.maximize ? 1.0 : -1.0;
  for (size_t j = 0; j < n; ++j) {
    c[j] = sense * lp.objective[j];
    const_term += sense * lp.objective[j] * lp.lower[j];
  }
  std::vector<LinearRow> rows;
  rows.reserve(lp.rows.size() + n);
  for (const auto& r : lp.rows) {
    LinearRow nr = r;
    double shift = 0.0;
    for (size_t j = 0; j < n; ++j) shift += r.coeffs[j] * lp.lower[j];
    nr.rhs = r.rhs - shift;
    rows.push_back(std::move(nr));
  }
  for (size_t j = 0; j < n; ++j) {
    if (std::isfinite(lp.upper[j])) {
      LinearRow ub;
      ub.coeffs.assign(n, 0.0);
      ub.coeffs[j] = 1.0;
      ub.rel = Relation2::LE;
      ub.rhs = lp.upper[j] - lp.lower[j];
      rows.push_back(std::move(ub));
    }
  }

  Tableau tab;
  std::vector<double> y;
  double obj = 0.0;
  SolveStatus st = tab.solve(c, rows, y, obj);
  SolveOutcome out;
  out.status = st;
  out.nodes = 1;
  if (st == SolveStatus::Optimal) {
    out.x.resize(n);
    for (size_t j = 0; j < n; ++j) out.x[j] = y[j] + lp.lower[j];
    out.objective = sense * (obj + const_term);
  }
  return out;
}

namespace {

struct BnbNode {
  std::vector<double> lower;
  std::vector<double> upper;
};

}  // namespace

SolveOutcome solve_milp(const MilpProgram& mp) {
  const LinearProgram& base = mp.lp;
  size_t n = base.num_vars();
  double sense = base.maximize ? 1.0 : -1.0;

  SolveOutcome best;
  best.status = SolveStatus::Infeasible;
  bool have_incumbent = false;
  long long nodes = 0;

  std::vector<BnbNode> stack;
  stack.push_back(BnbNode{base.lower, base.upper});

  while (!stack.empty()) {
    BnbNode node = std::move(stack.back());
    stack.pop_back();
    ++nodes;

    LinearProgram relax = base;
    relax.lower = node.lower;
    relax.upper = node.upper;
    SolveOutcome lp = solve_lp(relax);
    if (lp.status == SolveStatus::Unbounded) {
      // An unbounded relaxation makes the integer problem unbounded too
      // whenever any integer point is feasible; report it directly.
      return SolveOutcome{SolveStatus::Unbounded, 0.0, {}, nodes};
    }
    if (lp.status != SolveStatus::Optimal) continue;
    if (have_incumbent && sense * lp.objective <= sense * best.objective + 1e-9) continue;

    // Most fractional variable, lowest index on ties.
    size_t branch = n;
    double best_frac = kIntTol;
    for (size_t j = 0; j < n; ++j) {
      if (!mp.integral[j]) continue;
      double f = lp.x[j] - std::floor(lp.x[j]);
      double frac = std::min(f, 1.0 - f);
      if (frac > best_frac) {
        best_frac = frac;
        branch = j;
      }
    }
    if (branch == n) {
      // Integral: round off the tolerance fuzz and accept.
      for (size_t j = 0; j < n; ++j)
        if (mp.integral[j]) lp.x[j] = std::llround(lp.x[j]);
      double obj = 0.0;
      for (size_t j = 0; j < n; ++j) obj += base.objective[j] * lp.x[j];
      if (!have_incumbent || sense * obj > sense * best.objective + 1e-9) {
        best.status = SolveStatus::Optimal;
        best.objective = obj;
        best.x = lp.x;
        have_incumbent = true;
      }
      continue;
    }

    double floor_v = std::floor(lp.x[branch]);
    BnbNode down = node, up = node;
    down.upper[branch] = std::min(down.upper[branch], floor_v);
    up.lower[branch] = std::max(up.lower[branch], floor_v + 1.0);
    // Depth-first, floor side explored first.
    stack.push_back(std::move(up));
    stack.push_back(std::move(down));
  }

  best.nodes = nodes;
  return best;
}

}  // namespace rangebound
