// SPDX-License-Identifier: Apache-2.0
#include "bound.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace rangebound {

const char* bound_status_name(BoundStatus s) {
  switch (s) {
    case BoundStatus::Exact: return "EXACT";
    case BoundStatus::EarlyStopLoose: return "EARLY_STOP_LOOSE";
    case BoundStatus::NotClosed: return "NOT_CLOSED";
    case BoundStatus::InfeasibleConstraints: return "INFEASIBLE_CONSTRAINTS";
    case BoundStatus::NoRows: return "NO_ROWS";
  }
  return "?";
}

namespace {

// Closed hull of the clip's interval atom on one attribute, if any.
std::optional<std::pair<double, double>> clip_hull(const Predicate& clip,
                                                   const std::string& attr) {
  auto it = clip.atoms.find(attr);
  if (it == clip.atoms.end()) return std::nullopt;
  const Interval* iv = std::get_if<Interval>(&it->second);
  if (!iv) return std::nullopt;
  return std::make_pair(iv->lo, iv->hi);
}

struct VarMap {
  std::vector<size_t> vars;           // cell indices that became variables
  std::vector<long long> cell_to_var; // -1 when unusable
};

VarMap make_vars(const BoundProblem& p) {
  VarMap m;
  m.cell_to_var.assign(p.cells.size(), -1);
  for (size_t i = 0; i < p.cells.size(); ++i) {
    if (!p.usable[i]) continue;
    m.cell_to_var[i] = static_cast<long long>(m.vars.size());
    m.vars.push_back(i);
  }
  return m;
}

MilpProgram make_window_milp(const BoundProblem& p, const VarMap& m,
                             const std::vector<double>& objective, bool maximize) {
  size_t n = m.vars.size();
  MilpProgram mp;
  mp.lp.maximize = maximize;
  mp.lp.objective = objective;
  mp.lp.lower.assign(n, 0.0);
  // Per-variable caps are implied by the window rows (every cell is covered
  // by a constraint with a finite k_u); leaving them out keeps the tableau at
  // one or two rows per constraint instead of one per cell.
  mp.lp.upper.assign(n, kInf);
  mp.integral.assign(n, true);

  const PCSet& set = *p.set;
  for (size_t j = 0; j < set.size(); ++j) {
    std::vector<double> coeffs(n, 0.0);
    bool any = false;
    for (size_t v = 0; v < n; ++v) {
      if (p.cells[m.vars[v]].covers(j)) {
        coeffs[v] = 1.0;
        any = true;
      }
    }
    const auto& kappa = set.at(j).kappa;
    if (!any) continue;  // kl > 0 with no cells is caught in build_problem
    LinearRow le{coeffs, Relation2::LE, static_cast<double>(kappa.ku)};
    mp.lp.rows.push_back(std::move(le));
    if (kappa.kl > 0) {
      LinearRow ge{coeffs, Relation2::GE, static_cast<double>(kappa.kl)};
      mp.lp.rows.push_back(std::move(ge));
    }
  }
  return mp;
}

std::vector<int64_t> to_allocation(const BoundProblem& p, const VarMap& m,
                                   const std::vector<double>& x) {
  std::vector<int64_t> alloc(p.cells.size(), 0);
  for (size_t v = 0; v < m.vars.size(); ++v)
    alloc[m.vars[v]] = static_cast<int64_t>(std::llround(x[v]));
  return alloc;
}

// Replace the solver's arg max with the lexicographically smallest optimal
// allocation; keeps published witnesses stable. Only used on small problems.
void canonicalize_witness(const BoundProblem& p, const VarMap& m, MilpProgram mp,
                          double optimum, std::vector<double>& x, long long& nodes) {
  size_t n = m.vars.size();
  double eps = 1e-6 * std::max(1.0, std::fabs(optimum));
  LinearRow lo{mp.lp.objective, Relation2::GE, optimum - eps};
  LinearRow hi{mp.lp.objective, Relation2::LE, optimum + eps};
  mp.lp.rows.push_back(lo);
  mp.lp.rows.push_back(hi);
  for (size_t i = 0; i < n; ++i) {
    MilpProgram sub = mp;
    sub.lp.maximize = false;
    sub.lp.objective.assign(n, 0.0);
    sub.lp.objective[i] = 1.0;
    SolveOutcome out = solve_milp(sub);
    nodes += out.nodes;
    if (out.status != SolveStatus::Optimal) return;  // keep the original witness
    double v = std::llround(out.objective);
    mp.lp.lower[i] = v;
    mp.lp.upper[i] = v;
    x[i] = v;
  }
}

SumOutcome solve_direction(const BoundProblem& p, const std::vector<double>& objective,
                           const BoundOptions& opts) {
  VarMap m = make_vars(p);
  SumOutcome out;
  if (p.infeasible_window) {
    out.status = SolveStatus::Infeasible;
    return out;
  }
  MilpProgram mp = make_window_milp(p, m, objective, true);
  SolveOutcome sol = solve_milp(mp);
  out.nodes = sol.nodes;
  out.status = sol.status;
  if (sol.status != SolveStatus::Optimal) return out;
  out.value = sol.objective;
  if (m.vars.size() <= opts.canonical_witness_limit)
    canonicalize_witness(p, m, mp, sol.objective, sol.x, out.nodes);
  out.allocation = to_allocation(p, m, sol.x);
  return out;
}

bool all_lower_bounds_zero(const PCSet& set) {
  for (const auto& pc : set.constraints())
    if (pc.kappa.kl > 0) return false;
  return true;
}

}  // namespace

BoundProblem build_problem(const DecompositionResult& inside,
                           const DecompositionResult& outside, const PCSet& set,
                           const std::optional<std::string>& agg_attr,
                           const std::optional<Predicate>& clip) {
  BoundProblem p;
  p.set = &set;
  p.early_stopped = inside.stats.early_stopped || outside.stats.early_stopped;
  p.cells = inside.cells;
  p.cells.insert(p.cells.end(), outside.cells.begin(), outside.cells.end());

  const Schema& schema = set.schema();
  if (agg_attr && *agg_attr != "*") p.agg_index = schema.index_of(*agg_attr);

  std::optional<std::pair<double, double>> hull;
  if (clip && p.agg_index) hull = clip_hull(*clip, *agg_attr);

  size_t n = p.cells.size();
  p.obj_upper.assign(n, 0.0);
  p.obj_lower.assign(n, 0.0);
  p.usable.assign(n, true);
  p.var_cap.assign(n, 0);

  for (size_t i = 0; i < n; ++i) {
    const Cell& c = p.cells[i];
    int64_t cap = std::numeric_limits<int64_t>::max();
    for (size_t j = 0; j < set.size(); ++j)
      if (c.covers(j)) cap = std::min(cap, set.at(j).kappa.ku);
    p.var_cap[i] = cap;
    if (c.forced_zero || cap <= 0) {
      p.usable[i] = false;
      continue;
    }
    if (p.agg_index) {
      double lo = c.value_lower[*p.agg_index];
      double hi = c.value_upper[*p.agg_index];
      if (c.inside_clip && hull) {
        lo = std::max(lo, hull->first);
        hi = std::min(hi, hull->second);
      }
      if (lo > hi) {
        p.usable[i] = false;
        continue;
      }
      if (c.inside_clip) {
        p.obj_lower[i] = lo;
        p.obj_upper[i] = hi;
      }
    } else if (c.inside_clip) {
      p.obj_lower[i] = 1.0;
      p.obj_upper[i] = 1.0;
    }
  }

  for (size_t j = 0; j < set.size(); ++j) {
    if (set.at(j).kappa.kl <= 0) continue;
    bool any = false;
    for (size_t i = 0; i < n; ++i)
      if (p.usable[i] && p.cells[i].covers(j)) any = true;
    if (!any) {
      p.infeasible_window = true;
      p.infeasible_reason = "constraint " + set.at(j).id +
                            " requires rows but admits no feasible cell";
    }
  }
  return p;
}

namespace {

std::vector<WitnessEntry> allocation_witness(const BoundProblem& p,
                                             const std::vector<int64_t>& alloc,
                                             bool upper_side) {
  std::vector<WitnessEntry> out;
  size_t npc = p.set->size();
  for (size_t i = 0; i < p.cells.size(); ++i) {
    if (alloc.empty() || alloc[i] == 0) continue;
    WitnessEntry w;
    w.signature = p.cells[i].signature(npc);
    w.inside = p.cells[i].inside_clip;
    w.count = alloc[i];
    w.value = upper_side ? p.obj_upper[i] : p.obj_lower[i];
    if (!p.cells[i].inside_clip && p.agg_index) {
      // Rows parked outside the query take any feasible value; report the
      // cell's reconciled lower end.
      w.value = p.cells[i].value_lower[*p.agg_index];
    }
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

SumOutcome max_sum(const BoundProblem& p, const BoundOptions& opts) {
  VarMap m = make_vars(p);
  std::vector<double> obj(m.vars.size());
  for (size_t v = 0; v < m.vars.size(); ++v) obj[v] = p.obj_upper[m.vars[v]];
  return solve_direction(p, obj, opts);
}

SumOutcome min_sum(const BoundProblem& p, const BoundOptions& opts) {
  bool trivially_zero = all_lower_bounds_zero(*p.set);
  if (trivially_zero) {
    for (size_t i = 0; i < p.cells.size(); ++i)
      if (p.usable[i] && p.cells[i].inside_clip && p.obj_lower[i] < 0) trivially_zero = false;
  }
  if (trivially_zero) {
    SumOutcome out;
    out.status = SolveStatus::Optimal;
    out.value = 0.0;
    out.allocation.assign(p.cells.size(), 0);
    return out;
  }
  VarMap m = make_vars(p);
  std::vector<double> obj(m.vars.size());
  for (size_t v = 0; v < m.vars.size(); ++v) obj[v] = -p.obj_lower[m.vars[v]];
  SumOutcome out = solve_direction(p, obj, opts);
  out.value = -out.value + 0.0;
  return out;
}

ResultRange bound_count(const BoundProblem& p, const BoundOptions& opts) {
  ResultRange r;
  r.diagnostics.method = "milp";
  VarMap m = make_vars(p);
  std::vector<double> obj(m.vars.size());
  for (size_t v = 0; v < m.vars.size(); ++v)
    obj[v] = p.cells[m.vars[v]].inside_clip ? 1.0 : 0.0;
  SumOutcome up = solve_direction(p, obj, opts);
  if (up.status != SolveStatus::Optimal) {
    r.status = BoundStatus::InfeasibleConstraints;
    return r;
  }
  r.upper = up.value;
  r.witness_upper = allocation_witness(p, up.allocation, true);
  r.diagnostics.milp_nodes += up.nodes;

  if (all_lower_bounds_zero(*p.set)) {
    r.lower = 0;
  } else {
    std::vector<double> neg(obj.size());
    for (size_t v = 0; v < obj.size(); ++v) neg[v] = -obj[v];
    SumOutcome dn = solve_direction(p, neg, opts);
    r.lower = -dn.value + 0.0;
    r.witness_lower = allocation_witness(p, dn.allocation, false);
    r.diagnostics.milp_nodes += dn.nodes;
  }
  r.status = p.early_stopped ? BoundStatus::EarlyStopLoose : BoundStatus::Exact;
  return r;
}

namespace {

// Feasibility of the windows with optional extra rows; objective 0.
bool windows_feasible(const BoundProblem& p, const VarMap& m,
                      const std::vector<LinearRow>& extra, long long& nodes) {
  if (p.infeasible_window) return false;
  MilpProgram mp = make_window_milp(p, m, std::vector<double>(m.vars.size(), 0.0), true);
  for (const auto& row : extra) mp.lp.rows.push_back(row);
  SolveOutcome out = solve_milp(mp);
  nodes += out.nodes;
  return out.status == SolveStatus::Optimal;
}

LinearRow inside_count_row(const BoundProblem& p, const VarMap& m, Relation2 rel,
                           double rhs) {
  LinearRow row;
  row.coeffs.assign(m.vars.size(), 0.0);
  for (size_t v = 0; v < m.vars.size(); ++v)
    if (p.cells[m.vars[v]].inside_clip) row.coeffs[v] = 1.0;
  row.rel = rel;
  row.rhs = rhs;
  return row;
}

// Maximum/minimum number of matched rows over all feasible allocations.
std::pair<int64_t, int64_t> matched_count_range(const BoundProblem& p, const VarMap& m,
                                                long long& nodes, bool& feasible) {
  feasible = false;
  if (p.infeasible_window) return {0, 0};
  std::vector<double> obj(m.vars.size(), 0.0);
  for (size_t v = 0; v < m.vars.size(); ++v)
    if (p.cells[m.vars[v]].inside_clip) obj[v] = 1.0;
  MilpProgram mp = make_window_milp(p, m, obj, true);
  SolveOutcome up = solve_milp(mp);
  nodes += up.nodes;
  if (up.status != SolveStatus::Optimal) return {0, 0};
  feasible = true;
  int64_t max_rows = std::llround(up.objective);
  int64_t min_rows = 0;
  if (!all_lower_bounds_zero(*p.set)) {
    MilpProgram dn = mp;
    dn.lp.maximize = false;
    SolveOutcome down = solve_milp(dn);
    nodes += down.nodes;
    if (down.status == SolveStatus::Optimal) min_rows = std::llround(down.objective);
  }
  return {max_rows, min_rows};
}

}  // namespace

ResultRange bound_avg(const BoundProblem& p, const BoundOptions& opts) {
  ResultRange r;
  r.diagnostics.method = "milp";
  VarMap m = make_vars(p);
  bool feasible = false;
  auto [max_rows, min_rows] = matched_count_range(p, m, r.diagnostics.milp_nodes, feasible);
  (void)min_rows;
  if (!feasible) {
    r.status = BoundStatus::InfeasibleConstraints;
    return r;
  }
  if (max_rows == 0) {
    r.status = BoundStatus::NoRows;
    return r;
  }

  double r_lo = kInf, r_hi = -kInf;
  for (size_t v = 0; v < m.vars.size(); ++v) {
    size_t i = m.vars[v];
    if (!p.cells[i].inside_clip) continue;
    r_lo = std::min(r_lo, p.obj_lower[i]);
    r_hi = std::max(r_hi, p.obj_upper[i]);
  }
  double width = std::max(r_hi - r_lo, 0.0);
  double tol = std::max(opts.avg_tol_rel * width, 1e-12);

  auto feasible_mean_ge = [&](double target) {
    std::vector<double> obj(m.vars.size(), 0.0);
    for (size_t v = 0; v < m.vars.size(); ++v) {
      size_t i = m.vars[v];
      obj[v] = p.cells[i].inside_clip ? p.obj_upper[i] - target : 0.0;
    }
    MilpProgram mp = make_window_milp(p, m, obj, true);
    mp.lp.rows.push_back(inside_count_row(p, m, Relation2::GE, 1.0));
    SolveOutcome out = solve_milp(mp);
    r.diagnostics.milp_nodes += out.nodes;
    return out.status == SolveStatus::Optimal &&
           out.objective >= -1e-9 * std::max(1.0, std::fabs(target));
  };
  auto feasible_mean_le = [&](double target) {
    std::vector<double> obj(m.vars.size(), 0.0);
    for (size_t v = 0; v < m.vars.size(); ++v) {
      size_t i = m.vars[v];
      obj[v] = p.cells[i].inside_clip ? target - p.obj_lower[i] : 0.0;
    }
    MilpProgram mp = make_window_milp(p, m, obj, true);
    mp.lp.rows.push_back(inside_count_row(p, m, Relation2::GE, 1.0));
    SolveOutcome out = solve_milp(mp);
    r.diagnostics.milp_nodes += out.nodes;
    return out.status == SolveStatus::Optimal &&
           out.objective >= -1e-9 * std::max(1.0, std::fabs(target));
  };

  if (feasible_mean_ge(r_hi)) {
    r.upper = r_hi;
  } else {
    double lo = r_lo, hi = r_hi;  // feasible at lo, infeasible at hi
    for (int it = 0; it < opts.avg_max_iters && hi - lo > tol; ++it) {
      double mid = lo + (hi - lo) / 2;
      if (feasible_mean_ge(mid))
        lo = mid;
      else
        hi = mid;
    }
    r.upper = lo;
  }
  if (feasible_mean_le(r_lo)) {
    r.lower = r_lo;
  } else {
    double lo = r_lo, hi = r_hi;  // infeasible at lo, feasible at hi
    for (int it = 0; it < opts.avg_max_iters && hi - lo > tol; ++it) {
      double mid = lo + (hi - lo) / 2;
      if (feasible_mean_le(mid))
        hi = mid;
      else
        lo = mid;
    }
    r.lower = hi;
  }
  r.status = p.early_stopped ? BoundStatus::EarlyStopLoose : BoundStatus::Exact;
  return r;
}

ResultRange bound_min_max(const BoundProblem& p, AggKind kind, const BoundOptions& opts) {
  (void)opts;
  ResultRange r;
  r.diagnostics.method = "milp";
  VarMap m = make_vars(p);
  bool feasible = false;
  auto [max_rows, min_rows] = matched_count_range(p, m, r.diagnostics.milp_nodes, feasible);
  if (!feasible) {
    r.status = BoundStatus::InfeasibleConstraints;
    return r;
  }
  if (max_rows == 0) {
    r.status = BoundStatus::NoRows;
    return r;
  }
  bool zero_matched_possible = min_rows == 0;

  std::vector<size_t> inside_vars;
  for (size_t v = 0; v < m.vars.size(); ++v)
    if (p.cells[m.vars[v]].inside_clip) inside_vars.push_back(v);

  // A matched row can exist in cell i iff the windows admit an allocation
  // with X_i >= 1.
  auto reachable = [&](size_t var) {
    LinearRow row;
    row.coeffs.assign(m.vars.size(), 0.0);
    row.coeffs[var] = 1.0;
    row.rel = Relation2::GE;
    row.rhs = 1.0;
    return windows_feasible(p, m, {row}, r.diagnostics.milp_nodes);
  };

  // Largest reachable value end (MAX upper / MIN lower by mirroring).
  auto extreme = [&](bool want_max) -> std::optional<double> {
    std::vector<size_t> order = inside_vars;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      double va = want_max ? p.obj_upper[m.vars[a]] : -p.obj_lower[m.vars[a]];
      double vb = want_max ? p.obj_upper[m.vars[b]] : -p.obj_lower[m.vars[b]];
      return va > vb;
    });
    for (size_t v : order)
      if (reachable(v)) return want_max ? p.obj_upper[m.vars[v]] : p.obj_lower[m.vars[v]];
    return std::nullopt;
  };

  // Guaranteed end: the adversary minimizes the MAX (or maximizes the MIN);
  // scan thresholds over the reconciled cell bounds.
  auto guaranteed = [&](bool for_max) -> std::optional<double> {
    if (zero_matched_possible) return std::nullopt;
    std::vector<double> thresholds;
    for (size_t v : inside_vars)
      thresholds.push_back(for_max ? p.obj_lower[m.vars[v]] : p.obj_upper[m.vars[v]]);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    if (for_max)
      ;  // ascending: the adversary wants the smallest achievable maximum
    else
      std::reverse(thresholds.begin(), thresholds.end());
    for (double t : thresholds) {
      // Restrict matched rows to cells the adversary may still use.
      std::vector<LinearRow> extra;
      LinearRow row;
      row.coeffs.assign(m.vars.size(), 0.0);
      bool any = false;
      for (size_t v : inside_vars) {
        size_t i = m.vars[v];
        bool excluded = for_max ? p.obj_lower[i] > t : p.obj_upper[i] < t;
        if (excluded) {
          row.coeffs[v] = 1.0;
          any = true;
        }
      }
      if (any) {
        row.rel = Relation2::LE;
        row.rhs = 0.0;
        extra.push_back(std::move(row));
      }
      if (windows_feasible(p, m, extra, r.diagnostics.milp_nodes)) return t;
    }
    return std::nullopt;
  };

  std::optional<double> hi_end, lo_end;
  if (kind == AggKind::Max) {
    hi_end = extreme(true);
    lo_end = guaranteed(true);
  } else {
    lo_end = extreme(false);
    hi_end = guaranteed(false);
  }
  r.upper_defined = hi_end.has_value();
  r.lower_defined = lo_end.has_value();
  if (hi_end) r.upper = *hi_end;
  if (lo_end) r.lower = *lo_end;
  if (!hi_end && !lo_end) {
    r.status = BoundStatus::NoRows;
    return r;
  }
  r.status = p.early_stopped ? BoundStatus::EarlyStopLoose : BoundStatus::Exact;
  return r;
}

namespace {

// Per-constraint split of a disjoint instance against the query region.
struct DisjointPiece {
  bool inside_usable = false;   // rows matching the query can exist
  bool escape_possible = false; // rows can match psi outside the query region
  double value_lo = 0, value_hi = 0;  // feasible matched-value range
  int64_t forced_inside = 0;          // max(0, kl - escape capacity)
  int64_t cap_inside = 0;             // k_u when inside_usable
};

struct DisjointSplit {
  std::vector<DisjointPiece> pieces;
  bool infeasible = false;
  std::string reason;
};

DisjointSplit split_disjoint(const PCSet& set, const std::optional<Predicate>& clip,
                             const std::optional<size_t>& agg_index) {
  const Schema& schema = set.schema();
  DisjointSplit out;
  std::optional<Box> clip_box;
  if (clip) clip_box = resolve_box(schema, *clip);

  for (size_t pc_index = 0; pc_index < set.size(); ++pc_index) {
    const PredicateConstraint& pc = set.at(pc_index);
    DisjointPiece piece;
    if (pc.kappa.ku <= 0) {
      // The window admits no rows anywhere; the piece is inert.
      out.pieces.push_back(piece);
      continue;
    }
    const Box& psi_box = set.psi_boxes()[pc_index];

    // The value box rows must satisfy: psi region plus nu on every attribute.
    Box value_box = psi_box;
    for (size_t i = 0; i < schema.size(); ++i) {
      if (schema.at(i).kind != AttrKind::Numeric) continue;
      auto [l, h] = value_range(schema, pc, i);
      auto* iv = std::get_if<Interval>(&value_box.atoms[i]);
      *iv = Interval::intersect(*iv, Interval::closed(l, h));
    }

    bool psi_possible = !box_empty(schema, value_box);
    Box inside_box = value_box;
    bool inside_ok = psi_possible;
    if (clip_box && inside_ok) {
      for (size_t i = 0; i < schema.size() && inside_ok; ++i) {
        if (auto* iv = std::get_if<Interval>(&inside_box.atoms[i])) {
          *iv = Interval::intersect(*iv, clip_box->interval(i));
          if (iv->empty()) inside_ok = false;
        } else {
          auto& cs = std::get<CatSet>(inside_box.atoms[i]);
          cs = CatSet::intersect(cs, clip_box->catset(i));
          if (cs.values.empty()) inside_ok = false;
        }
      }
    }
    piece.inside_usable = inside_ok;
    piece.escape_possible =
        psi_possible && clip_box && !box_subset(schema, value_box, *clip_box);
    if (!clip_box) piece.escape_possible = false;

    if (inside_ok && agg_index) {
      const Interval& iv = inside_box.interval(*agg_index);
      piece.value_lo = iv.lo;
      piece.value_hi = iv.hi;
    } else if (inside_ok) {
      piece.value_lo = piece.value_hi = 1.0;  // COUNT weight
    }

    int64_t escape_cap = piece.escape_possible ? pc.kappa.ku : 0;
    piece.cap_inside = inside_ok ? pc.kappa.ku : 0;
    piece.forced_inside = std::max<int64_t>(0, pc.kappa.kl - escape_cap);
    if (piece.forced_inside > piece.cap_inside) {
      out.infeasible = true;
      out.reason = "constraint " + pc.id + " requires rows but admits no feasible cell";
    }
    out.pieces.push_back(piece);
  }
  return out;
}

ResultRange greedy_sum_count(const PCSet& set, const DisjointSplit& split, AggKind kind) {
  ResultRange r;
  r.diagnostics.method = "greedy";
  if (split.infeasible) {
    r.status = BoundStatus::InfeasibleConstraints;
    return r;
  }
  size_t n = set.size();
  for (size_t j = 0; j < n; ++j) {
    const DisjointPiece& piece = split.pieces[j];
    if (!piece.inside_usable) continue;
    double u = kind == AggKind::Count ? 1.0 : piece.value_hi;
    double l = kind == AggKind::Count ? 1.0 : piece.value_lo;
    int64_t x_up = u >= 0 ? piece.cap_inside : piece.forced_inside;
    int64_t x_dn = l >= 0 ? piece.forced_inside : piece.cap_inside;
    if (x_up > 0) {
      r.upper += u * static_cast<double>(x_up);
      Cell c;
      c.in_mask = 1ULL << j;
      r.witness_upper.push_back({c.signature(n), true, x_up, u});
    }
    if (x_dn > 0) {
      r.lower += l * static_cast<double>(x_dn);
      Cell c;
      c.in_mask = 1ULL << j;
      r.witness_lower.push_back({c.signature(n), true, x_dn, l});
    }
  }
  r.status = BoundStatus::Exact;
  return r;
}

ResultRange greedy_min_max(const PCSet& set, const DisjointSplit& split, AggKind kind) {
  ResultRange r;
  r.diagnostics.method = "greedy";
  if (split.infeasible) {
    r.status = BoundStatus::InfeasibleConstraints;
    return r;
  }
  std::optional<double> extreme, guarantee;
  for (size_t j = 0; j < set.size(); ++j) {
    const DisjointPiece& piece = split.pieces[j];
    if (!piece.inside_usable) continue;
    double far_end = kind == AggKind::Max ? piece.value_hi : piece.value_lo;
    if (!extreme)
      extreme = far_end;
    else
      extreme = kind == AggKind::Max ? std::max(*extreme, far_end) : std::min(*extreme, far_end);
    if (piece.forced_inside >= 1) {
      double near_end = kind == AggKind::Max ? piece.value_lo : piece.value_hi;
      if (!guarantee)
        guarantee = near_end;
      else
        guarantee =
            kind == AggKind::Max ? std::max(*guarantee, near_end) : std::min(*guarantee, near_end);
    }
  }
  if (!extreme) {
    r.status = BoundStatus::NoRows;
    return r;
  }
  if (kind == AggKind::Max) {
    r.upper = *extreme;
    r.lower_defined = guarantee.has_value();
    if (guarantee) r.lower = *guarantee;
  } else {
    r.lower = *extreme;
    r.upper_defined = guarantee.has_value();
    if (guarantee) r.upper = *guarantee;
  }
  r.status = BoundStatus::Exact;
  return r;
}

ResultRange greedy_avg(const PCSet& set, const DisjointSplit& split,
                       const BoundOptions& opts) {
  ResultRange r;
  r.diagnostics.method = "greedy";
  if (split.infeasible) {
    r.status = BoundStatus::InfeasibleConstraints;
    return r;
  }
  double r_lo = kInf, r_hi = -kInf;
  int64_t forced_total = 0;
  bool any = false;
  for (const auto& piece : split.pieces) {
    if (!piece.inside_usable) continue;
    any = true;
    forced_total += piece.forced_inside;
    r_lo = std::min(r_lo, piece.value_lo);
    r_hi = std::max(r_hi, piece.value_hi);
  }
  if (!any) {
    r.status = BoundStatus::NoRows;
    return r;
  }
  double width = std::max(r_hi - r_lo, 0.0);
  double tol = std::max(opts.avg_tol_rel * width, 1e-12);

  // Separable probe: with disjoint windows each constraint optimizes alone.
  auto probe = [&](double target, bool upper_side) {
    double total = 0;
    double best_single = -kInf;
    for (const auto& piece : split.pieces) {
      if (!piece.inside_usable) continue;
      double gain = upper_side ? piece.value_hi - target : target - piece.value_lo;
      int64_t x = gain >= 0 ? piece.cap_inside : piece.forced_inside;
      total += gain * static_cast<double>(x);
      best_single = std::max(best_single, gain);
    }
    if (forced_total >= 1) return total >= -1e-9 * std::max(1.0, std::fabs(target));
    return total > 1e-9 || best_single >= -1e-9 * std::max(1.0, std::fabs(target));
  };

  if (probe(r_hi, true)) {
    r.upper = r_hi;
  } else {
    double lo = r_lo, hi = r_hi;
    for (int it = 0; it < opts.avg_max_iters && hi - lo > tol; ++it) {
      double mid = lo + (hi - lo) / 2;
      if (probe(mid, true))
        lo = mid;
      else
        hi = mid;
    }
    r.upper = lo;
  }
  if (probe(r_lo, false)) {
    r.lower = r_lo;
  } else {
    double lo = r_lo, hi = r_hi;
    for (int it = 0; it < opts.avg_max_iters && hi - lo > tol; ++it) {
      double mid = lo + (hi - lo) / 2;
      if (probe(mid, false))
        hi = mid;
      else
        lo = mid;
    }
    r.lower = hi;
  }
  r.status = BoundStatus::Exact;
  return r;
}


std::optional<size_t> agg_index_of(const QuerySpec& q, const Schema& schema) {
  if (q.aggregate == AggKind::Count && q.target == "*") return std::nullopt;
  return schema.index_of(q.target);
}

ResultRange drive_aggregate(const QuerySpec& q, const PCSet& set,
                            const std::optional<Predicate>& clip, const BoundOptions& opts) {
  const bool disjoint = set.predicates_pairwise_disjoint();
  std::optional<size_t> agg_idx = agg_index_of(q, set.schema());

  if (disjoint && !opts.early_stop_depth) {
    DisjointSplit split = split_disjoint(set, clip, agg_idx);
    switch (q.aggregate) {
      case AggKind::Sum: return greedy_sum_count(set, split, AggKind::Sum);
      case AggKind::Count: return greedy_sum_count(set, split, AggKind::Count);
      case AggKind::Avg: return greedy_avg(set, split, opts);
      case AggKind::Min:
      case AggKind::Max: return greedy_min_max(set, split, q.aggregate);
    }
  }

  DecomposeOptions dopts;
  dopts.clip = clip;
  dopts.early_stop_depth = opts.early_stop_depth;
  dopts.parallelism = opts.parallelism;
  DecompositionResult inside = decompose(set, dopts);
  DecompositionResult outside;
  if (clip) {
    DecomposeOptions oopts = dopts;
    oopts.outside = true;
    outside = decompose(set, oopts);
  }
  std::optional<std::string> agg_attr;
  if (agg_idx) agg_attr = set.schema().at(*agg_idx).name;
  BoundProblem problem = build_problem(inside, outside, set, agg_attr, clip);

  ResultRange r;
  switch (q.aggregate) {
    case AggKind::Sum: {
      SumOutcome up = max_sum(problem, opts);
      if (up.status != SolveStatus::Optimal) {
        r.status = BoundStatus::InfeasibleConstraints;
        break;
      }
      SumOutcome dn = min_sum(problem, opts);
      r.upper = up.value;
      r.lower = dn.value;
      r.witness_upper = allocation_witness(problem, up.allocation, true);
      r.witness_lower = allocation_witness(problem, dn.allocation, false);
      r.diagnostics.milp_nodes = up.nodes + dn.nodes;
      r.status = problem.early_stopped ? BoundStatus::EarlyStopLoose : BoundStatus::Exact;
      break;
    }
    case AggKind::Count: r = bound_count(problem, opts); break;
    case AggKind::Avg: r = bound_avg(problem, opts); break;
    case AggKind::Min:
    case AggKind::Max: r = bound_min_max(problem, q.aggregate, opts); break;
  }
  r.diagnostics.method = "milp";
  r.diagnostics.decomposition = inside.stats;
  r.diagnostics.decomposition.sat_calls += outside.stats.sat_calls;
  r.diagnostics.cells_inside = inside.cells.size();
  r.diagnostics.cells_outside = outside.cells.size();
  return r;
}

struct ExistingAgg {
  int64_t count = 0;
  double sum = 0;
  double min = kInf;
  double max = -kInf;
};

ExistingAgg existing_aggregate(const QuerySpec& q, const Relation& existing,
                               const std::optional<size_t>& agg_idx) {
  ExistingAgg out;
  const Schema& schema = *existing.schema;
  for (const Tuple& t : existing.rows) {
    if (!evaluate(q.predicate, schema, t)) continue;
    ++out.count;
    if (agg_idx) {
      double v = std::get<double>(t.values[*agg_idx]);
      out.sum += v;
      out.min = std::min(out.min, v);
      out.max = std::max(out.max, v);
    }
  }
  return out;
}

ResultRange combine_with_existing(const QuerySpec& q, ResultRange missing,
                                  const ExistingAgg& exist) {
  if (missing.status == BoundStatus::NotClosed ||
      missing.status == BoundStatus::InfeasibleConstraints)
    return missing;
  switch (q.aggregate) {
    case AggKind::Sum:
      missing.lower += exist.sum;
      missing.upper += exist.sum;
      break;
    case AggKind::Count:
      missing.lower += static_cast<double>(exist.count);
      missing.upper += static_cast<double>(exist.count);
      break;
    case AggKind::Max: {
      bool no_missing = missing.status == BoundStatus::NoRows;
      if (exist.count > 0) {
        double lo = no_missing || !missing.lower_defined ? exist.max
                                                         : std::max(missing.lower, exist.max);
        double hi = no_missing ? exist.max : std::max(missing.upper, exist.max);
        missing.lower = lo;
        missing.upper = hi;
        missing.lower_defined = missing.upper_defined = true;
        if (no_missing) missing.status = BoundStatus::Exact;
      }
      break;
    }
    case AggKind::Min: {
      bool no_missing = missing.status == BoundStatus::NoRows;
      if (exist.count > 0) {
        double hi = no_missing || !missing.upper_defined ? exist.min
                                                         : std::min(missing.upper, exist.min);
        double lo = no_missing ? exist.min : std::min(missing.lower, exist.min);
        missing.lower = lo;
        missing.upper = hi;
        missing.lower_defined = missing.upper_defined = true;
        if (no_missing) missing.status = BoundStatus::Exact;
      }
      break;
    }
    case AggKind::Avg:
      break;  // handled by the caller via the SUM/COUNT interval quotient
  }
  return missing;
}

// AVG with existing rows: interval quotient over the combined SUM and COUNT
// ranges; extrema sit at corners.
ResultRange combine_avg(const QuerySpec& q, const PCSet& set,
                        const std::optional<Predicate>& clip, const ExistingAgg& exist,
                        ResultRange avg_missing, const BoundOptions& opts) {
  if (exist.count == 0) return avg_missing;
  if (avg_missing.status == BoundStatus::NotClosed ||
      avg_missing.status == BoundStatus::InfeasibleConstraints)
    return avg_missing;

  QuerySpec sum_q = q;
  sum_q.aggregate = AggKind::Sum;
  QuerySpec cnt_q = q;
  cnt_q.aggregate = AggKind::Count;
  cnt_q.target = "*";
  ResultRange sum_r = drive_aggregate(sum_q, set, clip, opts);
  ResultRange cnt_r = drive_aggregate(cnt_q, set, clip, opts);

  double s_lo = sum_r.lower + exist.sum, s_hi = sum_r.upper + exist.sum;
  double c_lo = cnt_r.lower + static_cast<double>(exist.count);
  double c_hi = cnt_r.upper + static_cast<double>(exist.count);
  c_lo = std::max(c_lo, 1.0);

  double lo = kInf, hi = -kInf;
  for (double s : {s_lo, s_hi}) {
    for (double c : {c_lo, c_hi}) {
      lo = std::min(lo, s / c);
      hi = std::max(hi, s / c);
    }
  }
  ResultRange r;
  r.lower = lo;
  r.upper = hi;
  r.status = avg_missing.status == BoundStatus::NoRows
                 ? BoundStatus::Exact
                 : avg_missing.status;
  r.diagnostics = avg_missing.diagnostics;
  r.diagnostics.method += "+interval-quotient";
  return r;
}

}  // namespace

ResultRange greedy_disjoint(const PCSet& set, const QuerySpec& query,
                            const BoundOptions& opts) {
  if (!set.predicates_pairwise_disjoint())
    throw ConfigError("NOT_DISJOINT: constraint predicates overlap");
  std::optional<Predicate> clip;
  if (!query.predicate.is_true()) clip = query.predicate;
  std::optional<size_t> agg_idx = agg_index_of(query, set.schema());
  DisjointSplit split = split_disjoint(set, clip, agg_idx);
  switch (query.aggregate) {
    case AggKind::Sum: return greedy_sum_count(set, split, AggKind::Sum);
    case AggKind::Count: return greedy_sum_count(set, split, AggKind::Count);
    case AggKind::Avg: return greedy_avg(set, split, opts);
    case AggKind::Min:
    case AggKind::Max: return greedy_min_max(set, split, query.aggregate);
  }
  return {};
}

QueryResult bound_query(const QuerySpec& query, const PCSet& set, const Relation* existing,
                        const BoundOptions& opts) {
  const Schema& schema = set.schema();
  QueryResult result;

  if (query.group_by) {
    size_t gidx = schema.index_of(*query.group_by);
    const auto& dom = schema.at(gidx);
    if (dom.kind != AttrKind::Categorical)
      throw SchemaError("GROUP BY attribute must be categorical: " + *query.group_by);
    for (const auto& value : dom.values) {
      QuerySpec sub = query;
      sub.group_by.reset();
      Predicate eq;
      eq.with(*query.group_by, CatSet::of({value}));
      sub.predicate = conjoin(sub.predicate, eq);
      QueryResult sr = bound_query(sub, set, existing, opts);
      result.groups.emplace_back(value, std::move(*sr.single));
    }
    return result;
  }

  std::optional<size_t> agg_idx = agg_index_of(query, schema);
  ExistingAgg exist;
  if (existing) exist = existing_aggregate(query, *existing, agg_idx);

  // A contradictory predicate matches nothing: the answer is the degenerate
  // range over whatever the query semantics give on zero rows.
  if (query.predicate.empty_marked) {
    ResultRange r;
    r.diagnostics.method = "existing-only";
    if (query.aggregate == AggKind::Sum || query.aggregate == AggKind::Count) {
      r.lower = r.upper = 0;
      r.status = BoundStatus::Exact;
    } else {
      r.status = BoundStatus::NoRows;
    }
    result.single = r;
    return result;
  }

  std::optional<Predicate> clip;
  if (!query.predicate.is_true()) clip = query.predicate;

  ClosureResult closure;
  closure.closed = true;
  if (!opts.assume_closed) closure = check_closure(set, clip);
  if (!closure.closed) {
    ResultRange r;
    r.status = BoundStatus::NotClosed;
    r.diagnostics.closure_counterexample = closure.counterexample;
    result.single = std::move(r);
    return result;
  }

  ResultRange missing = drive_aggregate(query, set, clip, opts);
  ResultRange combined;
  if (query.aggregate == AggKind::Avg && existing)
    combined = combine_avg(query, set, clip, exist, std::move(missing), opts);
  else if (existing)
    combined = combine_with_existing(query, std::move(missing), exist);
  else
    combined = std::move(missing);
  result.single = std::move(combined);
  return result;
}

Json result_to_json(const ResultRange& r, const PCSet& set) {
  Json j;
  j["status"] = bound_status_name(r.status);
  bool failed = r.status == BoundStatus::NotClosed ||
                r.status == BoundStatus::InfeasibleConstraints ||
                r.status == BoundStatus::NoRows;
  j["lower"] = failed || !r.lower_defined ? Json(nullptr) : Json(r.lower);
  j["upper"] = failed || !r.upper_defined ? Json(nullptr) : Json(r.upper);
  auto witness_json = [&](const std::vector<WitnessEntry>& w) {
    Json arr = Json::array();
    for (const auto& e : w) {
      Json je;
      je["cell"] = e.signature;
      je["count"] = e.count;
      je["value"] = e.value;
      if (!e.inside) je["outside_query"] = true;
      arr.push_back(std::move(je));
    }
    return arr;
  };
  j["witness_upper"] = witness_json(r.witness_upper);
  j["witness_lower"] = witness_json(r.witness_lower);
  Json diag;
  diag["method"] = r.diagnostics.method;
  diag["sat_calls"] = r.diagnostics.decomposition.sat_calls;
  diag["pruned_subtrees"] = r.diagnostics.decomposition.pruned_subtrees;
  diag["rewriting_hits"] = r.diagnostics.decomposition.rewriting_hits;
  diag["early_stopped"] = r.diagnostics.decomposition.early_stopped;
  diag["milp_nodes"] = r.diagnostics.milp_nodes;
  diag["cells_inside"] = r.diagnostics.cells_inside;
  diag["cells_outside"] = r.diagnostics.cells_outside;
  if (r.diagnostics.closure_counterexample)
    diag["closure_counterexample"] =
        tuple_to_json(set.schema(), *r.diagnostics.closure_counterexample);
  j["diagnostics"] = std::move(diag);
  return j;
}

Json query_result_to_json(const QueryResult& r, const PCSet& set) {
  if (r.single) return result_to_json(*r.single, set);
  Json groups = Json::object();
  for (const auto& [key, range] : r.groups) groups[key] = result_to_json(range, set);
  return Json{{"groups", std::move(groups)}};
}

}  // namespace rangebound

