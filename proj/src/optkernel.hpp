// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace rangebound {

enum class SolveStatus { Optimal, Infeasible, Unbounded };

enum class Relation2 : char { LE = '<', GE = '>', EQ = '=' };

struct LinearRow {
  std::vector<double> coeffs;
  Relation2 rel = Relation2::LE;
  double rhs = 0.0;
};

// max/min c'x subject to rows and per-variable bounds. Lower bounds must be
// finite; upper bounds may be +infinity.
struct LinearProgram {
  bool maximize = true;
  std::vector<double> objective;
  std::vector<LinearRow> rows;
  std::vector<double> lower;  // finite
  std::vector<double> upper;  // may be +inf

  size_t num_vars() const { return objective.size(); }
};

struct MilpProgram {
  LinearProgram lp;
  std::vector<bool> integral;  // per variable
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  long long nodes = 0;  // branch-and-bound nodes (1 for pure LPs)
};

// Dense two-phase simplex. Dantzig pricing with a Bland's-rule fallback for
// anti-cycling; pivot tolerance 1e-9. Optimal assignments satisfy every row
// within 1e-7 absolute.
SolveOutcome solve_lp(const LinearProgram& lp);

// Branch and bound on the LP relaxation: most-fractional branching,
// depth-first, pruning against the incumbent. A value within 1e-6 of an
// integer counts as integral.
SolveOutcome solve_milp(const MilpProgram& mp);

}  // namespace rangebound
