// SPDX-License-Identifier: Apache-2.0
//
// Independent reference bounds: exhaustive enumeration (dynamic programming
// over per-constraint capacity states) of all multisets of grid-representative
// tuples that satisfy a constraint set, evaluating the aggregate directly.
// Deliberately shares no code with the engine's decomposition/MILP path.
#pragma once

#include <optional>

#include "pc.hpp"
#include "query.hpp"

namespace rangebound::oracle {

struct OracleRange {
  bool feasible = false;           // some legal relation exists
  double lower = 0, upper = 0;     // aggregate range over legal relations
  bool lower_defined = false, upper_defined = false;
  bool no_rows_possible = false;   // a legal relation with zero matched rows exists
  bool rows_possible = false;      // a legal relation with >= 1 matched row exists
};

// Bounds for SUM/COUNT/AVG/MIN/MAX of `query` over all relations built from
// endpoint-grid tuples that satisfy `set`. Practical for ~4 constraints with
// k_u <= 6.
OracleRange brute_force_range(const PCSet& set, const QuerySpec& query);

}  // namespace rangebound::oracle
