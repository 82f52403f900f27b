// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "decompose.hpp"
#include "optkernel.hpp"
#include "query.hpp"

namespace rangebound {

enum class BoundStatus {
  Exact,
  EarlyStopLoose,
  NotClosed,
  InfeasibleConstraints,
  NoRows,  // MIN/MAX/AVG when no row can match the query
};

const char* bound_status_name(BoundStatus s);

struct WitnessEntry {
  std::string signature;  // cell signature over the constraint set
  bool inside = true;     // false: rows parked outside the query region
  int64_t count = 0;
  double value = 0;  // aggregate-attribute value the rows take
};

struct BoundDiagnostics {
  std::string method;  // "milp", "greedy", "existing-only"
  DecompositionStats decomposition;
  long long milp_nodes = 0;
  size_t cells_inside = 0;
  size_t cells_outside = 0;
  std::optional<Tuple> closure_counterexample;
};

struct ResultRange {
  double lower = 0;
  double upper = 0;
  // MIN/MAX sides can be individually undefined: an extreme exists but no
  // value is guaranteed present (status stays EXACT, the side reads as null).
  bool lower_defined = true;
  bool upper_defined = true;
  BoundStatus status = BoundStatus::Exact;
  std::vector<WitnessEntry> witness_upper;
  std::vector<WitnessEntry> witness_lower;
  BoundDiagnostics diagnostics;
};

// The allocation program built from a decomposition: one integer variable per
// usable cell, one cardinality window per constraint. Cells outside the query
// region participate in the windows with zero objective weight.
struct BoundProblem {
  const PCSet* set = nullptr;
  std::vector<Cell> cells;              // inside cells first, then outside
  std::vector<double> obj_upper;        // per-cell max feasible value (0 outside)
  std::vector<double> obj_lower;        // per-cell min feasible value (0 outside)
  std::vector<bool> usable;             // not forced to zero
  std::vector<int64_t> var_cap;         // min k_u over covering constraints
  std::optional<size_t> agg_index;      // nullopt for COUNT(*)
  bool infeasible_window = false;       // a positive k_l window has no cells
  bool early_stopped = false;
  std::string infeasible_reason;
};

struct BoundOptions {
  std::optional<int> early_stop_depth;
  // Skip the per-query closure check; set when the caller has already proved
  // closure over the whole domain (which implies closure over every region).
  bool assume_closed = false;
  int parallelism = 1;
  double avg_tol_rel = 1e-6;  // of the value range width
  int avg_max_iters = 64;
  // Witnesses are canonicalized to the lexicographically smallest optimal
  // allocation when the problem has at most this many cells.
  size_t canonical_witness_limit = 64;
};

BoundProblem build_problem(const DecompositionResult& inside,
                           const DecompositionResult& outside, const PCSet& set,
                           const std::optional<std::string>& agg_attr,
                           const std::optional<Predicate>& clip);

struct SumOutcome {
  SolveStatus status = SolveStatus::Infeasible;
  double value = 0;
  std::vector<int64_t> allocation;  // aligned with problem.cells
  long long nodes = 0;
};

SumOutcome max_sum(const BoundProblem& problem, const BoundOptions& opts = {});
SumOutcome min_sum(const BoundProblem& problem, const BoundOptions& opts = {});
ResultRange bound_count(const BoundProblem& problem, const BoundOptions& opts = {});
ResultRange bound_avg(const BoundProblem& problem, const BoundOptions& opts = {});
ResultRange bound_min_max(const BoundProblem& problem, AggKind kind,
                          const BoundOptions& opts = {});

// Fast path for pairwise-disjoint predicates; NOT_DISJOINT is reported by
// throwing ConfigError. Equals the MILP path on every disjoint instance.
ResultRange greedy_disjoint(const PCSet& set, const QuerySpec& query,
                            const BoundOptions& opts = {});

struct QueryResult {
  std::optional<ResultRange> single;
  std::vector<std::pair<std::string, ResultRange>> groups;  // group-by results
};

// Full pipeline: closure check, decomposition with query pushdown, aggregate
// driver, combination with existing rows, GROUP BY expansion.
QueryResult bound_query(const QuerySpec& query, const PCSet& set,
                        const Relation* existing = nullptr, const BoundOptions& opts = {});

Json result_to_json(const ResultRange& r, const PCSet& set);
Json query_result_to_json(const QueryResult& r, const PCSet& set);

}  // namespace rangebound
