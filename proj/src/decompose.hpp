// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pc.hpp"

namespace rangebound {

// One region of the decomposition: the conjunction of the covering (IN)
// predicates and the negations of all others, clipped by the query region.
// Value bounds are the most restrictive among the covering constraints,
// defined for numeric attributes.
struct Cell {
  uint64_t in_mask = 0;
  std::vector<double> value_lower;
  std::vector<double> value_upper;
  bool forced_zero = false;   // no legal row can live here; allocation pinned to 0
  bool verified = true;       // false for cells admitted by early stopping
  bool inside_clip = true;    // false for cells enumerated outside the query region
  std::optional<Tuple> witness;

  bool covers(size_t pc_index) const { return (in_mask >> pc_index) & 1ULL; }
  std::string signature(size_t n) const {
    std::string s(n, '-');
    for (size_t j = 0; j < n; ++j)
      if (covers(j)) s[j] = '+';
    return s;
  }
};

struct DecompositionStats {
  long long sat_calls = 0;
  long long pruned_subtrees = 0;
  long long rewriting_hits = 0;
  bool early_stopped = false;
  std::optional<int> depth_limit;
  bool disjoint_fast_path = false;
};

struct DecompositionResult {
  std::vector<Cell> cells;
  DecompositionStats stats;
};

struct DecomposeOptions {
  std::optional<Predicate> clip;        // query predicate pushdown
  std::optional<int> early_stop_depth;  // verify prefixes up to this length only
  int parallelism = 1;
  bool outside = false;  // enumerate the cells outside the clip instead of inside
};

// Depth-first sign assignment over the constraints in list order. An
// unsatisfiable prefix prunes its subtree; when a satisfiable prefix X gains
// an unsatisfiable IN-extension, the OUT-extension is admitted without a
// solver call. Cells covered by no constraint are excluded. Pairwise-disjoint
// predicates skip the search entirely. Output is sorted by signature and
// independent of parallelism.
DecompositionResult decompose(const PCSet& set, const DecomposeOptions& opts = {});

// Fill value bounds and the forced-zero flag of a cell produced by
// decompose(). Exposed separately so callers can reconcile cells they build
// by hand.
void reconcile(Cell& cell, const PCSet& set, const DecomposeOptions& opts,
               DecompositionStats* stats = nullptr);

}  // namespace rangebound
