// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "predicate.hpp"

namespace rangebound {

// A predicate resolved against a schema: one atom slot per attribute, with
// unconstrained slots defaulted to the attribute domain. Every predicate in
// the supported class denotes one such box.
struct Box {
  std::vector<Atom> atoms;  // aligned with schema attributes

  const Interval& interval(size_t i) const { return std::get<Interval>(atoms[i]); }
  const CatSet& catset(size_t i) const { return std::get<CatSet>(atoms[i]); }
};

// Resolve a predicate to a box over the schema (domain defaults applied).
// EMPTY-marked predicates resolve to an empty box.
Box resolve_box(const Schema& schema, const Predicate& p);

// Intersect `p` into an existing box in place; returns false if the result is
// empty on some attribute.
bool intersect_box(const Schema& schema, Box& box, const Predicate& p);

bool box_empty(const Schema& schema, const Box& box);

// True iff the boxes share at least one point (per-attribute intersection
// nonempty everywhere).
bool boxes_overlap(const Schema& schema, const Box& a, const Box& b);

// True iff `inner` is contained in `outer`.
bool box_subset(const Schema& schema, const Box& inner, const Box& outer);

// Per-attribute witness coordinates for a family of boxes: for numeric
// attributes the sorted endpoint values, each contributing the point itself
// and a representative of the open interval to the next endpoint; for
// categorical attributes the full domain value set. Evaluating any Boolean
// combination of the boxes on this grid is equivalent to evaluating it on the
// whole domain.
std::vector<std::vector<Value>> endpoint_grid(const Schema& schema,
                                              std::span<const Box> boxes);

struct SatStats {
  long long calls = 0;  // number of satisfiability decisions taken
};

// Exact satisfiability for the conjunction `positives AND clip AND NOT each
// negative` over the schema's bounded domain. Decided by intersecting the
// positives into a box and searching the endpoint grid of that box against
// the negative boxes for a surviving cell.
bool is_satisfiable(const SignedConjunction& sc, const Schema& schema);

// Same decision, but returns a witness tuple when satisfiable.
std::optional<Tuple> find_witness(const SignedConjunction& sc, const Schema& schema);

// Low-level form used by the decomposition DFS: positives already intersected
// into `box`, negatives given as resolved boxes.
bool box_satisfiable(const Schema& schema, const Box& box,
                     std::span<const Box> negatives,
                     Tuple* witness_out = nullptr);

}  // namespace rangebound
