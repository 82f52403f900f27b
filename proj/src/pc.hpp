// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "satisfy.hpp"

namespace rangebound {

// Cardinality window (k_l, k_u) on the number of rows matching a predicate.
struct FrequencyConstraint {
  int64_t kl = 0;
  int64_t ku = 0;
};

// Per-attribute closed value ranges; attributes absent from the map default
// to their full domain. Only numeric attributes carry value ranges.
struct ValueConstraint {
  std::map<std::string, std::pair<double, double>> ranges;
};

// The triple (psi, nu, kappa): rows matching psi have values inside nu and
// number between kappa.kl and kappa.ku.
struct PredicateConstraint {
  std::string id;
  Predicate psi;
  ValueConstraint nu;
  FrequencyConstraint kappa;
};

class PCSet {
 public:
  PCSet() = default;
  PCSet(SchemaPtr schema, std::vector<PredicateConstraint> constraints);

  const Schema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  const std::vector<PredicateConstraint>& constraints() const { return constraints_; }
  size_t size() const { return constraints_.size(); }
  const PredicateConstraint& at(size_t i) const { return constraints_[i]; }

  // Predicates resolved against the schema; computed once at construction.
  const std::vector<Box>& psi_boxes() const { return psi_boxes_; }
  bool predicates_pairwise_disjoint() const { return pairwise_disjoint_; }

 private:
  SchemaPtr schema_;
  std::vector<PredicateConstraint> constraints_;
  std::vector<Box> psi_boxes_;
  bool pairwise_disjoint_ = true;
};

// Reconciled closed value interval of one PC on one attribute (nu range or
// domain default).
std::pair<double, double> value_range(const Schema& schema, const PredicateConstraint& pc,
                                      size_t attr_index);

bool nu_satisfied(const Schema& schema, const ValueConstraint& nu, const Tuple& t);

// R |= pc : every row matching psi satisfies nu, and the match count lies in
// the kappa window.
bool satisfies(const Relation& r, const PredicateConstraint& pc);

bool satisfies_set(const Relation& r, const PCSet& set);

struct ClosureResult {
  bool closed = false;
  std::optional<Tuple> counterexample;
};

// Closure over the (optionally query-restricted) domain: every domain tuple
// in the region must satisfy at least one psi. Decided exactly; when not
// closed, a witness tuple from the endpoint grid is returned.
ClosureResult check_closure(const PCSet& set, const std::optional<Predicate>& query_region);

// Direct product over a concatenated schema with disjoint attribute names:
// (psi_a AND psi_b, [nu_a nu_b], (kl_a*kl_b, ku_a*ku_b)).
std::pair<SchemaPtr, PredicateConstraint> direct_product(const Schema& sa,
                                                         const PredicateConstraint& a,
                                                         const Schema& sb,
                                                         const PredicateConstraint& b);

}  // namespace rangebound
