// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "schema.hpp"

namespace rangebound {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Numeric interval with independently open/closed endpoints. Endpoints may be
// +-infinity, in which case the corresponding side is treated as open.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool lo_open = false;
  bool hi_open = false;

  static Interval all() { return Interval{}; }
  static Interval closed(double l, double h) { return Interval{l, h, false, false}; }
  static Interval point(double v) { return Interval{v, v, false, false}; }

  bool empty() const {
    if (lo > hi) return true;
    if (lo == hi && (lo_open || hi_open)) return true;
    return false;
  }

  bool contains(double v) const {
    if (v < lo || v > hi) return false;
    if (v == lo && lo_open) return false;
    if (v == hi && hi_open) return false;
    return true;
  }

  // Set intersection; the result may be empty.
  static Interval intersect(const Interval& a, const Interval& b) {
    Interval r;
    if (a.lo > b.lo) {
      r.lo = a.lo;
      r.lo_open = a.lo_open;
    } else if (b.lo > a.lo) {
      r.lo = b.lo;
      r.lo_open = b.lo_open;
    } else {
      r.lo = a.lo;
      r.lo_open = a.lo_open || b.lo_open;
    }
    if (a.hi < b.hi) {
      r.hi = a.hi;
      r.hi_open = a.hi_open;
    } else if (b.hi < a.hi) {
      r.hi = b.hi;
      r.hi_open = b.hi_open;
    } else {
      r.hi = a.hi;
      r.hi_open = a.hi_open || b.hi_open;
    }
    return r;
  }

  bool operator==(const Interval& o) const {
    return lo == o.lo && hi == o.hi && lo_open == o.lo_open && hi_open == o.hi_open;
  }
};

// Categorical membership subset; values sorted and unique.
struct CatSet {
  std::vector<std::string> values;

  bool contains(const std::string& v) const {
    return std::binary_search(values.begin(), values.end(), v);
  }

  static CatSet of(std::vector<std::string> vals) {
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return CatSet{std::move(vals)};
  }

  static CatSet intersect(const CatSet& a, const CatSet& b) {
    CatSet r;
    std::set_intersection(a.values.begin(), a.values.end(), b.values.begin(),
                          b.values.end(), std::back_inserter(r.values));
    return r;
  }

  bool operator==(const CatSet& o) const { return values == o.values; }
};

using Atom = std::variant<Interval, CatSet>;

// Conjunction of per-attribute atoms. Attributes absent from the map are
// unconstrained; the empty map is TRUE. `empty_marked` is the explicit EMPTY
// predicate produced by contradictory conjunctions; it satisfies no tuple but
// round-trips through serialization.
struct Predicate {
  std::map<std::string, Atom> atoms;
  bool empty_marked = false;

  bool is_true() const { return !empty_marked && atoms.empty(); }

  static Predicate make_true() { return Predicate{}; }
  static Predicate make_empty() { return Predicate{{}, true}; }

  Predicate& with(const std::string& attr, Atom a) {
    atoms[attr] = std::move(a);
    return *this;
  }

  bool operator==(const Predicate& o) const {
    return empty_marked == o.empty_marked && atoms == o.atoms;
  }
};

// True iff the tuple satisfies every atom. Attributes referenced by the
// predicate must exist in the schema.
bool evaluate(const Predicate& p, const Schema& schema, const Tuple& t);

// Per-attribute intersection of atoms. A void intersection on any attribute
// yields the EMPTY-marked predicate.
Predicate conjoin(const Predicate& p, const Predicate& q);

// Positives and negatives of predicates plus an optional clip region; the
// region `AND(positives) AND clip AND NOT(each negative)`.
struct SignedConjunction {
  std::vector<Predicate> positives;
  std::vector<Predicate> negatives;
  std::optional<Predicate> clip;
};

}  // namespace rangebound
