// SPDX-License-Identifier: Apache-2.0
#include <set>

#include "doctest.h"
#include "satisfy.hpp"
#include "test_util.hpp"

using namespace rangebound;
using namespace rangebound::testutil;

namespace {

Predicate ival(const std::string& attr, double lo, double hi, bool lo_open = false,
               bool hi_open = false) {
  Predicate p;
  p.with(attr, Interval{lo, hi, lo_open, hi_open});
  return p;
}

// Exhaustive evaluation over all endpoint-grid representative tuples; the
// independent oracle for is_satisfiable.
bool oracle_satisfiable(const SignedConjunction& sc, const Schema& schema) {
  std::vector<Box> boxes;
  for (const auto& p : sc.positives) boxes.push_back(resolve_box(schema, p));
  for (const auto& p : sc.negatives) boxes.push_back(resolve_box(schema, p));
  if (sc.clip) boxes.push_back(resolve_box(schema, *sc.clip));
  auto grid = endpoint_grid(schema, boxes);
  std::vector<size_t> idx(schema.size(), 0);
  for (;;) {
    Tuple t;
    for (size_t i = 0; i < schema.size(); ++i) t.values.push_back(grid[i][idx[i]]);
    bool ok = true;
    for (const auto& p : sc.positives)
      if (!evaluate(p, schema, t)) ok = false;
    if (ok && sc.clip && !evaluate(*sc.clip, schema, t)) ok = false;
    if (ok)
      for (const auto& p : sc.negatives)
        if (evaluate(p, schema, t)) ok = false;
    if (ok) return true;
    size_t i = 0;
    while (i < schema.size() && ++idx[i] == grid[i].size()) idx[i++] = 0;
    if (i == schema.size()) return false;
  }
}

}  // namespace

TEST_CASE("p and not p is unsatisfiable") {
  auto schema = make_schema({num_attr("x", 0, 10)});
  Predicate p = ival("x", 2, 8);
  SignedConjunction sc;
  sc.positives = {p};
  sc.negatives = {p};
  CHECK_FALSE(is_satisfiable(sc, *schema));
}

TEST_CASE("closed covers block, open endpoints leave a gap point") {
  auto schema = make_schema({num_attr("x", 0, 10)});
  SignedConjunction closed;
  closed.positives = {ival("x", 0, 10)};
  closed.negatives = {ival("x", 0, 4), ival("x", 4, 10)};
  CHECK_FALSE(is_satisfiable(closed, *schema));

  SignedConjunction open;
  open.positives = {ival("x", 0, 10)};
  open.negatives = {ival("x", 0, 4, false, true), ival("x", 4, 10, true, false)};
  auto w = find_witness(open, *schema);
  REQUIRE(w.has_value());
  CHECK(std::get<double>(w->values[0]) == doctest::Approx(4.0));
}

TEST_CASE("endpoint grid midpoint construction") {
  auto schema = make_schema({num_attr("x", 0, 3)});
  std::vector<Box> boxes = {resolve_box(*schema, ival("x", 0, 2)),
                            resolve_box(*schema, ival("x", 1, 3))};
  auto grid = endpoint_grid(*schema, boxes);
  std::vector<double> got;
  for (const auto& v : grid[0]) got.push_back(std::get<double>(v));
  CHECK(got == std::vector<double>{0, 0.5, 1, 1.5, 2, 2.5, 3});
}

TEST_CASE("endpoint grid degenerate and empty cases") {
  auto schema = make_schema({num_attr("x", 5, 5)});
  std::vector<Box> one = {resolve_box(*schema, ival("x", 5, 5))};
  auto grid = endpoint_grid(*schema, one);
  REQUIRE(grid[0].size() == 1);
  CHECK(std::get<double>(grid[0][0]) == 5.0);

  auto schema2 = make_schema({num_attr("x", 0, 1)});
  auto grid2 = endpoint_grid(*schema2, {});
  CHECK(grid2[0].size() == 3);  // domain endpoints and midpoint
}

TEST_CASE("categorical negation is complement within the domain") {
  auto schema = make_schema({cat_attr("branch", {"Chicago", "NewYork", "Trenton"})});
  Predicate chicago;
  chicago.with("branch", CatSet::of({"Chicago"}));
  Predicate newyork;
  newyork.with("branch", CatSet::of({"NewYork"}));
  SignedConjunction sc;
  sc.negatives = {chicago, newyork};
  auto w = find_witness(sc, *schema);
  REQUIRE(w.has_value());
  CHECK(std::get<std::string>(w->values[0]) == "Trenton");
}

TEST_CASE("satisfiability agrees with the endpoint-grid oracle") {
  SplitMix64 rng(12345);
  for (int trial = 0; trial < 400; ++trial) {
    size_t nattr = 1 + rng.next_below(4);
    std::vector<AttributeDomain> attrs;
    for (size_t i = 0; i < nattr; ++i) attrs.push_back(num_attr("a" + std::to_string(i), 0, 8));
    auto schema = make_schema(attrs);

    auto rand_box = [&]() {
      Predicate p;
      size_t k = 1 + rng.next_below(nattr);
      for (size_t i = 0; i < k; ++i) {
        size_t a = rng.next_below(nattr);
        double lo = (double)rng.next_below(9);
        double hi = lo + (double)rng.next_below(9 - (int)lo);
        p.with("a" + std::to_string(a), Interval{lo, hi, rng.next_below(2) != 0 && lo < hi,
                                                 rng.next_below(2) != 0 && lo < hi});
      }
      return p;
    };

    SignedConjunction sc;
    size_t npos = rng.next_below(3);
    size_t nneg = rng.next_below(7);
    for (size_t i = 0; i < npos; ++i) sc.positives.push_back(rand_box());
    for (size_t i = 0; i < nneg; ++i) sc.negatives.push_back(rand_box());
    CHECK(is_satisfiable(sc, *schema) == oracle_satisfiable(sc, *schema));
  }
}

TEST_CASE("adding constraints never turns unsatisfiable into satisfiable") {
  SplitMix64 rng(99);
  auto schema = make_schema({num_attr("x", 0, 8), num_attr("y", 0, 8)});
  for (int trial = 0; trial < 100; ++trial) {
    auto rand_box = [&](const char* attr) {
      double lo = (double)rng.next_below(9);
      double hi = lo + (double)rng.next_below(9 - (int)lo);
      Predicate p;
      p.with(attr, Interval::closed(lo, hi));
      return p;
    };
    SignedConjunction sc;
    sc.positives = {rand_box("x")};
    for (size_t i = rng.next_below(4); i > 0; --i)
      sc.negatives.push_back(rand_box(rng.next_below(2) ? "x" : "y"));
    bool before = is_satisfiable(sc, *schema);
    SignedConjunction more = sc;
    more.negatives.push_back(rand_box("y"));
    bool with_negative = is_satisfiable(more, *schema);
    SignedConjunction pos = sc;
    pos.positives.push_back(rand_box("x"));
    bool with_positive = is_satisfiable(pos, *schema);
    if (!before) {
      CHECK_FALSE(with_negative);
      CHECK_FALSE(with_positive);
    }
  }
}
