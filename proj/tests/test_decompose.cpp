// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <map>
#include <set>

#include "decompose.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace rangebound;
using namespace rangebound::testutil;

namespace {

PredicateConstraint box_pc(const std::string& id, const std::string& attr, double lo,
                           double hi, int64_t kl = 0, int64_t ku = 10) {
  PredicateConstraint pc;
  pc.id = id;
  pc.psi.with(attr, Interval::closed(lo, hi));
  pc.kappa = {kl, ku};
  return pc;
}

PredicateConstraint box2_pc(const std::string& id, double xlo, double xhi, double ylo,
                            double yhi, int64_t kl = 0, int64_t ku = 10) {
  PredicateConstraint pc;
  pc.id = id;
  pc.psi.with("x", Interval::closed(xlo, xhi));
  pc.psi.with("y", Interval::closed(ylo, yhi));
  pc.kappa = {kl, ku};
  return pc;
}

// Naive reference: enumerate all sign patterns, test each with the
// satisfiability engine, keep covered cells.
std::set<std::string> naive_cells(const PCSet& set, const std::optional<Predicate>& clip) {
  size_t n = set.size();
  std::set<std::string> out;
  for (uint64_t mask = 1; mask < (1ULL << n); ++mask) {
    SignedConjunction sc;
    if (clip) sc.clip = *clip;
    for (size_t j = 0; j < n; ++j) {
      if ((mask >> j) & 1ULL)
        sc.positives.push_back(set.at(j).psi);
      else
        sc.negatives.push_back(set.at(j).psi);
    }
    if (is_satisfiable(sc, set.schema())) {
      Cell c;
      c.in_mask = mask;
      out.insert(c.signature(n));
    }
  }
  return out;
}

std::set<std::string> result_signatures(const DecompositionResult& r, size_t n) {
  std::set<std::string> out;
  for (const auto& c : r.cells) out.insert(c.signature(n));
  return out;
}

PCSet overlapping_random_set(SchemaPtr schema, size_t n, uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<PredicateConstraint> pcs;
  for (size_t i = 0; i < n; ++i) {
    double xlo = rng.next_range(0, 60), xhi = xlo + rng.next_range(20, 40);
    double ylo = rng.next_range(0, 60), yhi = ylo + rng.next_range(20, 40);
    pcs.push_back(box2_pc("p" + std::to_string(i), xlo, std::min(xhi, 100.0), ylo,
                          std::min(yhi, 100.0)));
  }
  return PCSet(std::move(schema), std::move(pcs));
}

}  // namespace

TEST_CASE("three overlapping constraints give five satisfiable cells") {
  // A line of three intervals where the two outer ones do not meet: of the 7
  // covered sign patterns, only 5 are satisfiable.
  auto schema = make_schema({num_attr("x", 0, 100)});
  PCSet set(schema, {box_pc("a", "x", 0, 40), box_pc("b", "x", 30, 70),
                     box_pc("c", "x", 60, 100)});
  auto res = decompose(set);
  CHECK(res.cells.size() == 5);
  CHECK(result_signatures(res, 3) == naive_cells(set, std::nullopt));
}

TEST_CASE("disjoint constraints decompose to one cell each") {
  auto schema = make_schema({num_attr("x", 0, 100)});
  PCSet set(schema, {box_pc("a", "x", 0, 10), box_pc("b", "x", 20, 30),
                     box_pc("c", "x", 40, 50), box_pc("d", "x", 60, 70)});
  auto res = decompose(set);
  CHECK(res.stats.disjoint_fast_path);
  REQUIRE(res.cells.size() == 4);
  for (const auto& c : res.cells) CHECK(std::popcount(c.in_mask) == 1);
}

TEST_CASE("decomposition matches naive enumeration on random overlapping sets") {
  auto schema = make_schema({num_attr("x", 0, 100), num_attr("y", 0, 100)});
  for (uint64_t seed = 1; seed <= 6; ++seed) {
    PCSet set = overlapping_random_set(schema, 6 + seed % 4, seed * 31);
    auto res = decompose(set);
    CHECK(result_signatures(res, set.size()) == naive_cells(set, std::nullopt));
  }
}

TEST_CASE("query clip excludes non-overlapping cells") {
  auto schema = make_schema({num_attr("x", 0, 100)});
  PCSet set(schema, {box_pc("a", "x", 0, 40), box_pc("b", "x", 60, 100)});
  Predicate clip;
  clip.with("x", Interval::closed(0, 50));
  DecomposeOptions opts;
  opts.clip = clip;
  auto res = decompose(set, opts);
  REQUIRE(res.cells.size() == 1);
  CHECK(res.cells[0].covers(0));
  CHECK_FALSE(res.cells[0].covers(1));

  auto naive = naive_cells(set, clip);
  CHECK(result_signatures(res, 2) == naive);
}

TEST_CASE("outside mode enumerates the escape region") {
  auto schema = make_schema({num_attr("x", 0, 100)});
  PCSet set(schema, {box_pc("a", "x", 0, 40), box_pc("b", "x", 30, 70)});
  Predicate clip;
  clip.with("x", Interval::closed(0, 35));
  DecomposeOptions opts;
  opts.clip = clip;
  opts.outside = true;
  auto res = decompose(set, opts);
  // Outside x<=35: a^b survives on (35,40], b alone on (40,70]; a alone is
  // [0,30) which sits entirely inside the clip.
  std::set<std::string> sigs = result_signatures(res, 2);
  CHECK(sigs == std::set<std::string>{"++", "-+"});
  for (const auto& c : res.cells) CHECK_FALSE(c.inside_clip);
}

TEST_CASE("reconcile takes the most restrictive value bounds") {
  auto schema = make_schema({num_attr("x", 0, 100), num_attr("price", 0, 1000)});
  PredicateConstraint a = box_pc("a", "x", 0, 50);
  a.nu.ranges["price"] = {0, 149.99};
  PredicateConstraint b = box_pc("b", "x", 20, 70);
  b.nu.ranges["price"] = {0, 129.99};
  PCSet set(schema, {a, b});
  auto res = decompose(set);
  size_t price_idx = schema->index_of("price");
  for (const auto& c : res.cells) {
    if (c.covers(0) && c.covers(1)) CHECK(c.value_upper[price_idx] == 129.99);
    if (c.covers(0) && !c.covers(1)) CHECK(c.value_upper[price_idx] == 149.99);
  }

  PredicateConstraint p = box_pc("p", "x", 0, 50);
  p.nu.ranges["price"] = {10, 20};
  PredicateConstraint q = box_pc("q", "x", 0, 50);
  q.nu.ranges["price"] = {15, 30};
  PCSet set2(schema, {p, q});
  auto res2 = decompose(set2);
  for (const auto& c : res2.cells) {
    if (c.covers(0) && c.covers(1)) {
      CHECK(c.value_lower[price_idx] == 15);
      CHECK(c.value_upper[price_idx] == 20);
    }
  }
}

TEST_CASE("single covering constraint keeps its value bounds verbatim") {
  auto schema = make_schema({num_attr("x", 0, 100), num_attr("v", -50, 50)});
  PredicateConstraint a = box_pc("a", "x", 0, 50);
  a.nu.ranges["v"] = {-10, 35};
  PCSet set(schema, {a});
  auto res = decompose(set);
  REQUIRE(res.cells.size() == 1);
  size_t vi = schema->index_of("v");
  CHECK(res.cells[0].value_lower[vi] == -10);
  CHECK(res.cells[0].value_upper[vi] == 35);
}

TEST_CASE("contradictory value bounds force the allocation to zero") {
  auto schema = make_schema({num_attr("x", 0, 100), num_attr("v", 0, 100)});
  PredicateConstraint a = box_pc("a", "x", 0, 50);
  a.nu.ranges["v"] = {0, 20};
  PredicateConstraint b = box_pc("b", "x", 0, 50);
  b.nu.ranges["v"] = {30, 60};
  PCSet set(schema, {a, b});
  auto res = decompose(set);
  for (const auto& c : res.cells)
    if (c.covers(0) && c.covers(1)) CHECK(c.forced_zero);
}

TEST_CASE("value boxes that miss the region force zero") {
  // psi pins v to [0,10] but the covering value constraint demands [20,30]:
  // the per-attribute reconciliation alone cannot see the conflict.
  auto schema = make_schema({num_attr("v", 0, 100)});
  PredicateConstraint a;
  a.id = "a";
  a.psi.with("v", Interval::closed(0, 10));
  a.nu.ranges["v"] = {20, 30};
  // nu outside the domain of psi's region is legal at validation time since
  // [20,30] sits inside the attribute domain.
  PCSet set(schema, {a});
  auto res = decompose(set);
  REQUIRE(res.cells.size() == 1);
  CHECK(res.cells[0].forced_zero);
}

TEST_CASE("cell regions are pairwise disjoint and cover all constrained grid points") {
  auto schema = make_schema({num_attr("x", 0, 100), num_attr("y", 0, 100)});
  for (uint64_t seed : {3u, 8u}) {
    PCSet set = overlapping_random_set(schema, 5, seed);
    auto res = decompose(set);
    size_t n = set.size();
    // Disjointness: conjoining any two distinct cell regions is unsatisfiable.
    for (size_t i = 0; i < res.cells.size(); ++i) {
      for (size_t j = i + 1; j < res.cells.size(); ++j) {
        SignedConjunction sc;
        for (size_t k = 0; k < n; ++k) {
          bool in_i = res.cells[i].covers(k), in_j = res.cells[j].covers(k);
          if (in_i || in_j) sc.positives.push_back(set.at(k).psi);
          if (!in_i || !in_j) sc.negatives.push_back(set.at(k).psi);
        }
        CHECK_FALSE(is_satisfiable(sc, *schema));
      }
    }
    // Coverage: each grid tuple satisfying >= 1 predicate lies in exactly one cell.
    std::vector<Box> boxes;
    for (const auto& pc : set.constraints()) boxes.push_back(resolve_box(*schema, pc.psi));
    auto grid = endpoint_grid(*schema, boxes);
    for (const auto& xv : grid[0]) {
      for (const auto& yv : grid[1]) {
        Tuple t = tup({xv, yv});
        uint64_t mask = 0;
        for (size_t k = 0; k < n; ++k)
          if (evaluate(set.at(k).psi, *schema, t)) mask |= 1ULL << k;
        if (mask == 0) continue;
        int hits = 0;
        for (const auto& c : res.cells)
          if (c.in_mask == mask) ++hits;
        CHECK(hits == 1);
      }
    }
  }
}

TEST_CASE("decomposition is deterministic and parallelism-independent") {
  auto schema = make_schema({num_attr("x", 0, 100), num_attr("y", 0, 100)});
  PCSet set = overlapping_random_set(schema, 9, 77);
  auto seq = decompose(set);
  DecomposeOptions par;
  par.parallelism = 4;
  auto conc = decompose(set, par);
  REQUIRE(seq.cells.size() == conc.cells.size());
  for (size_t i = 0; i < seq.cells.size(); ++i)
    CHECK(seq.cells[i].in_mask == conc.cells[i].in_mask);
  CHECK(seq.stats.sat_calls == conc.stats.sat_calls);
  CHECK(seq.stats.rewriting_hits == conc.stats.rewriting_hits);
}

TEST_CASE("early stopping admits a superset of the exact cells") {
  auto schema = make_schema({num_attr("x", 0, 100), num_attr("y", 0, 100)});
  PCSet set = overlapping_random_set(schema, 8, 21);
  auto exact = result_signatures(decompose(set), 8);
  for (int k : {2, 4, 6}) {
    DecomposeOptions opts;
    opts.early_stop_depth = k;
    auto res = decompose(set, opts);
    CHECK(res.stats.early_stopped);
    auto approx = result_signatures(res, 8);
    for (const auto& sig : exact) CHECK(approx.count(sig) == 1);
    CHECK(approx.size() >= exact.size());
  }
}
