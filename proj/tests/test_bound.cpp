// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "bound.hpp"
#include "doctest.h"
#include "oracle.hpp"
#include "test_util.hpp"
#include "timeparse.hpp"

using namespace rangebound;
using namespace rangebound::testutil;

namespace {

double nov(int day) { return *parse_timestamp("Nov-" + std::to_string(day) + " 0:00"); }
const double kNov11 = nov(11);
const double kNov12 = nov(12);
const double kNov13 = nov(13);

// Two-day sales window; the domain ends one second before Nov-13 so the
// half-open day constraints tile it completely.
SchemaPtr sales_schema() {
  return make_schema({num_attr("utc", kNov11, kNov13 - 1), num_attr("price", 0, 1000)});
}

PredicateConstraint day_pc(const std::string& id, double day_lo, double day_hi,
                           double price_lo, double price_hi, int64_t kl, int64_t ku) {
  PredicateConstraint pc;
  pc.id = id;
  pc.psi.with("utc", Interval{day_lo, day_hi, false, true});
  pc.nu.ranges["price"] = {price_lo, price_hi};
  pc.kappa = {kl, ku};
  return pc;
}

QuerySpec sum_query(const Schema& schema) {
  return parse_query("SELECT SUM(price) FROM sales WHERE utc >= 'Nov-11 0:00' AND utc <= 'Nov-13 0:00'",
                     &schema);
}

}  // namespace

TEST_CASE("disjoint day constraints reproduce the worked range") {
  auto schema = sales_schema();
  PCSet set(schema, {day_pc("t1", kNov11, kNov12, 0.99, 129.99, 50, 100),
                     day_pc("t2", kNov12, kNov13, 0.99, 149.99, 50, 100)});
  auto res = bound_query(sum_query(*schema), set);
  REQUIRE(res.single.has_value());
  const ResultRange& r = *res.single;
  CHECK(r.status == BoundStatus::Exact);
  CHECK(r.diagnostics.method == "greedy");
  CHECK(std::round(r.lower * 100) / 100 == doctest::Approx(99.00));
  CHECK(std::round(r.upper * 100) / 100 == doctest::Approx(27998.00));
}

TEST_CASE("overlapping day constraints reproduce the worked range and witnesses") {
  auto schema = sales_schema();
  PCSet set(schema, {day_pc("t1", kNov11, kNov12, 0.99, 129.99, 50, 100),
                     day_pc("t2", kNov11, kNov13, 0.99, 149.99, 75, 125)});
  auto res = bound_query(sum_query(*schema), set);
  REQUIRE(res.single.has_value());
  const ResultRange& r = *res.single;
  CHECK(r.status == BoundStatus::Exact);
  CHECK(r.lower == doctest::Approx(74.25));
  CHECK(r.upper == doctest::Approx(17748.75));
  CHECK(r.diagnostics.cells_inside == 2);  // the third sign pattern is unsatisfiable

  REQUIRE(r.witness_upper.size() == 2);
  CHECK(r.witness_upper[0].signature == "++");
  CHECK(r.witness_upper[0].count == 50);
  CHECK(r.witness_upper[1].signature == "-+");
  CHECK(r.witness_upper[1].count == 75);
  REQUIRE(r.witness_lower.size() == 2);
  CHECK(r.witness_lower[0].count == 50);
  CHECK(r.witness_lower[1].count == 25);
}

TEST_CASE("count bounds follow the window algebra") {
  auto schema = sales_schema();
  QuerySpec q = parse_query("SELECT COUNT(*) FROM sales", &*schema);

  PCSet disjoint(schema, {day_pc("t1", kNov11, kNov12, 0.99, 129.99, 50, 100),
                          day_pc("t2", kNov12, kNov13, 0.99, 149.99, 50, 100)});
  auto r1 = bound_query(q, disjoint);
  CHECK(r1.single->lower == doctest::Approx(100));
  CHECK(r1.single->upper == doctest::Approx(200));

  PCSet overlapping(schema, {day_pc("t1", kNov11, kNov12, 0.99, 129.99, 50, 100),
                             day_pc("t2", kNov11, kNov13, 0.99, 149.99, 75, 125)});
  auto r2 = bound_query(q, overlapping);
  CHECK(r2.single->lower == doctest::Approx(75));
  CHECK(r2.single->upper == doctest::Approx(125));

  PCSet single(schema, {day_pc("only", kNov11, kNov13, 0.99, 149.99, 3, 7)});
  auto r3 = bound_query(q, single);
  CHECK(r3.single->lower == doctest::Approx(3));
  CHECK(r3.single->upper == doctest::Approx(7));
}

TEST_CASE("min and max bounds from the worked example") {
  auto schema = sales_schema();
  PCSet set(schema, {day_pc("t1", kNov11, kNov12, 0.99, 129.99, 50, 100),
                     day_pc("t2", kNov11, kNov13, 0.99, 149.99, 75, 125)});
  QuerySpec qmax = parse_query("SELECT MAX(price) FROM sales", &*schema);
  auto rmax = bound_query(qmax, set);
  CHECK(rmax.single->upper == doctest::Approx(149.99));
  CHECK(rmax.single->lower_defined);

  QuerySpec qmin = parse_query("SELECT MIN(price) FROM sales", &*schema);
  auto rmin = bound_query(qmin, set);
  CHECK(rmin.single->lower == doctest::Approx(0.99));
}

TEST_CASE("average bounds: all rows at one extreme") {
  auto schema = make_schema({num_attr("x", 0, 100), num_attr("v", 0, 10)});
  PredicateConstraint pc;
  pc.id = "p";
  pc.psi.with("x", Interval::closed(0, 50));
  pc.nu.ranges["v"] = {0, 10};
  pc.kappa = {1, 5};
  PCSet set(schema, {pc, [&] {
                PredicateConstraint rest;
                rest.id = "rest";
                rest.psi.with("x", Interval{50, 100, true, false});
                rest.kappa = {0, 0};
                return rest;
              }()});
  QuerySpec q = parse_query("SELECT AVG(v) FROM t", &*schema);
  auto r = bound_query(q, set);
  CHECK(r.single->lower == doctest::Approx(0));
  CHECK(r.single->upper == doctest::Approx(10));
}

TEST_CASE("average upper on the overlapping example matches enumeration") {
  auto schema = sales_schema();
  PCSet set(schema, {day_pc("t1", kNov11, kNov12, 0.99, 129.99, 50, 100),
                     day_pc("t2", kNov11, kNov13, 0.99, 149.99, 75, 125)});
  QuerySpec q = parse_query("SELECT AVG(price) FROM sales", &*schema);
  auto r = bound_query(q, set);
  // Enumerated optimum over all window-feasible integer allocations:
  // 50 rows at 129.99 plus 75 rows at 149.99.
  double expected = (50 * 129.99 + 75 * 149.99) / 125.0;
  double tol = 1e-6 * (149.99 - 0.99);
  CHECK(std::fabs(r.single->upper - expected) <= tol + 1e-12);
  CHECK(r.single->lower == doctest::Approx(0.99));
}

TEST_CASE("infeasible windows are reported, not clamped") {
  auto schema = make_schema({num_attr("x", 0, 10), num_attr("v", 0, 10)});
  PredicateConstraint a, b;
  a.id = "a";
  a.psi.with("x", Interval::closed(0, 10));
  a.kappa = {5, 10};
  b.id = "b";
  b.psi.with("x", Interval::closed(0, 10));
  b.kappa = {0, 3};
  PCSet set(schema, {a, b});
  QuerySpec q = parse_query("SELECT COUNT(*) FROM t", &*schema);
  auto r = bound_query(q, set);
  CHECK(r.single->status == BoundStatus::InfeasibleConstraints);
}

TEST_CASE("closure failure surfaces a witness") {
  auto schema = make_schema({num_attr("x", 0, 10), num_attr("v", 0, 10)});
  PredicateConstraint a;
  a.id = "a";
  a.psi.with("x", Interval::closed(0, 5));
  a.kappa = {0, 3};
  PCSet set(schema, {a});
  QuerySpec q = parse_query("SELECT COUNT(*) FROM t", &*schema);
  auto r = bound_query(q, set);
  CHECK(r.single->status == BoundStatus::NotClosed);
  CHECK(r.single->diagnostics.closure_counterexample.has_value());

  // Clipping the query inside the covered region restores closure.
  QuerySpec q2 = parse_query("SELECT COUNT(*) FROM t WHERE x <= 4", &*schema);
  auto r2 = bound_query(q2, set);
  CHECK(r2.single->status == BoundStatus::Exact);
}

TEST_CASE("independent-set reduction: three-vertex path") {
  // Vertices a-b-c with edges (a,b) and (b,c): the optimum picks a and c.
  auto schema = make_schema({cat_attr("vertex", {"a", "b", "c"}), num_attr("w", 0, 1)});
  std::vector<PredicateConstraint> pcs;
  for (const std::string v : {"a", "b", "c"}) {
    PredicateConstraint pc;
    pc.id = "v_" + v;
    pc.psi.with("vertex", CatSet::of({v}));
    pc.nu.ranges["w"] = {0, 1};
    pc.kappa = {0, 1};
    pcs.push_back(pc);
  }
  auto edge = [&](const std::string& u, const std::string& v) {
    PredicateConstraint pc;
    pc.id = "e_" + u + v;
    pc.psi.with("vertex", CatSet::of({u, v}));
    pc.nu.ranges["w"] = {0, 1};
    pc.kappa = {0, 1};
    return pc;
  };
  pcs.push_back(edge("a", "b"));
  pcs.push_back(edge("b", "c"));
  PCSet set(schema, pcs);
  QuerySpec q = parse_query("SELECT SUM(w) FROM g", &*schema);
  auto r = bound_query(q, set);
  CHECK(r.single->upper == doctest::Approx(2.0));
}

TEST_CASE("existing rows combine with missing bounds") {
  auto schema = make_schema({num_attr("x", 0, 10), num_attr("v", 0, 100)});
  PredicateConstraint a;
  a.id = "a";
  a.nu.ranges["v"] = {0, 50};
  a.kappa = {3, 7};
  PCSet set(schema, {a});

  Relation existing{schema, {}};
  for (int i = 0; i < 10; ++i) existing.rows.push_back(tup({1.0, 10.0}));

  QuerySpec qc = parse_query("SELECT COUNT(*) FROM t", &*schema);
  auto rc = bound_query(qc, set, &existing);
  CHECK(rc.single->lower == doctest::Approx(13));
  CHECK(rc.single->upper == doctest::Approx(17));

  QuerySpec qs = parse_query("SELECT SUM(v) FROM t", &*schema);
  auto rs = bound_query(qs, set, &existing);
  CHECK(rs.single->lower == doctest::Approx(100.0));
  CHECK(rs.single->upper == doctest::Approx(100.0 + 7 * 50.0));

  QuerySpec qm = parse_query("SELECT MAX(v) FROM t", &*schema);
  auto rm = bound_query(qm, set, &existing);
  CHECK(rm.single->upper == doctest::Approx(50.0));
  CHECK(rm.single->lower == doctest::Approx(10.0));
}

TEST_CASE("group by expands over the categorical domain") {
  auto schema = make_schema({cat_attr("branch", {"A", "B"}), num_attr("v", 0, 10)});
  PredicateConstraint pa, pb;
  pa.id = "pa";
  pa.psi.with("branch", CatSet::of({"A"}));
  pa.nu.ranges["v"] = {0, 5};
  pa.kappa = {1, 2};
  pb.id = "pb";
  pb.psi.with("branch", CatSet::of({"B"}));
  pb.nu.ranges["v"] = {0, 10};
  pb.kappa = {0, 4};
  PCSet set(schema, {pa, pb});
  QuerySpec q = parse_query("SELECT COUNT(1) FROM t GROUP BY branch", &*schema);
  auto r = bound_query(q, set);
  REQUIRE(r.groups.size() == 2);
  CHECK(r.groups[0].first == "A");
  CHECK(r.groups[0].second.lower == doctest::Approx(1));
  CHECK(r.groups[0].second.upper == doctest::Approx(2));
  CHECK(r.groups[1].second.upper == doctest::Approx(4));
}

namespace {

// Random instances in the oracle-friendly class: predicates over x, value
// constraints over v, a catch-all constraint for closure.
PCSet random_instance(SplitMix64& rng, SchemaPtr schema) {
  std::vector<PredicateConstraint> pcs;
  size_t n = 1 + rng.next_below(3);
  for (size_t i = 0; i < n; ++i) {
    PredicateConstraint pc;
    pc.id = "p" + std::to_string(i);
    int lo = (int)rng.next_below(8);
    int hi = lo + 1 + (int)rng.next_below(8 - lo);
    bool lo_open = rng.next_below(3) == 0;
    bool hi_open = rng.next_below(3) == 0;
    pc.psi.with("x", Interval{(double)lo, (double)hi, lo_open, hi_open});
    int vlo = (int)rng.next_below(8);
    int vhi = vlo + (int)rng.next_below(9 - vlo);
    pc.nu.ranges["v"] = {(double)vlo, (double)vhi};
    int64_t kl = (int64_t)rng.next_below(3);
    pc.kappa = {kl, kl + (int64_t)rng.next_below(5)};
    pcs.push_back(pc);
  }
  PredicateConstraint all;
  all.id = "all";
  all.kappa = {0, 6};
  if (rng.next_below(2)) all.nu.ranges["v"] = {0, 8};
  pcs.push_back(all);
  return PCSet(std::move(schema), std::move(pcs));
}

QuerySpec random_query(SplitMix64& rng, const Schema& schema) {
  static const char* aggs[] = {"SUM", "COUNT", "AVG", "MIN", "MAX"};
  std::string agg = aggs[rng.next_below(5)];
  std::string text = "SELECT " + agg + "(" + (agg == "COUNT" ? "*" : "v") + ") FROM t";
  std::vector<std::string> atoms;
  if (rng.next_below(10) < 7) {
    int lo = (int)rng.next_below(8);
    int hi = lo + (int)rng.next_below(9 - lo);
    atoms.push_back("x >= " + std::to_string(lo));
    atoms.push_back("x <= " + std::to_string(hi));
  }
  if (rng.next_below(10) < 3) {
    int hi = 1 + (int)rng.next_below(8);
    atoms.push_back("v <= " + std::to_string(hi));
  }
  for (size_t i = 0; i < atoms.size(); ++i)
    text += (i == 0 ? " WHERE " : " AND ") + atoms[i];
  return parse_query(text, &schema);
}

}  // namespace

TEST_CASE("bounds agree with the brute-force oracle") {
  auto schema = make_schema({num_attr("x", 0, 8), num_attr("v", 0, 8)});
  SplitMix64 rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    PCSet set = random_instance(rng, schema);
    QuerySpec q = random_query(rng, *schema);
    auto engine = bound_query(q, set);
    REQUIRE(engine.single.has_value());
    const ResultRange& r = *engine.single;
    if (r.status == BoundStatus::NotClosed) continue;
    auto oracle = oracle::brute_force_range(set, q);
    if (r.status == BoundStatus::InfeasibleConstraints) {
      CHECK_FALSE(oracle.feasible);
      continue;
    }
    ++checked;
    if (r.status == BoundStatus::NoRows) {
      CHECK_FALSE(oracle.rows_possible);
      continue;
    }
    REQUIRE(oracle.feasible);
    INFO("trial ", trial, " agg ", agg_name(q.aggregate), " query ", pretty_print(q));
    if (q.aggregate == AggKind::Avg) {
      CHECK(r.upper == doctest::Approx(oracle.upper).epsilon(1e-5));
      CHECK(r.lower == doctest::Approx(oracle.lower).epsilon(1e-5));
    } else {
      CHECK(r.upper_defined == oracle.upper_defined);
      CHECK(r.lower_defined == oracle.lower_defined);
      if (r.upper_defined && oracle.upper_defined)
        CHECK(r.upper == doctest::Approx(oracle.upper));
      if (r.lower_defined && oracle.lower_defined)
        CHECK(r.lower == doctest::Approx(oracle.lower));
    }
  }
  CHECK(checked > 20);
}

TEST_CASE("greedy disjoint equals the MILP path") {
  auto schema = make_schema({num_attr("x", 0, 100), num_attr("v", -20, 20)});
  SplitMix64 rng(31337);
  for (int trial = 0; trial < 40; ++trial) {
    // Disjoint tiles over x covering the whole domain.
    size_t n = 2 + rng.next_below(4);
    std::vector<double> cuts = {0};
    for (size_t i = 1; i < n; ++i) cuts.push_back(rng.next_range(1, 99));
    cuts.push_back(100);
    std::sort(cuts.begin(), cuts.end());
    std::vector<PredicateConstraint> pcs;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      PredicateConstraint pc;
      pc.id = "tile" + std::to_string(i);
      bool last = i + 2 == cuts.size();
      pc.psi.with("x", Interval{cuts[i], cuts[i + 1], false, !last});
      double vlo = rng.next_range(-20, 10);
      pc.nu.ranges["v"] = {vlo, vlo + rng.next_range(0, 10)};
      int64_t kl = (int64_t)rng.next_below(3);
      pc.kappa = {kl, kl + (int64_t)rng.next_below(5)};
      pcs.push_back(pc);
    }
    PCSet set(schema, pcs);

    std::string where;
    if (rng.next_below(2)) {
      double lo = rng.next_range(0, 60);
      where = " WHERE x >= " + std::to_string(lo) + " AND x <= " +
              std::to_string(lo + rng.next_range(5, 40));
    }
    for (const char* agg : {"SUM", "COUNT", "MIN", "MAX", "AVG"}) {
      std::string target = std::string(agg) == "COUNT" ? "*" : "v";
      QuerySpec q =
          parse_query("SELECT " + std::string(agg) + "(" + target + ") FROM t" + where, &*schema);

      ResultRange greedy = greedy_disjoint(set, q);
      BoundOptions opts;
      opts.early_stop_depth = (int)set.size();  // forces the decomposition path
      QueryResult via_milp = bound_query(q, set, nullptr, opts);
      const ResultRange& milp = *via_milp.single;

      INFO("agg ", agg, " where '", where, "' trial ", trial);
      CHECK(bound_status_name(greedy.status) == bound_status_name(milp.status));
      if (greedy.status == BoundStatus::Exact || greedy.status == BoundStatus::EarlyStopLoose) {
        CHECK(greedy.lower_defined == milp.lower_defined);
        CHECK(greedy.upper_defined == milp.upper_defined);
        if (greedy.upper_defined) CHECK(greedy.upper == doctest::Approx(milp.upper));
        if (greedy.lower_defined) CHECK(greedy.lower == doctest::Approx(milp.lower));
      }
    }
  }
}

TEST_CASE("widening windows or value ranges never shrinks the range") {
  auto schema = make_schema({num_attr("x", 0, 8), num_attr("v", 0, 8)});
  SplitMix64 rng(909);
  for (int trial = 0; trial < 30; ++trial) {
    PCSet set = random_instance(rng, schema);
    QuerySpec q = parse_query("SELECT SUM(v) FROM t", &*schema);
    auto base = bound_query(q, set);
    if (base.single->status != BoundStatus::Exact) continue;

    std::vector<PredicateConstraint> widened = set.constraints();
    size_t pick = rng.next_below(widened.size());
    widened[pick].kappa.kl = 0;
    widened[pick].kappa.ku += 2;
    if (widened[pick].nu.ranges.count("v")) {
      auto& range = widened[pick].nu.ranges["v"];
      range.first = std::max(0.0, range.first - 1);
      range.second = std::min(8.0, range.second + 1);
    }
    PCSet wider(schema, widened);
    auto grown = bound_query(q, wider);
    if (grown.single->status != BoundStatus::Exact) continue;
    CHECK(grown.single->upper >= base.single->upper - 1e-9);
    CHECK(grown.single->lower <= base.single->lower + 1e-9);
  }
}
