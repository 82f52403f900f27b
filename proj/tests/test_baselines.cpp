// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "baselines.hpp"
#include "bound.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace rangebound;
using namespace rangebound::testutil;

namespace {

SchemaPtr vt_schema() {
  return make_schema({num_attr("x", 0, 100), num_attr("v", 0, 1000)});
}

Relation random_rows(SchemaPtr schema, size_t n, uint64_t seed) {
  SplitMix64 rng(seed);
  Relation r;
  r.schema = std::move(schema);
  for (size_t i = 0; i < n; ++i)
    r.rows.push_back(tup({rng.next_range(0, 100), rng.next_range(0, 1000)}));
  return r;
}

double true_sum(const Relation& r, const QuerySpec& q) {
  double s = 0;
  for (const auto& t : r.rows)
    if (evaluate(q.predicate, *r.schema, t)) s += std::get<double>(t.values[1]);
  return s;
}

}  // namespace

TEST_CASE("normal quantiles match reference values") {
  CHECK(inv_norm_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(inv_norm_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(inv_norm_cdf(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-9));
  CHECK(inv_norm_cdf(0.9999) == doctest::Approx(3.719016485455709).epsilon(1e-8));
  CHECK(inv_norm_cdf(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-9));
}

TEST_CASE("full-population sample collapses to the truth") {
  auto schema = vt_schema();
  Relation missing = random_rows(schema, 50, 5);
  auto est = SampleEstimator::build(missing, SampleScheme::Uniform, {}, 50, 99);
  CHECK(est.sample_size() == 50);
  QuerySpec q = parse_query("SELECT SUM(v) FROM t", &*schema);
  auto iv = est.interval(q, IntervalKind::Parametric, 0.99);
  double truth = true_sum(missing, q);
  CHECK(iv.lo <= truth + 1e-6);
  CHECK(iv.hi >= truth - 1e-6);
  // Sampling fraction 1: the point estimate is exact; only the width remains.
  CHECK((iv.lo + iv.hi) / 2 == doctest::Approx(truth).epsilon(1e-9));
}

TEST_CASE("constant attribute gives zero-width parametric interval") {
  auto schema = vt_schema();
  Relation missing{schema, {}};
  for (int i = 0; i < 40; ++i) missing.rows.push_back(tup({(double)(i % 10), 7.0}));
  auto est = SampleEstimator::build(missing, SampleScheme::Uniform, {}, 10, 3);
  QuerySpec q = parse_query("SELECT SUM(v) FROM t", &*schema);
  auto iv = est.interval(q, IntervalKind::Parametric, 0.99);
  CHECK(iv.hi - iv.lo == doctest::Approx(0.0));
  CHECK(iv.lo == doctest::Approx(40.0 * 7.0));
}

TEST_CASE("intervals match an independent implementation of the same formulas") {
  auto schema = vt_schema();
  Relation missing = random_rows(schema, 400, 77);
  size_t n = 60;
  uint64_t seed = 1234;
  auto est = SampleEstimator::build(missing, SampleScheme::Uniform, {}, n, seed);
  QuerySpec q = parse_query("SELECT SUM(v) FROM t WHERE x <= 60", &*schema);

  // Reference: replay the same seeded draw, then compute the formulas
  // directly from their definitions.
  std::vector<size_t> pool(missing.rows.size());
  for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  SplitMix64 rng(SplitMix64::derive(seed, 0));
  std::vector<Tuple> sample;
  for (size_t i = 0; i < n; ++i) {
    size_t j = i + (size_t)rng.next_below(pool.size() - i);
    std::swap(pool[i], pool[j]);
    sample.push_back(missing.rows[pool[i]]);
  }
  double mean = 0, m2 = 0, ymin = 1e300, ymax = -1e300;
  size_t k = 0;
  for (const auto& t : sample) {
    double y = evaluate(q.predicate, *schema, t) ? std::get<double>(t.values[1]) : 0.0;
    ++k;
    double d = y - mean;
    mean += d / (double)k;
    m2 += d * (y - mean);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  double pop = (double)missing.rows.size();
  double est_point = pop * mean;
  double se = pop * std::sqrt((m2 / (double)(n - 1)) / (double)n);
  double z = inv_norm_cdf((1 + 0.99) / 2);
  auto par = est.interval(q, IntervalKind::Parametric, 0.99);
  CHECK(par.lo == doctest::Approx(est_point - z * se).epsilon(1e-9));
  CHECK(par.hi == doctest::Approx(est_point + z * se).epsilon(1e-9));

  double half = pop * (ymax - ymin) * std::sqrt(std::log(2.0 / 0.01) / (2.0 * (double)n));
  auto nonpar = est.interval(q, IntervalKind::Nonparametric, 0.99);
  CHECK(nonpar.lo == doctest::Approx(est_point - half).epsilon(1e-9));
  CHECK(nonpar.hi == doctest::Approx(est_point + half).epsilon(1e-9));

  // Both intervals are symmetric about the same point estimate.
  CHECK((par.lo + par.hi) / 2 == doctest::Approx((nonpar.lo + nonpar.hi) / 2).epsilon(1e-9));
}

TEST_CASE("stratified sampling with one stratum equals uniform") {
  auto schema = vt_schema();
  Relation missing = random_rows(schema, 200, 8);
  auto uni = SampleEstimator::build(missing, SampleScheme::Uniform, {}, 30, 42);
  auto st = SampleEstimator::build(missing, SampleScheme::Stratified,
                                   {Predicate::make_true()}, 30, 42);
  QuerySpec q = parse_query("SELECT COUNT(*) FROM t WHERE x <= 50", &*schema);
  for (auto kind : {IntervalKind::Parametric, IntervalKind::Nonparametric}) {
    auto a = uni.interval(q, kind, 0.95);
    auto b = st.interval(q, kind, 0.95);
    CHECK(a.lo == doctest::Approx(b.lo).epsilon(1e-12));
    CHECK(a.hi == doctest::Approx(b.hi).epsilon(1e-12));
  }
}

TEST_CASE("empty sample under the predicate is flagged undefined") {
  auto schema = vt_schema();
  Relation missing{schema, {}};
  for (int i = 0; i < 20; ++i) missing.rows.push_back(tup({90.0, 5.0}));
  auto est = SampleEstimator::build(missing, SampleScheme::Uniform, {}, 5, 7);
  QuerySpec q = parse_query("SELECT SUM(v) FROM t WHERE x <= 10", &*schema);
  auto iv = est.interval(q, IntervalKind::Nonparametric, 0.99);
  CHECK(iv.undefined);
}

TEST_CASE("histogram: full coverage counts exactly") {
  auto schema = vt_schema();
  Relation missing = random_rows(schema, 123, 9);
  auto h = HistogramSynopsis::build(missing, "v", 8);
  QuerySpec q = parse_query("SELECT COUNT(*) FROM t", &*schema);
  auto iv = h.bound(q);
  CHECK(iv.lo == doctest::Approx(123));
  CHECK(iv.hi == doctest::Approx(123));
}

TEST_CASE("histogram: bucket-aligned sum bounds") {
  auto schema = make_schema({num_attr("v", 0, 100)});
  Relation missing{schema, {}};
  for (int i = 0; i < 100; ++i) missing.rows.push_back(tup({(double)i}));
  auto h = HistogramSynopsis::build(missing, "v", 4);
  // Buckets: [0,24.75) [24.75,49.5) [49.5,74.25) [74.25,99].
  QuerySpec q = parse_query("SELECT SUM(v) FROM t", &*schema);
  auto iv = h.bound(q);
  double lo = 0, hi = 0;
  for (int b = 0; b < 4; ++b) {
    double blo = 99.0 * b / 4, bhi = 99.0 * (b + 1) / 4;
    lo += 25 * blo;
    hi += 25 * bhi;
  }
  CHECK(iv.lo == doctest::Approx(lo));
  CHECK(iv.hi == doctest::Approx(hi));
}

TEST_CASE("histogram as constraints gives the same range on value queries") {
  auto schema = make_schema({num_attr("v", 0, 100)});
  SplitMix64 rng(2718);
  Relation missing{schema, {}};
  for (int i = 0; i < 300; ++i) missing.rows.push_back(tup({rng.next_range(0, 100)}));
  auto h = HistogramSynopsis::build(missing, "v", 6);
  PCSet as_pcs = h.to_pcset();
  REQUIRE(satisfies_set(Relation{as_pcs.schema_ptr(), missing.rows}, as_pcs));

  for (int trial = 0; trial < 30; ++trial) {
    double a = rng.next_range(0, 100), b = rng.next_range(0, 100);
    if (a > b) std::swap(a, b);
    for (const char* agg : {"COUNT", "SUM"}) {
      std::string target = std::string(agg) == "COUNT" ? "*" : "v";
      QuerySpec q = parse_query("SELECT " + std::string(agg) + "(" + target +
                                    ") FROM t WHERE v >= " + std::to_string(a) +
                                    " AND v <= " + std::to_string(b),
                                &*schema);
      auto hist_iv = h.bound(q);
      auto pc_res = bound_query(q, as_pcs);
      REQUIRE(pc_res.single.has_value());
      INFO("agg ", agg, " range [", a, ",", b, "]");
      CHECK(pc_res.single->status == BoundStatus::Exact);
      CHECK(hist_iv.lo == doctest::Approx(pc_res.single->lower).epsilon(1e-9));
      CHECK(hist_iv.hi == doctest::Approx(pc_res.single->upper).epsilon(1e-9));
    }
  }
}
