// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pc.hpp"
#include "query.hpp"
#include "rng.hpp"

namespace rangebound {

// Inverse standard normal CDF, accurate to ~1e-8 or better.
double inv_norm_cdf(double p);

struct BaselineInterval {
  double lo = 0;
  double hi = 0;
  bool undefined = false;  // no sample rows under the predicate
};

enum class SampleScheme { Uniform, Stratified };
enum class IntervalKind { Parametric, Nonparametric };

// Sampling estimator over the missing rows: the estimator receives example
// rows plus the true missing-row count and scales the sample aggregate.
// Parametric intervals use the normal quantile on the estimated standard
// error; nonparametric intervals use a Hoeffding-style half-width whose value
// range is the observed sample spread.
class SampleEstimator {
 public:
  // strata: one predicate per stratum (from the constraint partition); used
  // only by the stratified scheme. A uniform estimator is a single TRUE
  // stratum.
  static SampleEstimator build(const Relation& missing, SampleScheme scheme,
                               const std::vector<Predicate>& strata, size_t sample_size,
                               uint64_t seed);

  BaselineInterval interval(const QuerySpec& query, IntervalKind kind,
                            double confidence) const;

  size_t sample_size() const;

 private:
  struct Stratum {
    std::vector<Tuple> rows;     // sampled rows
    size_t population = 0;       // missing rows in this stratum
  };
  SchemaPtr schema_;
  std::vector<Stratum> strata_;
};

// Equi-width histogram over the aggregate attribute of the missing rows, with
// per-attribute marginal histograms for secondary predicates (independence
// assumption).
class HistogramSynopsis {
 public:
  static HistogramSynopsis build(const Relation& missing, const std::string& agg_attr,
                                 size_t buckets);

  BaselineInterval bound(const QuerySpec& query) const;

  // The dense 1-D special case: each bucket becomes a tautology constraint
  // (psi = nu = bucket range, kappa = exact count) over a schema whose
  // aggregate domain is the data range.
  PCSet to_pcset() const;

  size_t bucket_count() const { return counts_.size(); }

 private:
  struct Marginal {
    std::string attr;
    bool categorical = false;
    std::vector<double> edges;             // numeric: bucket edges
    std::vector<int64_t> counts;           // per bucket or per value
    std::vector<std::string> values;       // categorical
  };

  SchemaPtr schema_;
  std::string agg_attr_;
  double lo_ = 0, hi_ = 0;                 // aggregate data range
  std::vector<int64_t> counts_;            // aggregate-attribute buckets
  int64_t total_ = 0;
  std::vector<Marginal> marginals_;

  double bucket_lo(size_t b) const;
  double bucket_hi(size_t b) const;
  friend struct HistogramAccess;
};

}  // namespace rangebound
