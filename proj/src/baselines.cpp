// SPDX-License-Identifier: Apache-2.0
#include "baselines.hpp"

#include <algorithm>
#include <cmath>

namespace rangebound {

double inv_norm_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inv_norm_cdf: p outside (0,1)");
  // Acklam's rational approximation, then one Newton step against the erfc
  // CDF; the refinement brings the error near machine precision.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  double err = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double pdf = std::exp(-0.5 * x * x) / std::sqrt(2 * 3.14159265358979323846);
  if (pdf > 0) x -= err / pdf;
  return x;
}

SampleEstimator SampleEstimator::build(const Relation& missing, SampleScheme scheme,
                                       const std::vector<Predicate>& strata,
                                       size_t sample_size, uint64_t seed) {
  SampleEstimator est;
  est.schema_ = missing.schema;
  const Schema& schema = *missing.schema;

  std::vector<Predicate> parts;
  if (scheme == SampleScheme::Uniform)
    parts = {Predicate::make_true()};
  else
    parts = strata;

  // Assign rows to the first stratum whose predicate they satisfy; rows
  // matching none go to a trailing catch-all.
  std::vector<std::vector<size_t>> members(parts.size() + 1);
  for (size_t r = 0; r < missing.rows.size(); ++r) {
    size_t h = parts.size();
    for (size_t s = 0; s < parts.size(); ++s) {
      if (evaluate(parts[s], schema, missing.rows[r])) {
        h = s;
        break;
      }
    }
    members[h].push_back(r);
  }
  if (members.back().empty()) members.pop_back();

  size_t total = missing.rows.size();
  // Proportional allocation with largest-remainder rounding.
  std::vector<size_t> quota(members.size(), 0);
  if (total > 0 && sample_size > 0) {
    std::vector<std::pair<double, size_t>> remainders;
    size_t assigned = 0;
    for (size_t h = 0; h < members.size(); ++h) {
      double exact = static_cast<double>(sample_size) *
                     static_cast<double>(members[h].size()) / static_cast<double>(total);
      quota[h] = static_cast<size_t>(exact);
      quota[h] = std::min(quota[h], members[h].size());
      assigned += quota[h];
      remainders.push_back({exact - std::floor(exact), h});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& x, const auto& y) {
      if (x.first != y.first) return x.first > y.first;
      return x.second < y.second;
    });
    for (const auto& [frac, h] : remainders) {
      if (assigned >= sample_size) break;
      if (quota[h] < members[h].size()) {
        ++quota[h];
        ++assigned;
      }
    }
  }

  for (size_t h = 0; h < members.size(); ++h) {
    Stratum st;
    st.population = members[h].size();
    // Seeded partial Fisher-Yates draw without replacement.
    SplitMix64 rng(SplitMix64::derive(seed, h));
    std::vector<size_t> pool = members[h];
    size_t n = std::min(quota[h], pool.size());
    for (size_t i = 0; i < n; ++i) {
      size_t j = i + static_cast<size_t>(rng.next_below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      st.rows.push_back(missing.rows[pool[i]]);
    }
    est.strata_.push_back(std::move(st));
  }
  return est;
}

size_t SampleEstimator::sample_size() const {
  size_t n = 0;
  for (const auto& st : strata_) n += st.rows.size();
  return n;
}

BaselineInterval SampleEstimator::interval(const QuerySpec& query, IntervalKind kind,
                                           double confidence) const {
  if (query.aggregate != AggKind::Sum && query.aggregate != AggKind::Count)
    throw ConfigError("sampling baselines support SUM and COUNT queries");
  const Schema& schema = *schema_;
  std::optional<size_t> agg_idx;
  if (query.aggregate == AggKind::Sum) agg_idx = schema.index_of(query.target);

  double estimate = 0, var_sum = 0, hoeffding_half = 0;
  size_t matched = 0, strata_count = 0;
  for (const auto& st : strata_)
    if (!st.rows.empty()) ++strata_count;

  for (const auto& st : strata_) {
    if (st.rows.empty()) continue;
    size_t n = st.rows.size();
    double mean = 0, m2 = 0, y_min = kInf, y_max = -kInf;
    size_t k = 0;
    for (const Tuple& t : st.rows) {
      double y = 0;
      if (evaluate(query.predicate, schema, t)) {
        ++matched;
        y = agg_idx ? std::get<double>(t.values[*agg_idx]) : 1.0;
      }
      ++k;
      double delta = y - mean;
      mean += delta / static_cast<double>(k);
      m2 += delta * (y - mean);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
    double pop = static_cast<double>(st.population);
    estimate += pop * mean;
    double variance = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    var_sum += pop * pop * variance / static_cast<double>(n);
    double delta_h = (1.0 - confidence) / static_cast<double>(std::max<size_t>(strata_count, 1));
    double spread = y_max - y_min;
    hoeffding_half +=
        pop * spread * std::sqrt(std::log(2.0 / delta_h) / (2.0 * static_cast<double>(n)));
  }

  BaselineInterval out;
  if (matched == 0) {
    out.undefined = true;
    return out;
  }
  double half;
  if (kind == IntervalKind::Parametric) {
    double z = inv_norm_cdf((1.0 + confidence) / 2.0);
    half = z * std::sqrt(var_sum);
  } else {
    half = hoeffding_half;
  }
  out.lo = estimate - half;
  out.hi = estimate + half;
  return out;
}

HistogramSynopsis HistogramSynopsis::build(const Relation& missing,
                                           const std::string& agg_attr, size_t buckets) {
  if (buckets == 0) throw ConfigError("histogram needs at least one bucket");
  HistogramSynopsis h;
  h.schema_ = missing.schema;
  h.agg_attr_ = agg_attr;
  const Schema& schema = *missing.schema;
  size_t agg_idx = schema.index_of(agg_attr);

  h.lo_ = kInf;
  h.hi_ = -kInf;
  for (const Tuple& t : missing.rows) {
    double v = std::get<double>(t.values[agg_idx]);
    h.lo_ = std::min(h.lo_, v);
    h.hi_ = std::max(h.hi_, v);
  }
  if (missing.rows.empty()) h.lo_ = h.hi_ = 0;
  h.counts_.assign(buckets, 0);
  double width = (h.hi_ - h.lo_) / static_cast<double>(buckets);
  for (const Tuple& t : missing.rows) {
    double v = std::get<double>(t.values[agg_idx]);
    size_t b = width > 0 ? std::min(buckets - 1, static_cast<size_t>((v - h.lo_) / width))
                         : 0;
    ++h.counts_[b];
    ++h.total_;
  }

  for (size_t i = 0; i < schema.size(); ++i) {
    if (i == agg_idx) continue;
    Marginal m;
    m.attr = schema.at(i).name;
    if (schema.at(i).kind == AttrKind::Categorical) {
      m.categorical = true;
      m.values = schema.at(i).values;
      m.counts.assign(m.values.size(), 0);
      for (const Tuple& t : missing.rows) {
        const std::string& v = std::get<std::string>(t.values[i]);
        auto it = std::lower_bound(m.values.begin(), m.values.end(), v);
        if (it != m.values.end() && *it == v) ++m.counts[it - m.values.begin()];
      }
    } else {
      double lo = kInf, hi = -kInf;
      for (const Tuple& t : missing.rows) {
        double v = std::get<double>(t.values[i]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (missing.rows.empty()) lo = hi = 0;
      m.edges.resize(buckets + 1);
      for (size_t b = 0; b <= buckets; ++b)
        m.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(buckets);
      m.counts.assign(buckets, 0);
      double w = (hi - lo) / static_cast<double>(buckets);
      for (const Tuple& t : missing.rows) {
        double v = std::get<double>(t.values[i]);
        size_t b = w > 0 ? std::min(buckets - 1, static_cast<size_t>((v - lo) / w)) : 0;
        ++m.counts[b];
      }
    }
    h.marginals_.push_back(std::move(m));
  }
  return h;
}

double HistogramSynopsis::bucket_lo(size_t b) const {
  return lo_ + (hi_ - lo_) * static_cast<double>(b) / static_cast<double>(counts_.size());
}

double HistogramSynopsis::bucket_hi(size_t b) const {
  return lo_ + (hi_ - lo_) * static_cast<double>(b + 1) / static_cast<double>(counts_.size());
}

BaselineInterval HistogramSynopsis::bound(const QuerySpec& query) const {
  if (query.aggregate != AggKind::Sum && query.aggregate != AggKind::Count)
    throw ConfigError("histogram baseline supports SUM and COUNT queries");
  BaselineInterval out;
  if (query.predicate.empty_marked) return out;  // nothing matches: [0, 0]

  // Independence fraction from secondary-attribute predicates.
  double fraction = 1.0;
  for (const auto& [attr, atom] : query.predicate.atoms) {
    if (attr == agg_attr_) continue;
    const Marginal* m = nullptr;
    for (const auto& cand : marginals_)
      if (cand.attr == attr) m = &cand;
    if (!m) throw SchemaError("unknown attribute in histogram query: " + attr);
    if (total_ == 0) {
      fraction = 0;
      break;
    }
    double mass = 0;
    if (m->categorical) {
      const CatSet& cs = std::get<CatSet>(atom);
      for (size_t v = 0; v < m->values.size(); ++v)
        if (cs.contains(m->values[v])) mass += static_cast<double>(m->counts[v]);
    } else {
      const Interval& iv = std::get<Interval>(atom);
      for (size_t b = 0; b < m->counts.size(); ++b) {
        double blo = m->edges[b], bhi = m->edges[b + 1];
        Interval bucket{blo, bhi, false, b + 1 != m->counts.size()};
        Interval inter = Interval::intersect(bucket, iv);
        if (inter.empty()) continue;
        double w = bhi - blo;
        double overlap = w > 0 ? (inter.hi - inter.lo) / w : 1.0;
        Interval check = Interval::intersect(bucket, iv);
        if (check == bucket) overlap = 1.0;
        mass += static_cast<double>(m->counts[b]) * std::min(1.0, overlap);
      }
    }
    fraction *= mass / static_cast<double>(total_);
  }

  Interval value_iv = Interval::all();
  auto it = query.predicate.atoms.find(agg_attr_);
  if (it != query.predicate.atoms.end()) value_iv = std::get<Interval>(it->second);

  double lo_sum = 0, hi_sum = 0;
  for (size_t b = 0; b < counts_.size(); ++b) {
    if (counts_[b] == 0) continue;
    bool last = b + 1 == counts_.size();
    Interval bucket{bucket_lo(b), bucket_hi(b), false, !last};
    Interval inter = Interval::intersect(bucket, value_iv);
    if (inter.empty()) continue;
    bool full = inter == bucket;
    double cnt = static_cast<double>(counts_[b]) * fraction;
    double c_lo = full ? std::floor(cnt) : 0.0;
    double c_hi = std::ceil(cnt);
    if (query.aggregate == AggKind::Count) {
      lo_sum += c_lo;
      hi_sum += c_hi;
    } else {
      double vl = inter.lo, vh = inter.hi;
      lo_sum += vl >= 0 ? c_lo * vl : c_hi * vl;
      hi_sum += vh >= 0 ? c_hi * vh : c_lo * vh;
    }
  }
  out.lo = lo_sum;
  out.hi = hi_sum;
  return out;
}

PCSet HistogramSynopsis::to_pcset() const {
  double hi = std::max(hi_, lo_);
  auto schema = std::make_shared<const Schema>(
      std::vector<AttributeDomain>{{agg_attr_, AttrKind::Numeric, lo_, hi, {}}});
  std::vector<PredicateConstraint> pcs;
  for (size_t b = 0; b < counts_.size(); ++b) {
    bool last = b + 1 == counts_.size();
    double blo = bucket_lo(b);
    double bhi = std::min(bucket_hi(b), hi);
    PredicateConstraint pc;
    pc.id = "bucket" + std::to_string(b);
    pc.psi.with(agg_attr_, Interval{blo, bhi, false, !last && blo < bhi});
    pc.nu.ranges[agg_attr_] = {blo, bhi};
    pc.kappa = {counts_[b], counts_[b]};
    pcs.push_back(std::move(pc));
  }
  return PCSet(std::move(schema), std::move(pcs));
}

}  // namespace rangebound
