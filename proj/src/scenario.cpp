// SPDX-License-Identifier: Apache-2.0
#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rangebound {

Relation Scenario::missing_rows() const {
  Relation out;
  out.schema = full.schema;
  for (size_t i : missing_index) out.rows.push_back(full.rows[i]);
  return out;
}

Relation Scenario::certain_rows() const {
  Relation out;
  out.schema = full.schema;
  size_t m = 0;
  for (size_t i = 0; i < full.rows.size(); ++i) {
    if (m < missing_index.size() && missing_index[m] == i) {
      ++m;
      continue;
    }
    out.rows.push_back(full.rows[i]);
  }
  return out;
}

Scenario make_scenario(Relation full, const std::string& agg_attr, double fraction,
                       RemovalMode mode, uint64_t seed) {
  if (fraction < 0 || fraction >= 1) throw ConfigError("missing fraction must be in [0, 1)");
  Scenario s;
  s.missing_fraction = fraction;
  s.mode = mode;
  s.seed = seed;
  size_t n = full.rows.size();
  size_t k = static_cast<size_t>(std::llround(fraction * static_cast<double>(n)));
  if (mode == RemovalMode::CorrelatedTop) {
    size_t agg_idx = full.schema->index_of(agg_attr);
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      double va = std::get<double>(full.rows[a].values[agg_idx]);
      double vb = std::get<double>(full.rows[b].values[agg_idx]);
      if (va != vb) return va > vb;
      return a < b;  // ties broken by row index
    });
    s.missing_index.assign(order.begin(), order.begin() + k);
  } else {
    SplitMix64 rng(seed);
    std::vector<size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (size_t i = 0; i < k; ++i) {
      size_t j = i + static_cast<size_t>(rng.next_below(n - i));
      std::swap(pool[i], pool[j]);
    }
    s.missing_index.assign(pool.begin(), pool.begin() + k);
  }
  std::sort(s.missing_index.begin(), s.missing_index.end());
  s.full = std::move(full);
  return s;
}

namespace {

// Quantile cuts that tile the whole attribute domain: the first cut is the
// domain lower end, the last the domain upper end.
std::vector<double> quantile_cuts(std::vector<double> values, double dom_lo, double dom_hi,
                                  size_t parts) {
  std::sort(values.begin(), values.end());
  std::vector<double> cuts;
  cuts.push_back(dom_lo);
  for (size_t i = 1; i < parts; ++i) {
    double q;
    if (values.empty()) {
      q = dom_lo + (dom_hi - dom_lo) * static_cast<double>(i) / static_cast<double>(parts);
    } else {
      size_t pos = i * values.size() / parts;
      q = values[std::min(pos, values.size() - 1)];
    }
    cuts.push_back(q);
  }
  cuts.push_back(dom_hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

struct BucketStats {
  int64_t count = 0;
  double lo = kInf;
  double hi = -kInf;
};

}  // namespace

PCSet gen_corr_pc(const Relation& missing, const std::vector<std::string>& partition_attrs,
                  const std::string& agg_attr, size_t n) {
  if (n == 0) throw ConfigError("constraint count must be positive");
  const Schema& schema = *missing.schema;
  size_t agg_idx = schema.index_of(agg_attr);
  std::vector<size_t> attr_idx;
  for (const auto& a : partition_attrs) {
    size_t i = schema.index_of(a);
    if (schema.at(i).kind != AttrKind::Numeric)
      throw ConfigError("partition attribute must be numeric: " + a);
    attr_idx.push_back(i);
  }
  if (attr_idx.empty()) throw ConfigError("need at least one partition attribute");

  // Split n into a near-even grid across the attributes.
  size_t dims = attr_idx.size();
  std::vector<size_t> parts(dims, 1);
  size_t total = 1;
  while (total < n) {
    // Grow the dimension with the fewest parts.
    size_t best = 0;
    for (size_t d = 1; d < dims; ++d)
      if (parts[d] < parts[best]) best = d;
    ++parts[best];
    total = 1;
    for (size_t d = 0; d < dims; ++d) total *= parts[d];
  }

  std::vector<std::vector<double>> cuts(dims);
  for (size_t d = 0; d < dims; ++d) {
    std::vector<double> vals;
    vals.reserve(missing.rows.size());
    for (const Tuple& t : missing.rows)
      vals.push_back(std::get<double>(t.values[attr_idx[d]]));
    const auto& dom = schema.at(attr_idx[d]);
    cuts[d] = quantile_cuts(std::move(vals), dom.lo, dom.hi, parts[d]);
    parts[d] = cuts[d].size() - 1;
    if (parts[d] == 0) {
      cuts[d] = {dom.lo, dom.hi};
      parts[d] = 1;
    }
  }

  std::vector<size_t> stride(dims, 1);
  size_t buckets = 1;
  for (size_t d = 0; d < dims; ++d) {
    stride[d] = buckets;
    buckets *= parts[d];
  }

  std::vector<BucketStats> stats(buckets);
  for (const Tuple& t : missing.rows) {
    size_t b = 0;
    for (size_t d = 0; d < dims; ++d) {
      double v = std::get<double>(t.values[attr_idx[d]]);
      const auto& c = cuts[d];
      size_t k = static_cast<size_t>(std::upper_bound(c.begin(), c.end(), v) - c.begin());
      k = k == 0 ? 0 : k - 1;
      k = std::min(k, parts[d] - 1);
      b += stride[d] * k;
    }
    BucketStats& bs = stats[b];
    ++bs.count;
    double v = std::get<double>(t.values[agg_idx]);
    bs.lo = std::min(bs.lo, v);
    bs.hi = std::max(bs.hi, v);
  }

  std::vector<PredicateConstraint> pcs;
  pcs.reserve(buckets);
  for (size_t b = 0; b < buckets; ++b) {
    PredicateConstraint pc;
    pc.id = "cell" + std::to_string(b);
    for (size_t d = 0; d < dims; ++d) {
      size_t k = (b / stride[d]) % parts[d];
      bool last = k + 1 == parts[d];
      pc.psi.with(schema.at(attr_idx[d]).name,
                  Interval{cuts[d][k], cuts[d][k + 1], false, !last});
    }
    if (stats[b].count > 0) pc.nu.ranges[agg_attr] = {stats[b].lo, stats[b].hi};
    pc.kappa = {stats[b].count, stats[b].count};
    pcs.push_back(std::move(pc));
  }
  return PCSet(missing.schema, std::move(pcs));
}

PCSet gen_rand_pc(const Relation& missing, const std::vector<std::string>& attrs,
                  const std::string& agg_attr, size_t n, uint64_t seed) {
  const Schema& schema = *missing.schema;
  size_t agg_idx = schema.index_of(agg_attr);
  SplitMix64 rng(seed);

  std::vector<PredicateConstraint> pcs;
  auto fill_truthfully = [&](PredicateConstraint& pc) {
    int64_t count = 0;
    double lo = kInf, hi = -kInf;
    for (const Tuple& t : missing.rows) {
      if (!evaluate(pc.psi, schema, t)) continue;
      ++count;
      double v = std::get<double>(t.values[agg_idx]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (count > 0) pc.nu.ranges[agg_attr] = {lo, hi};
    pc.kappa = {count, count};
  };

  for (size_t i = 0; i < n; ++i) {
    PredicateConstraint pc;
    pc.id = "rand" + std::to_string(i);
    for (const auto& attr : attrs) {
      size_t idx = schema.index_of(attr);
      const auto& dom = schema.at(idx);
      if (dom.kind != AttrKind::Numeric)
        throw ConfigError("random constraints need numeric attributes: " + attr);
      double a = rng.next_range(dom.lo, dom.hi);
      double b = rng.next_range(dom.lo, dom.hi);
      if (a > b) std::swap(a, b);
      pc.psi.with(attr, Interval::closed(a, b));
    }
    fill_truthfully(pc);
    pcs.push_back(std::move(pc));
  }
  // Enclosing constraint so the set covers the whole space.
  PredicateConstraint all;
  all.id = "enclosing";
  fill_truthfully(all);
  pcs.push_back(std::move(all));
  return PCSet(missing.schema, std::move(pcs));
}

PCSet inject_noise(const PCSet& set, double sigma, uint64_t seed) {
  if (sigma < 0) throw ConfigError("noise scale must be nonnegative");
  if (sigma == 0) return set;
  const Schema& schema = set.schema();
  SplitMix64 rng(seed);
  std::vector<PredicateConstraint> pcs = set.constraints();
  for (auto& pc : pcs) {
    for (auto& [attr, range] : pc.nu.ranges) {
      const auto& dom = schema.at(schema.index_of(attr));
      double scale = sigma * (dom.hi - dom.lo);
      double lo = range.first + rng.next_gaussian() * scale;
      double hi = range.second + rng.next_gaussian() * scale;
      if (lo > hi) std::swap(lo, hi);
      range.first = std::clamp(lo, dom.lo, dom.hi);
      range.second = std::clamp(hi, dom.lo, dom.hi);
    }
  }
  return PCSet(set.schema_ptr(), std::move(pcs));
}

Relation make_synthetic_dataset(size_t rows, uint64_t seed) {
  const double month = 30.0 * 86400.0;
  auto schema = std::make_shared<const Schema>(std::vector<AttributeDomain>{
      {"ts", AttrKind::Numeric, 0.0, month, {}},
      {"device", AttrKind::Numeric, 0.0, 49.0, {}},
      {"branch", AttrKind::Categorical, 0, 0, {"east", "north", "south", "west"}},
      {"value", AttrKind::Numeric, 0.0, 5000.0, {}},
  });
  SplitMix64 rng(seed);
  Relation out;
  out.schema = schema;
  out.rows.reserve(rows);
  const std::vector<std::string>& branches = schema->at(2).values;
  for (size_t i = 0; i < rows; ++i) {
    double ts = rng.next_range(0, month);
    double device = static_cast<double>(rng.next_below(50));
    const std::string& branch = branches[rng.next_below(branches.size())];
    double value = std::exp(3.0 + 1.0 * rng.next_gaussian());  // skewed
    value = std::clamp(value, 0.0, 5000.0);
    out.rows.push_back(Tuple{{ts, device, branch, value}});
  }
  return out;
}

}  // namespace rangebound
