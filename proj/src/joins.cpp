// SPDX-License-Identifier: Apache-2.0
#include "joins.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace rangebound {

namespace {

// Cardinality products can overflow across several relations; clamp high.
constexpr int64_t kCountCap = 1000000000000000LL;  // 1e15

int64_t mul_clamp(int64_t a, int64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kCountCap / b) return kCountCap;
  return a * b;
}

SchemaPtr merge_schemas(const JoinGraph& graph) {
  std::vector<AttributeDomain> attrs;
  std::map<std::string, size_t> seen;
  for (const auto& rel : graph.relations) {
    for (const auto& a : rel.pcs.schema().attributes()) {
      auto it = seen.find(a.name);
      if (it == seen.end()) {
        seen.emplace(a.name, attrs.size());
        attrs.push_back(a);
        continue;
      }
      AttributeDomain& prev = attrs[it->second];
      if (prev.kind != a.kind)
        throw SchemaError("join attribute " + a.name + " has mixed kinds");
      if (a.kind == AttrKind::Numeric) {
        prev.lo = std::max(prev.lo, a.lo);
        prev.hi = std::min(prev.hi, a.hi);
        if (prev.lo > prev.hi)
          throw SchemaError("join attribute " + a.name + " has disjoint domains");
      } else {
        std::vector<std::string> inter;
        std::set_intersection(prev.values.begin(), prev.values.end(), a.values.begin(),
                              a.values.end(), std::back_inserter(inter));
        if (inter.empty())
          throw SchemaError("join attribute " + a.name + " has disjoint domains");
        prev.values = std::move(inter);
      }
    }
  }
  return std::make_shared<const Schema>(std::move(attrs));
}

PredicateConstraint product_pair(const PredicateConstraint& a, const PredicateConstraint& b) {
  PredicateConstraint out;
  out.id = a.id + "*" + b.id;
  out.psi = conjoin(a.psi, b.psi);
  out.nu = a.nu;
  bool value_conflict = false;
  for (const auto& [attr, range] : b.nu.ranges) {
    auto it = out.nu.ranges.find(attr);
    if (it == out.nu.ranges.end()) {
      out.nu.ranges.emplace(attr, range);
      continue;
    }
    double lo = std::max(it->second.first, range.first);
    double hi = std::min(it->second.second, range.second);
    if (lo > hi) {
      // Value constraints from the two sides contradict on a shared
      // attribute: no joined row can match this product's predicate.
      value_conflict = true;
      out.nu.ranges.erase(it);
      continue;
    }
    it->second = {lo, hi};
  }
  if (value_conflict) {
    out.kappa = {0, 0};
  } else {
    out.kappa.kl = mul_clamp(a.kappa.kl, b.kappa.kl);
    out.kappa.ku = mul_clamp(a.kappa.ku, b.kappa.ku);
  }
  return out;
}

size_t find_agg_relation(const JoinGraph& graph, const QuerySpec& query) {
  if (query.aggregate == AggKind::Count && query.target == "*") return 0;
  size_t found = graph.relations.size();
  for (size_t i = 0; i < graph.relations.size(); ++i) {
    if (graph.relations[i].pcs.schema().has(query.target)) {
      if (found != graph.relations.size())
        throw SchemaError("aggregate attribute " + query.target +
                          " appears in more than one relation");
      found = i;
    }
  }
  if (found == graph.relations.size())
    throw SchemaError("aggregate attribute " + query.target + " not found in any relation");
  return found;
}

Predicate restrict_predicate(const Predicate& p, const Schema& schema) {
  Predicate out;
  out.empty_marked = p.empty_marked;
  for (const auto& [attr, atom] : p.atoms)
    if (schema.has(attr)) out.atoms.emplace(attr, atom);
  return out;
}

}  // namespace

const JoinRelation& JoinGraph::by_name(const std::string& name) const {
  for (const auto& r : relations)
    if (r.name == name) return r;
  throw ConfigError("unknown relation: " + name);
}

JoinGraph join_graph_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("relations") || !j["relations"].is_array())
    throw ConfigError("join graph requires a 'relations' array");
  JoinGraph g;
  for (const auto& jr : j["relations"]) {
    JoinRelation rel;
    if (!jr.contains("name")) throw ConfigError("relation without a name");
    rel.name = jr["name"].get<std::string>();
    rel.pcs = pcset_from_json(jr.contains("pcs") ? jr["pcs"] : jr);
    g.relations.push_back(std::move(rel));
  }
  if (g.relations.empty()) throw ConfigError("join graph has no relations");
  return g;
}

std::pair<SchemaPtr, PCSet> join_product_set(const JoinGraph& graph) {
  SchemaPtr schema = merge_schemas(graph);
  std::vector<PredicateConstraint> acc = graph.relations[0].pcs.constraints();
  for (size_t r = 1; r < graph.relations.size(); ++r) {
    std::vector<PredicateConstraint> next;
    for (const auto& a : acc) {
      for (const auto& b : graph.relations[r].pcs.constraints()) {
        PredicateConstraint prod = product_pair(a, b);
        if (prod.psi.empty_marked) continue;  // incompatible on a shared attribute
        next.push_back(std::move(prod));
      }
    }
    acc = std::move(next);
  }
  if (acc.empty())
    throw ConfigError("all constraint products are empty; the join admits no rows");
  return {schema, PCSet(schema, std::move(acc))};
}

RelationSummary relation_summary(const JoinRelation& rel, const QuerySpec& query,
                                 bool need_sum, const std::string& agg_attr,
                                 const BoundOptions& opts) {
  RelationSummary out;
  const Schema& schema = rel.pcs.schema();

  QuerySpec count_q;
  count_q.aggregate = AggKind::Count;
  count_q.target = "*";
  count_q.relations = {rel.name};
  count_q.predicate = restrict_predicate(query.predicate, schema);
  QueryResult cr = bound_query(count_q, rel.pcs, nullptr, opts);
  if (cr.single->status == BoundStatus::NotClosed) {
    out.not_closed = true;
    return out;
  }
  if (cr.single->status == BoundStatus::InfeasibleConstraints) {
    out.infeasible = true;
    return out;
  }
  out.count_upper = cr.single->upper;

  if (need_sum) {
    QuerySpec sum_q = count_q;
    sum_q.aggregate = AggKind::Sum;
    sum_q.target = agg_attr;
    QueryResult sr = bound_query(sum_q, rel.pcs, nullptr, opts);
    if (sr.single->status == BoundStatus::NotClosed) {
      out.not_closed = true;
      return out;
    }
    if (sr.single->status == BoundStatus::InfeasibleConstraints) {
      out.infeasible = true;
      return out;
    }
    out.sum_upper = sr.single->upper;
  }
  return out;
}

CoverVector fec_lp(const JoinGraph& graph, const std::vector<RelationSummary>& summaries,
                   AggKind mode, size_t agg_relation) {
  size_t n = graph.relations.size();
  LinearProgram lp;
  lp.maximize = false;
  lp.objective.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double term = summaries[i].count_upper;
    lp.objective[i] = term > 0 ? std::log(term) : 0.0;
  }
  lp.lower.assign(n, 0.0);
  lp.upper.assign(n, kInf);

  // Cover inequality per attribute of the joined schema.
  std::map<std::string, std::vector<size_t>> containing;
  for (size_t i = 0; i < n; ++i)
    for (const auto& a : graph.relations[i].pcs.schema().attributes())
      containing[a.name].push_back(i);
  for (const auto& [attr, rels] : containing) {
    LinearRow row;
    row.coeffs.assign(n, 0.0);
    for (size_t i : rels) row.coeffs[i] = 1.0;
    row.rel = Relation2::GE;
    row.rhs = 1.0;
    lp.rows.push_back(std::move(row));
  }
  if (mode == AggKind::Sum) {
    LinearRow pin;
    pin.coeffs.assign(n, 0.0);
    pin.coeffs[agg_relation] = 1.0;
    pin.rel = Relation2::EQ;
    pin.rhs = 1.0;
    lp.rows.push_back(std::move(pin));
  }
  SolveOutcome out = solve_lp(lp);
  if (out.status != SolveStatus::Optimal)
    throw ConfigError("edge-cover LP failed; is some attribute covered by no relation?");
  return CoverVector{out.x};
}

ResultRange naive_join_bound(const JoinGraph& graph, const QuerySpec& query,
                             const BoundOptions& opts) {
  auto [schema, product] = join_product_set(graph);
  QuerySpec q = query;
  QueryResult res = bound_query(q, product, nullptr, opts);
  return *res.single;
}

JoinBoundResult gwe_bound(const JoinGraph& graph, const QuerySpec& query,
                          const BoundOptions& opts) {
  JoinBoundResult out;
  out.range = naive_join_bound(graph, query, opts);
  out.naive_upper = out.range.upper;
  if (out.range.status != BoundStatus::Exact &&
      out.range.status != BoundStatus::EarlyStopLoose)
    return out;

  bool is_sum = query.aggregate == AggKind::Sum;
  if (!is_sum && query.aggregate != AggKind::Count) {
    out.fallback_reason = "entropy bound applies to SUM and COUNT only";
    return out;
  }

  size_t agg_rel = find_agg_relation(graph, query);
  if (is_sum) {
    const Schema& schema = graph.relations[agg_rel].pcs.schema();
    const auto& dom = schema.at(schema.index_of(query.target));
    if (dom.lo < 0) {
      // The inequality needs nonnegative weights.
      out.fallback_reason = "aggregate attribute can be negative";
      return out;
    }
  }

  std::vector<RelationSummary> summaries;
  for (size_t i = 0; i < graph.relations.size(); ++i) {
    summaries.push_back(relation_summary(graph.relations[i], query,
                                         is_sum && i == agg_rel, query.target, opts));
    if (summaries.back().not_closed || summaries.back().infeasible) {
      out.fallback_reason = "per-relation summary unavailable for " + graph.relations[i].name;
      return out;
    }
  }
  for (const auto& s : summaries) {
    if (s.count_upper <= 0) {
      out.gwe_applied = true;
      out.gwe_upper = 0;
      out.range.upper = 0;
      return out;
    }
  }

  out.cover = fec_lp(graph, summaries, is_sum ? AggKind::Sum : AggKind::Count, agg_rel);
  double log_bound = 0;
  for (size_t i = 0; i < graph.relations.size(); ++i) {
    if (is_sum && i == agg_rel) continue;
    log_bound += out.cover.c[i] * std::log(summaries[i].count_upper);
  }
  double bound = std::exp(log_bound);
  if (is_sum) bound *= summaries[agg_rel].sum_upper;
  out.gwe_upper = bound;
  out.gwe_applied = true;
  out.range.upper = std::min(out.range.upper, bound);
  return out;
}

JoinBoundResult join_bound(const JoinGraph& graph, const QuerySpec& query,
                           JoinMethod method, const BoundOptions& opts) {
  if (method == JoinMethod::Naive) {
    JoinBoundResult out;
    out.range = naive_join_bound(graph, query, opts);
    out.naive_upper = out.range.upper;
    return out;
  }
  return gwe_bound(graph, query, opts);
}

Json join_result_to_json(const JoinBoundResult& r, const JoinGraph& graph) {
  auto [schema, product] = join_product_set(graph);
  Json j = result_to_json(r.range, product);
  j["naive_upper"] = r.naive_upper;
  if (r.gwe_applied) {
    j["gwe_upper"] = r.gwe_upper;
    Json cover = Json::object();
    for (size_t i = 0; i < graph.relations.size(); ++i)
      cover[graph.relations[i].name] = r.cover.c[i];
    j["cover"] = std::move(cover);
  }
  if (!r.fallback_reason.empty()) j["fallback"] = r.fallback_reason;
  return j;
}

}  // namespace rangebound
