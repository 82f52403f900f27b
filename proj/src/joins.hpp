// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "bound.hpp"

namespace rangebound {

// One relation of a natural-join query. Attributes with the same name across
// relations are join attributes (indistinguishable).
struct JoinRelation {
  std::string name;
  PCSet pcs;  // schema lives inside
};

struct JoinGraph {
  std::vector<JoinRelation> relations;

  const JoinRelation& by_name(const std::string& name) const;
};

JoinGraph join_graph_from_json(const Json& j);

// Nonnegative per-relation weights covering every join attribute.
struct CoverVector {
  std::vector<double> c;  // aligned with graph.relations
};

// Max COUNT(*) per relation and, for the aggregate relation, max SUM of the
// aggregate attribute; computed by the single-table engine with the query's
// per-relation predicate pushed down.
struct RelationSummary {
  double count_upper = 0;
  double sum_upper = 0;
  bool not_closed = false;
  bool infeasible = false;
};

enum class JoinMethod { Naive, Gwe, Best };

// Cartesian-style bound: all n-ary direct products of per-relation
// constraints, shared join attributes conjoined, EMPTY products dropped, then
// the single-table pipeline on the product set.
ResultRange naive_join_bound(const JoinGraph& graph, const QuerySpec& query,
                             const BoundOptions& opts = {});

// Minimizes sum_i c_i*log(term_i) subject to the cover inequalities; in SUM
// mode the aggregate relation's weight is pinned to 1.
CoverVector fec_lp(const JoinGraph& graph, const std::vector<RelationSummary>& summaries,
                   AggKind mode, size_t agg_relation);

struct JoinBoundResult {
  ResultRange range;
  double naive_upper = 0;
  double gwe_upper = 0;
  bool gwe_applied = false;   // false: fell back to the naive bound
  std::string fallback_reason;
  CoverVector cover;
};

// Entropy-inequality upper bound: product of per-relation COUNT uppers raised
// to the cover weights (times the aggregate relation's SUM upper in SUM
// mode), capped by the naive bound; the lower side comes from the naive path.
JoinBoundResult gwe_bound(const JoinGraph& graph, const QuerySpec& query,
                          const BoundOptions& opts = {});

JoinBoundResult join_bound(const JoinGraph& graph, const QuerySpec& query,
                           JoinMethod method, const BoundOptions& opts = {});

Json join_result_to_json(const JoinBoundResult& r, const JoinGraph& graph);

// Exposed for tests: the merged schema and product constraint set.
std::pair<SchemaPtr, PCSet> join_product_set(const JoinGraph& graph);

RelationSummary relation_summary(const JoinRelation& rel, const QuerySpec& query,
                                 bool need_sum, const std::string& agg_attr,
                                 const BoundOptions& opts);

}  // namespace rangebound
