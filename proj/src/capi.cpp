// SPDX-License-Identifier: Apache-2.0
#include "rangebound.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>

#include "csv.hpp"
#include "experiment.hpp"
#include "joins.hpp"

using namespace rangebound;

struct rb_context {
  std::optional<PCSet> pcs;
  std::optional<Relation> data;
  std::optional<JoinGraph> graph;
  int threads = 1;
  std::string last_error;
};

namespace {

char *dup_string(const std::string &s) {
  char *out = static_cast<char *>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

int fail(rb_context *ctx, int code, const std::string &message) {
  if (ctx) ctx->last_error = message;
  return code;
}

// Translate exceptions and bound statuses into status codes.
template <typename Fn>
int guarded(rb_context *ctx, Fn &&fn) {
  if (!ctx) return RB_E_USAGE;
  try {
    ctx->last_error.clear();
    return fn();
  } catch (const ParseError &e) {
    return fail(ctx, RB_E_USAGE, e.what());
  } catch (const ConfigError &e) {
    return fail(ctx, RB_E_USAGE, e.what());
  } catch (const SchemaError &e) {
    return fail(ctx, RB_E_USAGE, e.what());
  } catch (const std::exception &e) {
    return fail(ctx, RB_E_INTERNAL, e.what());
  }
}

int status_of(const ResultRange &r) {
  if (r.status == BoundStatus::NotClosed) return RB_E_NOT_CLOSED;
  if (r.status == BoundStatus::InfeasibleConstraints) return RB_E_INFEASIBLE;
  return RB_OK;
}

int status_of(const QueryResult &r) {
  if (r.single) return status_of(*r.single);
  for (const auto &[key, range] : r.groups) {
    int s = status_of(range);
    if (s != RB_OK) return s;
  }
  return RB_OK;
}

}  // namespace

extern "C" {

rb_context *rb_context_create(void) { return new rb_context(); }

void rb_context_destroy(rb_context *ctx) { delete ctx; }

const char *rb_last_error(const rb_context *ctx) {
  return ctx ? ctx->last_error.c_str() : "null context";
}

int rb_set_threads(rb_context *ctx, int threads) {
  if (!ctx || threads < 1) return RB_E_USAGE;
  ctx->threads = threads;
  return RB_OK;
}

int rb_load_pcs_json(rb_context *ctx, const char *json_text) {
  return guarded(ctx, [&]() -> int {
    if (!json_text) return fail(ctx, RB_E_USAGE, "null constraint-set text");
    Json j = Json::parse(json_text, nullptr, false);
    if (j.is_discarded()) return fail(ctx, RB_E_USAGE, "constraint set is not valid JSON");
    ctx->pcs = pcset_from_json(j);
    ctx->data.reset();
    return RB_OK;
  });
}

int rb_load_data_csv(rb_context *ctx, const char *path, int strict) {
  return guarded(ctx, [&]() -> int {
    if (!ctx->pcs) return fail(ctx, RB_E_USAGE, "load a constraint set before data");
    if (!path) return fail(ctx, RB_E_USAGE, "null CSV path");
    CsvResult res = read_csv_file(path, ctx->pcs->schema_ptr(), strict != 0);
    ctx->data = std::move(res.relation);
    return RB_OK;
  });
}

int rb_load_join_graph_json(rb_context *ctx, const char *json_text) {
  return guarded(ctx, [&]() -> int {
    if (!json_text) return fail(ctx, RB_E_USAGE, "null join-graph text");
    Json j = Json::parse(json_text, nullptr, false);
    if (j.is_discarded()) return fail(ctx, RB_E_USAGE, "join graph is not valid JSON");
    ctx->graph = join_graph_from_json(j);
    return RB_OK;
  });
}

int rb_bound(rb_context *ctx, const char *query_sql, int early_stop_depth,
             char **out_json) {
  return guarded(ctx, [&]() -> int {
    if (!ctx->pcs) return fail(ctx, RB_E_USAGE, "no constraint set loaded");
    if (!query_sql || !out_json) return fail(ctx, RB_E_USAGE, "null argument");
    QuerySpec q = parse_query(query_sql, &ctx->pcs->schema());
    BoundOptions opts;
    if (early_stop_depth > 0) opts.early_stop_depth = early_stop_depth;
    opts.parallelism = ctx->threads;
    QueryResult res =
        bound_query(q, *ctx->pcs, ctx->data ? &*ctx->data : nullptr, opts);
    *out_json = dup_string(query_result_to_json(res, *ctx->pcs).dump());
    int code = status_of(res);
    if (code == RB_E_NOT_CLOSED) ctx->last_error = "constraint set is not closed over the query region";
    if (code == RB_E_INFEASIBLE) ctx->last_error = "constraint windows are mutually unsatisfiable";
    return code;
  });
}

int rb_decompose(rb_context *ctx, const char *query_sql, int early_stop_depth,
                 char **out_json) {
  return guarded(ctx, [&]() -> int {
    if (!ctx->pcs) return fail(ctx, RB_E_USAGE, "no constraint set loaded");
    if (!out_json) return fail(ctx, RB_E_USAGE, "null output argument");
    DecomposeOptions opts;
    if (query_sql) {
      QuerySpec q = parse_query(query_sql, &ctx->pcs->schema());
      if (!q.predicate.is_true()) opts.clip = q.predicate;
    }
    if (early_stop_depth > 0) opts.early_stop_depth = early_stop_depth;
    opts.parallelism = ctx->threads;
    DecompositionResult res = decompose(*ctx->pcs, opts);
    *out_json = dup_string(cells_to_json(res, *ctx->pcs).dump());
    return RB_OK;
  });
}

int rb_check(rb_context *ctx, const char *query_sql, char **out_json) {
  return guarded(ctx, [&]() -> int {
    if (!ctx->pcs) return fail(ctx, RB_E_USAGE, "no constraint set loaded");
    if (!out_json) return fail(ctx, RB_E_USAGE, "null output argument");
    std::optional<Predicate> region;
    if (query_sql) {
      QuerySpec q = parse_query(query_sql, &ctx->pcs->schema());
      if (!q.predicate.is_true()) region = q.predicate;
    }
    ClosureResult res = check_closure(*ctx->pcs, region);
    Json j;
    j["closed"] = res.closed;
    j["constraints"] = ctx->pcs->size();
    j["pairwise_disjoint"] = ctx->pcs->predicates_pairwise_disjoint();
    if (!res.closed)
      j["counterexample"] = tuple_to_json(ctx->pcs->schema(), *res.counterexample);
    *out_json = dup_string(j.dump());
    if (!res.closed) {
      ctx->last_error = "constraint set is not closed";
      return RB_E_NOT_CLOSED;
    }
    return RB_OK;
  });
}

int rb_join_bound(rb_context *ctx, const char *query_sql, const char *method,
                  char **out_json) {
  return guarded(ctx, [&]() -> int {
    if (!ctx->graph) return fail(ctx, RB_E_USAGE, "no join graph loaded");
    if (!query_sql || !out_json) return fail(ctx, RB_E_USAGE, "null argument");
    JoinMethod m = JoinMethod::Best;
    if (method) {
      std::string s = method;
      if (s == "naive")
        m = JoinMethod::Naive;
      else if (s == "gwe")
        m = JoinMethod::Gwe;
      else if (s == "best")
        m = JoinMethod::Best;
      else
        return fail(ctx, RB_E_USAGE, "unknown method: " + s);
    }
    auto [schema, product] = join_product_set(*ctx->graph);
    QuerySpec q = parse_query(query_sql, &*schema);
    BoundOptions opts;
    opts.parallelism = ctx->threads;
    JoinBoundResult res = join_bound(*ctx->graph, q, m, opts);
    *out_json = dup_string(join_result_to_json(res, *ctx->graph).dump());
    return status_of(res.range);
  });
}

int rb_parse_query(rb_context *ctx, const char *query_sql, char **out_json) {
  return guarded(ctx, [&]() -> int {
    if (!query_sql || !out_json) return fail(ctx, RB_E_USAGE, "null argument");
    QuerySpec q = parse_query(query_sql, ctx->pcs ? &ctx->pcs->schema() : nullptr);
    *out_json = dup_string(queryspec_to_json(q).dump());
    return RB_OK;
  });
}

int rb_run_experiment(rb_context *ctx, const char *config_json, const char *csv_path,
                      char **out_json) {
  return guarded(ctx, [&]() -> int {
    if (!config_json || !out_json) return fail(ctx, RB_E_USAGE, "null argument");
    Json j = Json::parse(config_json, nullptr, false);
    if (j.is_discarded()) return fail(ctx, RB_E_USAGE, "config is not valid JSON");
    ExperimentConfig config = experiment_config_from_json(j);
    if (ctx->threads > 1 && config.threads <= 1) config.threads = ctx->threads;
    MetricsReport report = run_experiment(config);
    if (csv_path) {
      std::ofstream out(csv_path, std::ios::binary);
      if (!out) return fail(ctx, RB_E_USAGE, std::string("cannot write CSV: ") + csv_path);
      out << report.csv();
    }
    *out_json = dup_string(report.metrics.dump());
    return RB_OK;
  });
}

void rb_string_free(char *s) { std::free(s); }

unsigned rb_abi_version(void) { return 1; }

}  // extern "C"
