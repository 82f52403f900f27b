/* SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the rangebound engine. All functions return a status code;
 * results are JSON strings allocated by the library and released with
 * rb_string_free(). A context holds the loaded inputs (constraint set, data,
 * join graph) plus the last error message.
 */
#ifndef RANGEBOUND_H
#define RANGEBOUND_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined _WIN32
#define RB_API __declspec(dllexport)
#else
#define RB_API __attribute__((visibility("default")))
#endif

/* Status codes; nonzero values match the CLI exit codes. */
enum {
  RB_OK = 0,
  RB_E_INTERNAL = 1,   /* unexpected failure; see rb_last_error */
  RB_E_USAGE = 2,      /* bad inputs: malformed JSON/SQL/flags */
  RB_E_NOT_CLOSED = 3, /* constraint set does not cover the query region */
  RB_E_INFEASIBLE = 4  /* constraint windows contradict each other */
};

typedef struct rb_context rb_context;

RB_API rb_context *rb_context_create(void);
RB_API void rb_context_destroy(rb_context *ctx);

/* Human-readable message for the most recent failing call on this context. */
RB_API const char *rb_last_error(const rb_context *ctx);

/* Engine parallelism cap (experiment queries, decomposition subtrees). */
RB_API int rb_set_threads(rb_context *ctx, int threads);

/* Load a constraint set: {"schema":{...},"constraints":[...]}. */
RB_API int rb_load_pcs_json(rb_context *ctx, const char *json_text);

/* Load existing (certain) rows from a CSV file against the loaded schema. */
RB_API int rb_load_data_csv(rb_context *ctx, const char *path, int strict);

/* Load a join graph: {"relations":[{"name":...,"pcs":{...}}]}. */
RB_API int rb_load_join_graph_json(rb_context *ctx, const char *json_text);

/* Aggregate bounds for a SQL query against the loaded constraint set (and
 * data, when loaded). early_stop_depth 0 disables early stopping. */
RB_API int rb_bound(rb_context *ctx, const char *query_sql, int early_stop_depth,
                    char **out_json);

/* Cell decomposition; query_sql may be NULL for no pushdown. */
RB_API int rb_decompose(rb_context *ctx, const char *query_sql, int early_stop_depth,
                        char **out_json);

/* Constraint validation plus closure check; query_sql may be NULL. */
RB_API int rb_check(rb_context *ctx, const char *query_sql, char **out_json);

/* Join bounds; method is "naive", "gwe", or "best". */
RB_API int rb_join_bound(rb_context *ctx, const char *query_sql, const char *method,
                         char **out_json);

/* Parse a query to its JSON form; validates against the loaded schema when
 * one is present. */
RB_API int rb_parse_query(rb_context *ctx, const char *query_sql, char **out_json);

/* Run an experiment from a config JSON; returns metrics JSON and optionally
 * writes the per-query CSV to csv_path (pass NULL to skip). */
RB_API int rb_run_experiment(rb_context *ctx, const char *config_json,
                             const char *csv_path, char **out_json);

RB_API void rb_string_free(char *s);

RB_API unsigned rb_abi_version(void);

#ifdef __cplusplus
}
#endif

#endif /* RANGEBOUND_H */
