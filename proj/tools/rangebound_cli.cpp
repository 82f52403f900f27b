// SPDX-License-Identifier: Apache-2.0
//
// rangebound: aggregate result-range bounds under predicate constraints.
// Thin shell over the C API: reads files, forwards JSON, maps status codes
// to exit codes. Machine output (JSON) goes to stdout; diagnostics and the
// optional --pretty table go to stderr.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rangebound.h"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(RB_E_USAGE);
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Ctx {
  rb_context* ctx = rb_context_create();
  ~Ctx() { rb_context_destroy(ctx); }
};

int finish(Ctx& c, int code, char* out, bool pretty) {
  if (out) {
    std::cout << out << "\n";
    if (pretty) {
      auto j = nlohmann::json::parse(out, nullptr, false);
      if (!j.is_discarded()) std::cerr << j.dump(2) << "\n";
    }
    rb_string_free(out);
  }
  if (code != RB_OK) std::cerr << "error: " << rb_last_error(c.ctx) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic aggregate bounds over missing-data constraints"};
  app.require_subcommand(1);

  std::string pcs_path, data_path, graph_path, config_path, query, method = "best",
              out_csv;
  int early_stop = 0, threads = 1;
  bool strict = false, pretty = false, stats = false;
  if (const char* env = std::getenv("RANGEBOUND_THREADS")) threads = std::atoi(env);

  auto add_common = [&](CLI::App* sub) {
    sub->add_flag("--pretty", pretty, "mirror indented JSON to stderr");
    sub->add_option("--threads", threads, "engine parallelism cap");
  };

  CLI::App* bound = app.add_subcommand("bound", "aggregate range for a query");
  bound->add_option("--pcs", pcs_path, "constraint-set JSON file")->required();
  bound->add_option("--data", data_path, "existing rows CSV");
  bound->add_option("--query", query, "SQL aggregate query")->required();
  bound->add_option("--early-stop", early_stop, "verify sign prefixes up to this depth only");
  bound->add_flag("--strict", strict, "abort on malformed CSV rows");
  add_common(bound);

  CLI::App* decompose = app.add_subcommand("decompose", "disjoint cell decomposition");
  decompose->add_option("--pcs", pcs_path, "constraint-set JSON file")->required();
  decompose->add_option("--query", query, "query whose predicate clips the cells");
  decompose->add_option("--early-stop", early_stop, "verification depth limit");
  decompose->add_flag("--stats", stats, "include search statistics (always on)");
  add_common(decompose);

  CLI::App* check = app.add_subcommand("check", "validate constraints and closure");
  check->add_option("--pcs", pcs_path, "constraint-set JSON file")->required();
  check->add_option("--query", query, "restrict the closure check to a query region");
  add_common(check);

  CLI::App* join = app.add_subcommand("join-bound", "bounds over natural joins");
  join->add_option("--graph", graph_path, "join-graph JSON file")->required();
  join->add_option("--query", query, "SQL aggregate query")->required();
  join->add_option("--method", method, "naive | gwe | best");
  add_common(join);

  CLI::App* experiment = app.add_subcommand("experiment", "seeded evaluation harness");
  experiment->add_option("--config", config_path, "experiment config JSON")->required();
  experiment->add_option("--out", out_csv, "per-query CSV output path");
  add_common(experiment);

  CLI::App* parse = app.add_subcommand("parse", "parse a query and print its JSON form");
  parse->add_option("--query", query, "SQL aggregate query")->required();
  parse->add_option("--pcs", pcs_path, "schema source for semantic checks");
  add_common(parse);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : RB_E_USAGE;
  }

  Ctx c;
  rb_set_threads(c.ctx, threads < 1 ? 1 : threads);
  char* out = nullptr;
  int code = RB_E_USAGE;

  auto load_pcs = [&]() {
    int rc = rb_load_pcs_json(c.ctx, read_file(pcs_path).c_str());
    if (rc != RB_OK) {
      std::cerr << "error: " << rb_last_error(c.ctx) << "\n";
      std::exit(rc);
    }
  };

  if (app.got_subcommand(bound)) {
    load_pcs();
    if (!data_path.empty()) {
      int rc = rb_load_data_csv(c.ctx, data_path.c_str(), strict ? 1 : 0);
      if (rc != RB_OK) return finish(c, rc, nullptr, false);
    }
    code = rb_bound(c.ctx, query.c_str(), early_stop, &out);
  } else if (app.got_subcommand(decompose)) {
    load_pcs();
    code = rb_decompose(c.ctx, query.empty() ? nullptr : query.c_str(), early_stop, &out);
  } else if (app.got_subcommand(check)) {
    load_pcs();
    code = rb_check(c.ctx, query.empty() ? nullptr : query.c_str(), &out);
  } else if (app.got_subcommand(join)) {
    int rc = rb_load_join_graph_json(c.ctx, read_file(graph_path).c_str());
    if (rc != RB_OK) return finish(c, rc, nullptr, false);
    code = rb_join_bound(c.ctx, query.c_str(), method.c_str(), &out);
  } else if (app.got_subcommand(experiment)) {
    code = rb_run_experiment(c.ctx, read_file(config_path).c_str(),
                             out_csv.empty() ? nullptr : out_csv.c_str(), &out);
  } else if (app.got_subcommand(parse)) {
    if (!pcs_path.empty()) load_pcs();
    code = rb_parse_query(c.ctx, query.c_str(), &out);
  }
  return finish(c, code, out, pretty);
}
