// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "bound.hpp"
#include "scenario.hpp"

namespace rangebound {

struct ExperimentConfig {
  // Dataset: either a CSV path with a schema, or the synthetic table.
  std::optional<std::string> csv_path;
  SchemaPtr csv_schema;
  size_t synthetic_rows = 100000;
  uint64_t synthetic_seed = 1;

  // Scenario.
  std::string agg_attr = "value";
  double missing_fraction = 0.2;
  RemovalMode removal = RemovalMode::CorrelatedTop;
  uint64_t scenario_seed = 7;

  // Constraint generation.
  size_t pc_count = 2000;
  // Random overlapping constraints exercise the exponential decomposition;
  // they stay at desk scale while the disjoint partition scales to thousands.
  size_t rand_pc_count = 16;
  std::vector<std::string> partition_attrs = {"device", "ts"};
  uint64_t rand_pc_seed = 11;
  double noise_sigma = 0;
  uint64_t noise_seed = 13;

  // Query workload.
  size_t query_count = 1000;
  std::vector<AggKind> aggregates = {AggKind::Sum, AggKind::Count};
  std::vector<std::string> predicate_attrs = {"device", "ts"};
  uint64_t query_seed = 17;

  // Baselines and reporting.
  std::vector<std::string> baselines = {"corr-pc"};
  double confidence = 0.99;
  size_t histogram_buckets = 0;  // 0: same as pc_count
  bool record_timing = true;
  int threads = 1;
};

ExperimentConfig experiment_config_from_json(const Json& j);

struct PerQueryResult {
  size_t query_id = 0;
  std::string sql;
  double truth = 0;
  std::string baseline;
  bool undefined = false;
  double lo = 0, hi = 0;
  bool failed = false;
  std::optional<double> overest;  // hi / truth when truth > 0
  long long micros = 0;
};

struct MetricsReport {
  Json metrics;                      // per-baseline failure rate and medians
  std::vector<PerQueryResult> rows;  // (query, baseline) order
  std::string csv() const;
};

MetricsReport run_experiment(const ExperimentConfig& config);

}  // namespace rangebound
