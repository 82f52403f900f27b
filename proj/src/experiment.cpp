// SPDX-License-Identifier: Apache-2.0
#include "experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <sstream>

#include "csv.hpp"

namespace rangebound {

namespace {

RemovalMode removal_from_string(const std::string& s) {
  if (s == "correlated-top") return RemovalMode::CorrelatedTop;
  if (s == "random") return RemovalMode::Random;
  throw ConfigError("unknown removal mode: " + s);
}

AggKind agg_from_string(const std::string& s) {
  if (s == "SUM" || s == "sum") return AggKind::Sum;
  if (s == "COUNT" || s == "count") return AggKind::Count;
  if (s == "AVG" || s == "avg") return AggKind::Avg;
  if (s == "MIN" || s == "min") return AggKind::Min;
  if (s == "MAX" || s == "max") return AggKind::Max;
  throw ConfigError("unknown aggregate: " + s);
}

}  // namespace

ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig c;
  if (j.contains("dataset")) {
    const Json& d = j["dataset"];
    if (d.contains("csv")) {
      c.csv_path = d["csv"].get<std::string>();
      if (!d.contains("schema")) throw ConfigError("CSV dataset requires a schema");
      c.csv_schema = schema_from_json(d["schema"]);
    }
    if (d.contains("synthetic")) {
      c.synthetic_rows = d["synthetic"].value("rows", 100000ULL);
      c.synthetic_seed = d["synthetic"].value("seed", 1ULL);
    }
  }
  if (j.contains("scenario")) {
    const Json& s = j["scenario"];
    c.agg_attr = s.value("aggregate_attr", c.agg_attr);
    c.missing_fraction = s.value("missing_fraction", c.missing_fraction);
    if (s.contains("mode")) c.removal = removal_from_string(s["mode"].get<std::string>());
    c.scenario_seed = s.value("seed", c.scenario_seed);
  }
  if (j.contains("pc")) {
    const Json& p = j["pc"];
    c.pc_count = p.value("n", c.pc_count);
    c.rand_pc_count = p.value("rand_n", c.rand_pc_count);
    if (p.contains("partition_attrs")) {
      c.partition_attrs.clear();
      for (const auto& a : p["partition_attrs"]) c.partition_attrs.push_back(a.get<std::string>());
    }
    c.rand_pc_seed = p.value("rand_seed", c.rand_pc_seed);
    c.noise_sigma = p.value("noise_sigma", c.noise_sigma);
    c.noise_seed = p.value("noise_seed", c.noise_seed);
  }
  if (j.contains("queries")) {
    const Json& q = j["queries"];
    c.query_count = q.value("count", c.query_count);
    if (q.contains("aggregates")) {
      c.aggregates.clear();
      for (const auto& a : q["aggregates"]) c.aggregates.push_back(agg_from_string(a.get<std::string>()));
    }
    if (q.contains("predicate_attrs")) {
      c.predicate_attrs.clear();
      for (const auto& a : q["predicate_attrs"])
        c.predicate_attrs.push_back(a.get<std::string>());
    }
    c.query_seed = q.value("seed", c.query_seed);
  }
  if (j.contains("baselines")) {
    c.baselines.clear();
    for (const auto& b : j["baselines"]) c.baselines.push_back(b.get<std::string>());
  }
  c.confidence = j.value("confidence", c.confidence);
  c.histogram_buckets = j.value("histogram_buckets", c.histogram_buckets);
  c.record_timing = j.value("record_timing", c.record_timing);
  c.threads = j.value("threads", c.threads);
  return c;
}

namespace {

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  std::string s = os.str();
  if (std::strtod(s.c_str(), nullptr) == v) {
    for (int prec = 6; prec < 17; ++prec) {
      std::ostringstream trial;
      trial.precision(prec);
      trial << v;
      if (std::strtod(trial.str().c_str(), nullptr) == v) return trial.str();
    }
  }
  return s;
}

struct GeneratedQuery {
  std::string sql;
  QuerySpec spec;
};

std::vector<GeneratedQuery> generate_queries(const ExperimentConfig& c, const Schema& schema) {
  SplitMix64 rng(c.query_seed);
  std::vector<GeneratedQuery> out;
  out.reserve(c.query_count);
  for (size_t qi = 0; qi < c.query_count; ++qi) {
    AggKind agg = c.aggregates[rng.next_below(c.aggregates.size())];
    std::string text = std::string("SELECT ") + agg_name(agg) + "(" +
                       (agg == AggKind::Count ? "*" : c.agg_attr) + ") FROM data";
    size_t natoms = 1 + rng.next_below(c.predicate_attrs.size());
    std::vector<std::string> attrs = c.predicate_attrs;
    for (size_t i = 0; i < natoms; ++i) {
      size_t j = i + rng.next_below(attrs.size() - i);
      std::swap(attrs[i], attrs[j]);
    }
    bool first = true;
    for (size_t i = 0; i < natoms; ++i) {
      const auto& dom = schema.at(schema.index_of(attrs[i]));
      double a = rng.next_range(dom.lo, dom.hi);
      double b = rng.next_range(dom.lo, dom.hi);
      if (a > b) std::swap(a, b);
      text += (first ? " WHERE " : " AND ");
      text += attrs[i] + " >= " + format_number(a) + " AND " + attrs[i] +
              " <= " + format_number(b);
      first = false;
    }
    GeneratedQuery g;
    g.sql = text;
    g.spec = parse_query(text, &schema);
    out.push_back(std::move(g));
  }
  return out;
}

// Compiled predicate for fast scans over large relations.
struct CompiledPredicate {
  std::vector<std::pair<size_t, Interval>> numeric;
  std::vector<std::pair<size_t, const CatSet*>> categorical;
  bool empty_marked = false;

  CompiledPredicate(const Predicate& p, const Schema& schema) {
    empty_marked = p.empty_marked;
    for (const auto& [attr, atom] : p.atoms) {
      size_t idx = schema.index_of(attr);
      if (const Interval* iv = std::get_if<Interval>(&atom))
        numeric.push_back({idx, *iv});
      else
        categorical.push_back({idx, &std::get<CatSet>(atom)});
    }
  }

  bool matches(const Tuple& t) const {
    if (empty_marked) return false;
    for (const auto& [idx, iv] : numeric)
      if (!iv.contains(std::get<double>(t.values[idx]))) return false;
    for (const auto& [idx, cs] : categorical)
      if (!cs->contains(std::get<std::string>(t.values[idx]))) return false;
    return true;
  }
};

struct GroundTruth {
  double truth = 0;          // aggregate over the full dataset
  double certain_sum = 0;    // matching certain rows
  int64_t certain_count = 0;
};

GroundTruth compute_truth(const QuerySpec& q, const Relation& full,
                          const std::vector<char>& is_missing, size_t agg_idx) {
  CompiledPredicate pred(q.predicate, *full.schema);
  GroundTruth g;
  double full_sum = 0;
  int64_t full_count = 0;
  for (size_t r = 0; r < full.rows.size(); ++r) {
    if (!pred.matches(full.rows[r])) continue;
    double v = std::get<double>(full.rows[r].values[agg_idx]);
    full_sum += v;
    ++full_count;
    if (!is_missing[r]) {
      g.certain_sum += v;
      ++g.certain_count;
    }
  }
  g.truth = q.aggregate == AggKind::Count ? static_cast<double>(full_count) : full_sum;
  return g;
}

}  // namespace

std::string MetricsReport::csv() const {
  std::ostringstream os;
  os << "query_id,sql,truth,baseline,lo,hi,failed,overest,micros\n";
  for (const auto& r : rows) {
    os << r.query_id << ",\"";
    for (char ch : r.sql) {
      if (ch == '"') os << '"';
      os << ch;
    }
    os << "\"," << format_number(r.truth) << "," << r.baseline << ",";
    if (!r.undefined) os << format_number(r.lo);
    os << ",";
    if (!r.undefined) os << format_number(r.hi);
    os << "," << (r.failed ? 1 : 0) << ",";
    if (r.overest) os << format_number(*r.overest);
    os << "," << r.micros << "\n";
  }
  return os.str();
}

MetricsReport run_experiment(const ExperimentConfig& config) {
  Relation full = config.csv_path
                      ? read_csv_file(*config.csv_path, config.csv_schema, false).relation
                      : make_synthetic_dataset(config.synthetic_rows, config.synthetic_seed);
  const Schema& schema = *full.schema;
  size_t agg_idx = schema.index_of(config.agg_attr);

  Scenario scenario = make_scenario(std::move(full), config.agg_attr,
                                    config.missing_fraction, config.removal,
                                    config.scenario_seed);
  Relation missing = scenario.missing_rows();
  Relation certain = scenario.certain_rows();
  std::vector<char> is_missing(scenario.full.rows.size(), 0);
  for (size_t i : scenario.missing_index) is_missing[i] = 1;

  // Build each requested estimator once.
  std::optional<PCSet> corr_pc, rand_pc;
  std::optional<SampleEstimator> us1, us10, st1, st10;
  std::optional<HistogramSynopsis> hist;
  bool corr_closed = false, rand_closed = false;
  auto need = [&](const std::string& b) {
    return std::find(config.baselines.begin(), config.baselines.end(), b) !=
           config.baselines.end();
  };
  auto make_corr = [&]() {
    if (corr_pc) return;
    corr_pc = gen_corr_pc(missing, config.partition_attrs, config.agg_attr, config.pc_count);
    if (config.noise_sigma > 0)
      corr_pc = inject_noise(*corr_pc, config.noise_sigma, config.noise_seed);
    corr_closed = check_closure(*corr_pc, std::nullopt).closed;
  };
  if (need("corr-pc")) make_corr();
  if (need("rand-pc")) {
    rand_pc = gen_rand_pc(missing, config.partition_attrs, config.agg_attr,
                          config.rand_pc_count, config.rand_pc_seed);
    if (config.noise_sigma > 0)
      rand_pc = inject_noise(*rand_pc, config.noise_sigma, config.noise_seed + 1);
    rand_closed = check_closure(*rand_pc, std::nullopt).closed;
  }
  std::vector<Predicate> strata;
  if (need("st-1n") || need("st-10n")) {
    make_corr();
    for (const auto& pc : corr_pc->constraints()) strata.push_back(pc.psi);
  }
  size_t n1 = config.pc_count, n10 = 10 * config.pc_count;
  if (need("us-1p") || need("us-1n"))
    us1 = SampleEstimator::build(missing, SampleScheme::Uniform, {}, n1, config.query_seed ^ 0xA5);
  if (need("us-10p") || need("us-10n"))
    us10 = SampleEstimator::build(missing, SampleScheme::Uniform, {}, n10, config.query_seed ^ 0xB6);
  if (need("st-1n"))
    st1 = SampleEstimator::build(missing, SampleScheme::Stratified, strata, n1,
                                 config.query_seed ^ 0xC7);
  if (need("st-10n"))
    st10 = SampleEstimator::build(missing, SampleScheme::Stratified, strata, n10,
                                  config.query_seed ^ 0xD8);
  if (need("hist"))
    hist = HistogramSynopsis::build(missing, config.agg_attr,
                                    config.histogram_buckets ? config.histogram_buckets
                                                             : config.pc_count);

  std::vector<GeneratedQuery> queries = generate_queries(config, schema);

  auto eval_one = [&](size_t qi, const std::string& baseline,
                      const GroundTruth& gt) -> PerQueryResult {
    const GeneratedQuery& gq = queries[qi];
    PerQueryResult row;
    row.query_id = qi;
    row.sql = gq.sql;
    row.baseline = baseline;
    row.truth = gt.truth;

    auto started = std::chrono::steady_clock::now();
    double certain_part = gq.spec.aggregate == AggKind::Count
                              ? static_cast<double>(gt.certain_count)
                              : gt.certain_sum;
    if (baseline == "corr-pc" || baseline == "rand-pc") {
      const PCSet& set = baseline == "corr-pc" ? *corr_pc : *rand_pc;
      BoundOptions opts;
      opts.assume_closed = baseline == "corr-pc" ? corr_closed : rand_closed;
      opts.canonical_witness_limit = 0;
      QueryResult qr = bound_query(gq.spec, set, &certain, opts);
      const ResultRange& r = *qr.single;
      if (r.status == BoundStatus::Exact || r.status == BoundStatus::EarlyStopLoose) {
        row.lo = r.lower;
        row.hi = r.upper;
      } else {
        row.undefined = true;
      }
    } else if (baseline == "hist") {
      BaselineInterval iv = hist->bound(gq.spec);
      row.lo = iv.lo + certain_part;
      row.hi = iv.hi + certain_part;
      row.undefined = iv.undefined;
    } else {
      const SampleEstimator* est = nullptr;
      IntervalKind kind = IntervalKind::Nonparametric;
      if (baseline == "us-1p") {
        est = &*us1;
        kind = IntervalKind::Parametric;
      } else if (baseline == "us-10p") {
        est = &*us10;
        kind = IntervalKind::Parametric;
      } else if (baseline == "us-1n") {
        est = &*us1;
      } else if (baseline == "us-10n") {
        est = &*us10;
      } else if (baseline == "st-1n") {
        est = &*st1;
      } else if (baseline == "st-10n") {
        est = &*st10;
      } else {
        throw ConfigError("unknown baseline: " + baseline);
      }
      BaselineInterval iv = est->interval(gq.spec, kind, config.confidence);
      if (iv.undefined) {
        // No sampled row matches: the estimator degenerates to the certain
        // part alone; it fails whenever the missing part actually matters.
        row.undefined = true;
        row.lo = row.hi = certain_part;
      } else {
        row.lo = iv.lo + certain_part;
        row.hi = iv.hi + certain_part;
      }
    }
    auto finished = std::chrono::steady_clock::now();
    if (config.record_timing)
      row.micros =
          std::chrono::duration_cast<std::chrono::microseconds>(finished - started).count();

    double eps = 1e-9 * std::max(1.0, std::fabs(row.truth));
    row.failed = row.truth < row.lo - eps || row.truth > row.hi + eps;
    if (row.truth > 0 && !row.failed) row.overest = row.hi / row.truth;
    return row;
  };

  MetricsReport report;
  size_t total = queries.size() * config.baselines.size();
  report.rows.resize(total);
  auto task = [&](size_t qi) {
    GroundTruth gt = compute_truth(queries[qi].spec, scenario.full, is_missing, agg_idx);
    for (size_t b = 0; b < config.baselines.size(); ++b)
      report.rows[qi * config.baselines.size() + b] = eval_one(qi, config.baselines[b], gt);
  };
  int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (size_t qi = 0; qi < queries.size(); ++qi) task(qi);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::future<void>> workers;
    for (int w = 0; w < threads; ++w) {
      workers.push_back(std::async(std::launch::async, [&]() {
        for (;;) {
          size_t qi = next.fetch_add(1);
          if (qi >= queries.size()) return;
          task(qi);
        }
      }));
    }
    for (auto& w : workers) w.get();
  }

  Json per_baseline = Json::object();
  for (const auto& baseline : config.baselines) {
    size_t failures = 0, undefined = 0, count = 0;
    std::vector<double> overests;
    double micros_sum = 0;
    for (const auto& r : report.rows) {
      if (r.baseline != baseline) continue;
      ++count;
      if (r.failed) ++failures;
      if (r.undefined) ++undefined;
      if (r.overest) overests.push_back(*r.overest);
      micros_sum += static_cast<double>(r.micros);
    }
    Json jb;
    jb["queries"] = count;
    jb["failure_rate"] = count ? static_cast<double>(failures) / static_cast<double>(count) : 0;
    jb["failures"] = failures;
    jb["undefined"] = undefined;
    if (!overests.empty()) {
      std::sort(overests.begin(), overests.end());
      jb["median_overestimation"] = overests[overests.size() / 2];
    } else {
      jb["median_overestimation"] = nullptr;
    }
    jb["mean_micros"] = count ? micros_sum / static_cast<double>(count) : 0;
    per_baseline[baseline] = std::move(jb);
  }
  report.metrics =
      Json{{"per_baseline", std::move(per_baseline)},
           {"queries", queries.size()},
           {"missing_rows", missing.rows.size()},
           {"dataset_rows", scenario.full.rows.size()}};
  return report;
}

}  // namespace rangebound
