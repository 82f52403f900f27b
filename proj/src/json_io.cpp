// SPDX-License-Identifier: Apache-2.0
#include "json_io.hpp"

#include <cmath>

namespace rangebound {

namespace {

[[noreturn]] void bad(const std::string& what) { throw ConfigError("invalid JSON: " + what); }

double get_number(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) bad(std::string("missing number '") + key + "'");
  return j[key].get<double>();
}

}  // namespace

Json schema_to_json(const Schema& schema) {
  Json attrs = Json::array();
  for (const auto& a : schema.attributes()) {
    Json ja;
    ja["name"] = a.name;
    if (a.kind == AttrKind::Numeric) {
      ja["kind"] = "numeric";
      ja["lo"] = a.lo;
      ja["hi"] = a.hi;
    } else {
      ja["kind"] = "categorical";
      ja["values"] = a.values;
    }
    attrs.push_back(std::move(ja));
  }
  return Json{{"attributes", std::move(attrs)}};
}

SchemaPtr schema_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("attributes") || !j["attributes"].is_array())
    bad("schema requires an 'attributes' array");
  std::vector<AttributeDomain> attrs;
  for (const auto& ja : j["attributes"]) {
    AttributeDomain a;
    if (!ja.contains("name") || !ja["name"].is_string()) bad("attribute without a name");
    a.name = ja["name"].get<std::string>();
    std::string kind = ja.value("kind", "numeric");
    if (kind == "numeric") {
      a.kind = AttrKind::Numeric;
      a.lo = get_number(ja, "lo");
      a.hi = get_number(ja, "hi");
    } else if (kind == "categorical") {
      a.kind = AttrKind::Categorical;
      if (!ja.contains("values") || !ja["values"].is_array())
        bad("categorical attribute without 'values'");
      for (const auto& v : ja["values"]) a.values.push_back(v.get<std::string>());
    } else {
      bad("unknown attribute kind: " + kind);
    }
    attrs.push_back(std::move(a));
  }
  return std::make_shared<const Schema>(std::move(attrs));
}

Json predicate_to_json(const Predicate& p) {
  Json atoms = Json::object();
  for (const auto& [attr, atom] : p.atoms) {
    if (const Interval* iv = std::get_if<Interval>(&atom)) {
      Json ja = Json::object();
      if (std::isfinite(iv->lo)) ja["lo"] = iv->lo;
      if (std::isfinite(iv->hi)) ja["hi"] = iv->hi;
      if (iv->lo_open) ja["lo_open"] = true;
      if (iv->hi_open) ja["hi_open"] = true;
      atoms[attr] = std::move(ja);
    } else {
      atoms[attr] = Json{{"in", std::get<CatSet>(atom).values}};
    }
  }
  Json out{{"atoms", std::move(atoms)}};
  if (p.empty_marked) out["empty"] = true;
  return out;
}

Predicate predicate_from_json(const Json& j) {
  Predicate p;
  if (!j.is_object()) bad("predicate must be an object");
  if (j.value("empty", false)) p.empty_marked = true;
  if (!j.contains("atoms")) return p;
  if (!j["atoms"].is_object()) bad("predicate 'atoms' must be an object");
  for (const auto& [attr, ja] : j["atoms"].items()) {
    if (ja.contains("in")) {
      std::vector<std::string> vals;
      for (const auto& v : ja["in"]) vals.push_back(v.get<std::string>());
      if (vals.empty()) bad("empty membership atom on " + attr);
      p.atoms[attr] = CatSet::of(std::move(vals));
    } else {
      Interval iv;
      if (ja.contains("lo")) iv.lo = ja["lo"].get<double>();
      if (ja.contains("hi")) iv.hi = ja["hi"].get<double>();
      iv.lo_open = ja.value("lo_open", false);
      iv.hi_open = ja.value("hi_open", false);
      if (iv.empty()) bad("empty interval atom on " + attr);
      p.atoms[attr] = iv;
    }
  }
  return p;
}

Json pcset_to_json(const PCSet& set) {
  Json constraints = Json::array();
  for (const auto& pc : set.constraints()) {
    Json nu = Json::object();
    for (const auto& [attr, range] : pc.nu.ranges)
      nu[attr] = Json{{"lo", range.first}, {"hi", range.second}};
    constraints.push_back(Json{{"id", pc.id},
                               {"psi", predicate_to_json(pc.psi)},
                               {"nu", std::move(nu)},
                               {"kappa", Json{{"kl", pc.kappa.kl}, {"ku", pc.kappa.ku}}}});
  }
  return Json{{"schema", schema_to_json(set.schema())}, {"constraints", std::move(constraints)}};
}

PCSet pcset_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("schema")) bad("constraint set requires 'schema'");
  SchemaPtr schema = schema_from_json(j["schema"]);
  if (!j.contains("constraints") || !j["constraints"].is_array())
    bad("constraint set requires a 'constraints' array");
  std::vector<PredicateConstraint> pcs;
  size_t auto_id = 0;
  for (const auto& jc : j["constraints"]) {
    PredicateConstraint pc;
    pc.id = jc.contains("id") ? jc["id"].get<std::string>() : "pc" + std::to_string(auto_id);
    ++auto_id;
    if (jc.contains("psi")) pc.psi = predicate_from_json(jc["psi"]);
    if (jc.contains("nu")) {
      for (const auto& [attr, jr] : jc["nu"].items())
        pc.nu.ranges[attr] = {get_number(jr, "lo"), get_number(jr, "hi")};
    }
    if (!jc.contains("kappa")) bad("constraint " + pc.id + " requires 'kappa'");
    pc.kappa.kl = jc["kappa"].value("kl", 0LL);
    pc.kappa.ku = jc["kappa"].value("ku", 0LL);
    pcs.push_back(std::move(pc));
  }
  return PCSet(std::move(schema), std::move(pcs));
}

Json tuple_to_json(const Schema& schema, const Tuple& t) {
  Json out = Json::object();
  for (size_t i = 0; i < schema.size(); ++i) {
    if (const double* v = std::get_if<double>(&t.values[i]))
      out[schema.at(i).name] = *v;
    else
      out[schema.at(i).name] = std::get<std::string>(t.values[i]);
  }
  return out;
}

Json cells_to_json(const DecompositionResult& res, const PCSet& set) {
  const Schema& schema = set.schema();
  size_t n = set.size();
  Json cells = Json::array();
  for (const auto& c : res.cells) {
    Json jc;
    jc["signature"] = c.signature(n);
    Json covering = Json::array();
    for (size_t j = 0; j < n; ++j)
      if (c.covers(j)) covering.push_back(set.at(j).id);
    jc["covering"] = std::move(covering);
    Json lower = Json::object(), upper = Json::object();
    for (size_t i = 0; i < schema.size(); ++i) {
      if (schema.at(i).kind != AttrKind::Numeric) continue;
      lower[schema.at(i).name] = c.value_lower[i];
      upper[schema.at(i).name] = c.value_upper[i];
    }
    jc["value_lower"] = std::move(lower);
    jc["value_upper"] = std::move(upper);
    jc["forced_zero"] = c.forced_zero;
    jc["verified"] = c.verified;
    if (!c.inside_clip) jc["outside_query"] = true;
    cells.push_back(std::move(jc));
  }
  Json stats;
  stats["sat_calls"] = res.stats.sat_calls;
  stats["pruned_subtrees"] = res.stats.pruned_subtrees;
  stats["rewriting_hits"] = res.stats.rewriting_hits;
  stats["early_stopped"] = res.stats.early_stopped;
  if (res.stats.depth_limit) stats["depth_limit"] = *res.stats.depth_limit;
  stats["disjoint_fast_path"] = res.stats.disjoint_fast_path;
  return Json{{"cells", std::move(cells)}, {"stats", std::move(stats)}};
}

}  // namespace rangebound
