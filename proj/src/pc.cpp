// SPDX-License-Identifier: Apache-2.0
#include "pc.hpp"

#include <unordered_set>

namespace rangebound {

PCSet::PCSet(SchemaPtr schema, std::vector<PredicateConstraint> constraints)
    : schema_(std::move(schema)), constraints_(std::move(constraints)) {
  if (!schema_) throw SchemaError("constraint set without a schema");
  if (constraints_.empty()) throw SchemaError("constraint set must be nonempty");
  std::unordered_set<std::string> ids;
  for (auto& pc : constraints_) {
    if (pc.id.empty()) throw SchemaError("constraint with empty id");
    if (!ids.insert(pc.id).second) throw SchemaError("duplicate constraint id: " + pc.id);
    for (const auto& [attr, atom] : pc.psi.atoms) {
      size_t idx = schema_->index_of(attr);
      bool numeric = schema_->at(idx).kind == AttrKind::Numeric;
      if (numeric != std::holds_alternative<Interval>(atom))
        throw SchemaError("constraint " + pc.id + ": atom kind mismatch on " + attr);
    }
    for (const auto& [attr, range] : pc.nu.ranges) {
      size_t idx = schema_->index_of(attr);
      const auto& dom = schema_->at(idx);
      if (dom.kind != AttrKind::Numeric)
        throw SchemaError("constraint " + pc.id + ": value range on categorical attribute " + attr);
      if (range.first > range.second)
        throw SchemaError("constraint " + pc.id + ": empty value range on " + attr);
      if (range.first < dom.lo || range.second > dom.hi)
        throw SchemaError("constraint " + pc.id + ": value range outside domain of " + attr);
    }
    if (pc.kappa.kl < 0 || pc.kappa.kl > pc.kappa.ku)
      throw SchemaError("constraint " + pc.id + ": invalid frequency window");
  }
  psi_boxes_.reserve(constraints_.size());
  for (const auto& pc : constraints_) psi_boxes_.push_back(resolve_box(*schema_, pc.psi));
  // Pairwise overlap is exact for this predicate class: each predicate is a
  // single box, so a nonempty per-attribute intersection is a shared point.
  for (size_t i = 0; i < psi_boxes_.size() && pairwise_disjoint_; ++i) {
    if (box_empty(*schema_, psi_boxes_[i])) continue;
    for (size_t j = i + 1; j < psi_boxes_.size(); ++j) {
      if (box_empty(*schema_, psi_boxes_[j])) continue;
      if (boxes_overlap(*schema_, psi_boxes_[i], psi_boxes_[j])) {
        pairwise_disjoint_ = false;
        break;
      }
    }
  }
}

std::pair<double, double> value_range(const Schema& schema, const PredicateConstraint& pc,
                                      size_t attr_index) {
  const auto& dom = schema.at(attr_index);
  auto it = pc.nu.ranges.find(dom.name);
  if (it != pc.nu.ranges.end()) return it->second;
  return {dom.lo, dom.hi};
}

bool nu_satisfied(const Schema& schema, const ValueConstraint& nu, const Tuple& t) {
  for (const auto& [attr, range] : nu.ranges) {
    size_t idx = schema.index_of(attr);
    double v = std::get<double>(t.values[idx]);
    if (v < range.first || v > range.second) return false;
  }
  return true;
}

bool satisfies(const Relation& r, const PredicateConstraint& pc) {
  const Schema& schema = *r.schema;
  int64_t matches = 0;
  for (const Tuple& t : r.rows) {
    if (!evaluate(pc.psi, schema, t)) continue;
    ++matches;
    if (!nu_satisfied(schema, pc.nu, t)) return false;
  }
  return matches >= pc.kappa.kl && matches <= pc.kappa.ku;
}

bool satisfies_set(const Relation& r, const PCSet& set) {
  for (const auto& pc : set.constraints())
    if (!satisfies(r, pc)) return false;
  return true;
}

ClosureResult check_closure(const PCSet& set, const std::optional<Predicate>& query_region) {
  SignedConjunction sc;
  if (query_region) sc.clip = *query_region;
  sc.negatives.reserve(set.size());
  for (const auto& pc : set.constraints()) sc.negatives.push_back(pc.psi);
  auto witness = find_witness(sc, set.schema());
  if (witness) return ClosureResult{false, std::move(witness)};
  return ClosureResult{true, std::nullopt};
}

std::pair<SchemaPtr, PredicateConstraint> direct_product(const Schema& sa,
                                                         const PredicateConstraint& a,
                                                         const Schema& sb,
                                                         const PredicateConstraint& b) {
  std::vector<AttributeDomain> attrs = sa.attributes();
  for (const auto& dom : sb.attributes()) {
    if (sa.has(dom.name)) throw SchemaError("direct product: attribute name collision: " + dom.name);
    attrs.push_back(dom);
  }
  auto schema = std::make_shared<const Schema>(std::move(attrs));

  PredicateConstraint out;
  out.id = a.id + "*" + b.id;
  out.psi = conjoin(a.psi, b.psi);
  out.nu = a.nu;
  for (const auto& [attr, range] : b.nu.ranges) out.nu.ranges[attr] = range;
  out.kappa.kl = a.kappa.kl * b.kappa.kl;
  out.kappa.ku = a.kappa.ku * b.kappa.ku;
  return {std::move(schema), std::move(out)};
}

}  // namespace rangebound
