// SPDX-License-Identifier: Apache-2.0
#include "predicate.hpp"

namespace rangebound {

bool evaluate(const Predicate& p, const Schema& schema, const Tuple& t) {
  if (p.empty_marked) return false;
  for (const auto& [attr, atom] : p.atoms) {
    size_t idx = schema.index_of(attr);
    const auto& dom = schema.at(idx);
    if (const Interval* iv = std::get_if<Interval>(&atom)) {
      if (dom.kind != AttrKind::Numeric)
        throw SchemaError("attribute " + attr + ": interval atom on categorical attribute");
      double v = std::get<double>(t.values[idx]);
      if (!iv->contains(v)) return false;
    } else {
      const CatSet& cs = std::get<CatSet>(atom);
      if (dom.kind != AttrKind::Categorical)
        throw SchemaError("attribute " + attr + ": membership atom on numeric attribute");
      const std::string& v = std::get<std::string>(t.values[idx]);
      if (!cs.contains(v)) return false;
    }
  }
  return true;
}

Predicate conjoin(const Predicate& p, const Predicate& q) {
  if (p.empty_marked || q.empty_marked) return Predicate::make_empty();
  Predicate r = p;
  for (const auto& [attr, atom] : q.atoms) {
    auto it = r.atoms.find(attr);
    if (it == r.atoms.end()) {
      r.atoms.emplace(attr, atom);
      continue;
    }
    if (const Interval* a = std::get_if<Interval>(&it->second)) {
      const Interval* b = std::get_if<Interval>(&atom);
      if (!b) throw SchemaError("attribute " + attr + ": mixing interval and membership atoms");
      Interval m = Interval::intersect(*a, *b);
      if (m.empty()) return Predicate::make_empty();
      it->second = m;
    } else {
      const CatSet& ca = std::get<CatSet>(it->second);
      const CatSet* cb = std::get_if<CatSet>(&atom);
      if (!cb) throw SchemaError("attribute " + attr + ": mixing interval and membership atoms");
      CatSet m = CatSet::intersect(ca, *cb);
      if (m.values.empty()) return Predicate::make_empty();
      it->second = m;
    }
  }
  return r;
}

}  // namespace rangebound
