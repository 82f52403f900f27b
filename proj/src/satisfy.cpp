// SPDX-License-Identifier: Apache-2.0
#include "satisfy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <unordered_set>

namespace rangebound {

Box resolve_box(const Schema& schema, const Predicate& p) {
  Box box;
  box.atoms.reserve(schema.size());
  for (size_t i = 0; i < schema.size(); ++i) {
    const auto& dom = schema.at(i);
    if (dom.kind == AttrKind::Numeric)
      box.atoms.emplace_back(Interval::closed(dom.lo, dom.hi));
    else
      box.atoms.emplace_back(CatSet{dom.values});
  }
  if (p.empty_marked) {
    // Represent the empty box by voiding the first attribute (or a sentinel
    // when the schema is empty; an empty-schema box is never satisfiable
    // against an EMPTY predicate anyway).
    if (!box.atoms.empty()) {
      if (auto* iv = std::get_if<Interval>(&box.atoms[0]))
        *iv = Interval{1, 0, false, false};
      else
        std::get<CatSet>(box.atoms[0]).values.clear();
    }
    return box;
  }
  if (!intersect_box(schema, box, p)) {
    // Leave the voided slot in place; callers test with box_empty.
  }
  return box;
}

bool intersect_box(const Schema& schema, Box& box, const Predicate& p) {
  if (p.empty_marked) {
    if (!box.atoms.empty()) {
      if (auto* iv = std::get_if<Interval>(&box.atoms[0]))
        *iv = Interval{1, 0, false, false};
      else
        std::get<CatSet>(box.atoms[0]).values.clear();
    }
    return false;
  }
  bool nonempty = true;
  for (const auto& [attr, atom] : p.atoms) {
    size_t idx = schema.index_of(attr);
    if (auto* iv = std::get_if<Interval>(&box.atoms[idx])) {
      const Interval* b = std::get_if<Interval>(&atom);
      if (!b) throw SchemaError("attribute " + attr + ": membership atom on numeric attribute");
      *iv = Interval::intersect(*iv, *b);
      if (iv->empty()) nonempty = false;
    } else {
      auto& cs = std::get<CatSet>(box.atoms[idx]);
      const CatSet* b = std::get_if<CatSet>(&atom);
      if (!b) throw SchemaError("attribute " + attr + ": interval atom on categorical attribute");
      cs = CatSet::intersect(cs, *b);
      if (cs.values.empty()) nonempty = false;
    }
  }
  return nonempty;
}

bool box_empty(const Schema& schema, const Box& box) {
  for (size_t i = 0; i < schema.size(); ++i) {
    if (const auto* iv = std::get_if<Interval>(&box.atoms[i])) {
      if (iv->empty()) return true;
    } else if (std::get<CatSet>(box.atoms[i]).values.empty()) {
      return true;
    }
  }
  return false;
}

bool boxes_overlap(const Schema& schema, const Box& a, const Box& b) {
  for (size_t i = 0; i < schema.size(); ++i) {
    if (const auto* iv = std::get_if<Interval>(&a.atoms[i])) {
      if (Interval::intersect(*iv, b.interval(i)).empty()) return false;
    } else {
      const auto& ca = std::get<CatSet>(a.atoms[i]);
      if (CatSet::intersect(ca, b.catset(i)).values.empty()) return false;
    }
  }
  return true;
}

bool box_subset(const Schema& schema, const Box& inner, const Box& outer) {
  for (size_t i = 0; i < schema.size(); ++i) {
    if (const auto* iv = std::get_if<Interval>(&inner.atoms[i])) {
      const Interval& o = outer.interval(i);
      Interval m = Interval::intersect(*iv, o);
      if (!(m == *iv)) return false;
    } else {
      const auto& ci = std::get<CatSet>(inner.atoms[i]);
      const auto& co = outer.catset(i);
      for (const auto& v : ci.values)
        if (!co.contains(v)) return false;
    }
  }
  return true;
}

namespace {

// Candidate coordinates on one attribute, restricted to a base interval.
std::vector<double> numeric_candidates(const Interval& base,
                                       const std::vector<double>& raw_endpoints) {
  std::vector<double> pts;
  if (base.empty()) return pts;
  std::vector<double> cuts;
  cuts.reserve(raw_endpoints.size() + 2);
  for (double v : raw_endpoints)
    if (v >= base.lo && v <= base.hi && std::isfinite(v)) cuts.push_back(v);
  cuts.push_back(base.lo);
  cuts.push_back(base.hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (size_t i = 0; i < cuts.size(); ++i) {
    if (base.contains(cuts[i])) pts.push_back(cuts[i]);
    if (i + 1 < cuts.size()) {
      double mid = cuts[i] + (cuts[i + 1] - cuts[i]) / 2.0;
      if (mid > cuts[i] && mid < cuts[i + 1] && base.contains(mid)) pts.push_back(mid);
    }
  }
  return pts;
}

// Fixed-width bitmask over the negative boxes.
struct MaskSet {
  std::vector<uint64_t> words;

  static MaskSet full(size_t bits) {
    MaskSet m;
    m.words.assign((bits + 63) / 64, ~0ULL);
    if (bits % 64) m.words.back() = (1ULL << (bits % 64)) - 1;
    if (bits == 0) m.words.clear();
    return m;
  }
  void clear_bit(size_t i) { words[i / 64] &= ~(1ULL << (i % 64)); }
  bool none() const {
    for (uint64_t w : words)
      if (w) return false;
    return true;
  }
  void and_into(const MaskSet& o, MaskSet& out) const {
    out.words.resize(words.size());
    for (size_t i = 0; i < words.size(); ++i) out.words[i] = words[i] & o.words[i];
  }
  bool operator==(const MaskSet& o) const { return words == o.words; }
};

struct MaskHash {
  size_t operator()(const MaskSet& m) const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (uint64_t w : m.words) {
      h ^= w;
      h *= 0x100000001b3ULL;
    }
    return static_cast<size_t>(h);
  }
};

struct MaskEq {
  bool operator()(const MaskSet& a, const MaskSet& b) const { return a == b; }
};

struct AttrCandidates {
  size_t attr_index;
  std::vector<Value> coords;
  std::vector<MaskSet> masks;  // masks[c] bit j set iff negative j contains coords[c]
};

}  // namespace

std::vector<std::vector<Value>> endpoint_grid(const Schema& schema,
                                              std::span<const Box> boxes) {
  std::vector<std::vector<Value>> grid(schema.size());
  for (size_t i = 0; i < schema.size(); ++i) {
    const auto& dom = schema.at(i);
    if (dom.kind == AttrKind::Numeric) {
      std::vector<double> endpoints;
      for (const Box& b : boxes) {
        const Interval& iv = b.interval(i);
        if (std::isfinite(iv.lo)) endpoints.push_back(iv.lo);
        if (std::isfinite(iv.hi)) endpoints.push_back(iv.hi);
      }
      Interval base = Interval::closed(dom.lo, dom.hi);
      for (double v : numeric_candidates(base, endpoints)) grid[i].emplace_back(v);
    } else {
      for (const auto& v : dom.values) grid[i].emplace_back(v);
    }
  }
  return grid;
}

bool box_satisfiable(const Schema& schema, const Box& box,
                     std::span<const Box> negatives, Tuple* witness_out) {
  if (schema.size() == 0) return negatives.empty();
  if (box_empty(schema, box)) return false;

  // Negatives that miss the box entirely cannot block any of its points.
  std::vector<const Box*> relevant;
  relevant.reserve(negatives.size());
  for (const Box& n : negatives) {
    if (box_subset(schema, box, n)) return false;  // box fully inside a negative
    if (boxes_overlap(schema, box, n)) relevant.push_back(&n);
  }
  if (relevant.empty()) {
    if (witness_out) {
      witness_out->values.clear();
      for (size_t i = 0; i < schema.size(); ++i) {
        if (const auto* iv = std::get_if<Interval>(&box.atoms[i])) {
          std::vector<double> cs = numeric_candidates(*iv, {});
          witness_out->values.emplace_back(cs.front());
        } else {
          witness_out->values.emplace_back(std::get<CatSet>(box.atoms[i]).values.front());
        }
      }
    }
    return true;
  }

  size_t nneg = relevant.size();
  std::vector<AttrCandidates> attrs;
  attrs.reserve(schema.size());
  for (size_t i = 0; i < schema.size(); ++i) {
    AttrCandidates ac;
    ac.attr_index = i;
    if (const auto* iv = std::get_if<Interval>(&box.atoms[i])) {
      std::vector<double> endpoints;
      for (const Box* n : relevant) {
        const Interval& ni = n->interval(i);
        if (std::isfinite(ni.lo)) endpoints.push_back(ni.lo);
        if (std::isfinite(ni.hi)) endpoints.push_back(ni.hi);
      }
      for (double v : numeric_candidates(*iv, endpoints)) ac.coords.emplace_back(v);
    } else {
      for (const auto& v : std::get<CatSet>(box.atoms[i]).values) ac.coords.emplace_back(v);
    }
    if (ac.coords.empty()) return false;  // defensive; box_empty covered this
    ac.masks.reserve(ac.coords.size());
    for (const Value& coord : ac.coords) {
      MaskSet m = MaskSet::full(nneg);
      for (size_t j = 0; j < nneg; ++j) {
        bool inside;
        if (const auto* c = std::get_if<double>(&coord))
          inside = relevant[j]->interval(i).contains(*c);
        else
          inside = relevant[j]->catset(i).contains(std::get<std::string>(coord));
        if (!inside) m.clear_bit(j);
      }
      ac.masks.push_back(std::move(m));
    }
    attrs.push_back(std::move(ac));
  }

  // Visit attributes with fewer candidates first; the memo table collapses
  // repeated mask states across the product space.
  std::sort(attrs.begin(), attrs.end(), [](const AttrCandidates& a, const AttrCandidates& b) {
    return a.coords.size() < b.coords.size();
  });

  std::vector<std::unordered_set<MaskSet, MaskHash, MaskEq>> memo(attrs.size());
  std::vector<size_t> chosen(attrs.size(), 0);

  struct Searcher {
    const std::vector<AttrCandidates>& attrs;
    std::vector<std::unordered_set<MaskSet, MaskHash, MaskEq>>& memo;
    std::vector<size_t>& chosen;

    bool run(size_t level, const MaskSet& mask) {
      if (mask.none()) {
        for (size_t l = level; l < attrs.size(); ++l) chosen[l] = 0;
        return true;
      }
      if (level == attrs.size()) return false;
      if (!memo[level].insert(mask).second) return false;
      MaskSet next;
      for (size_t c = 0; c < attrs[level].coords.size(); ++c) {
        mask.and_into(attrs[level].masks[c], next);
        chosen[level] = c;
        if (run(level + 1, next)) return true;
      }
      return false;
    }
  } searcher{attrs, memo, chosen};

  MaskSet start = MaskSet::full(nneg);
  // Level-0 loop mirrors run() so the initial all-ones mask is not memoized.
  bool found = searcher.run(0, start);
  if (found && witness_out) {
    witness_out->values.assign(schema.size(), Value{0.0});
    for (size_t l = 0; l < attrs.size(); ++l)
      witness_out->values[attrs[l].attr_index] = attrs[l].coords[chosen[l]];
  }
  return found;
}

bool is_satisfiable(const SignedConjunction& sc, const Schema& schema) {
  return find_witness(sc, schema).has_value();
}

std::optional<Tuple> find_witness(const SignedConjunction& sc, const Schema& schema) {
  Box box;
  box.atoms.reserve(schema.size());
  for (size_t i = 0; i < schema.size(); ++i) {
    const auto& dom = schema.at(i);
    if (dom.kind == AttrKind::Numeric)
      box.atoms.emplace_back(Interval::closed(dom.lo, dom.hi));
    else
      box.atoms.emplace_back(CatSet{dom.values});
  }
  for (const Predicate& p : sc.positives)
    if (!intersect_box(schema, box, p)) return std::nullopt;
  if (sc.clip && !intersect_box(schema, box, *sc.clip)) return std::nullopt;

  std::vector<Box> negs;
  negs.reserve(sc.negatives.size());
  for (const Predicate& n : sc.negatives) {
    if (n.empty_marked) continue;  // NOT(EMPTY) is always true
    if (n.is_true()) return std::nullopt;  // NOT(TRUE) blocks everything
    negs.push_back(resolve_box(schema, n));
  }

  Tuple w;
  if (box_satisfiable(schema, box, negs, &w)) return w;
  return std::nullopt;
}

}  // namespace rangebound
