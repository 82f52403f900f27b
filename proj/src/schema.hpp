// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace rangebound {

enum class AttrKind { Numeric, Categorical };

// One attribute of a schema. Numeric attributes carry a bounded closed range
// [lo, hi]; categorical ones a finite nonempty value set. Bounded domains are
// required so that closure checking can be decided exactly.
struct AttributeDomain {
  std::string name;
  AttrKind kind = AttrKind::Numeric;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::string> values;  // sorted, unique; categorical only

  bool contains_number(double v) const { return kind == AttrKind::Numeric && v >= lo && v <= hi; }
  bool contains_value(const std::string& v) const {
    return kind == AttrKind::Categorical &&
           std::binary_search(values.begin(), values.end(), v);
  }
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<AttributeDomain> attrs) : attrs_(std::move(attrs)) {
    for (size_t i = 0; i < attrs_.size(); ++i) {
      auto& a = attrs_[i];
      if (a.name.empty()) throw SchemaError("attribute with empty name");
      if (!index_.emplace(a.name, i).second)
        throw SchemaError("duplicate attribute name: " + a.name);
      if (a.kind == AttrKind::Numeric) {
        if (!(a.lo <= a.hi))
          throw SchemaError("attribute " + a.name + ": domain lo > hi");
      } else {
        if (a.values.empty())
          throw SchemaError("attribute " + a.name + ": empty categorical domain");
        std::sort(a.values.begin(), a.values.end());
        a.values.erase(std::unique(a.values.begin(), a.values.end()), a.values.end());
      }
    }
  }

  const std::vector<AttributeDomain>& attributes() const { return attrs_; }
  size_t size() const { return attrs_.size(); }
  const AttributeDomain& at(size_t i) const { return attrs_[i]; }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw SchemaError("unknown attribute: " + name);
    return it->second;
  }

 private:
  std::vector<AttributeDomain> attrs_;
  std::unordered_map<std::string, size_t> index_;
};

using SchemaPtr = std::shared_ptr<const Schema>;

// A tuple value: double for numeric attributes, string for categorical.
using Value = std::variant<double, std::string>;

struct Tuple {
  std::vector<Value> values;
};

struct Relation {
  SchemaPtr schema;
  std::vector<Tuple> rows;
};

// True iff the tuple has the right arity and every value lies inside its
// attribute's domain. Arity or type mismatches are schema errors.
inline bool validate_tuple(const Schema& schema, const Tuple& t) {
  if (t.values.size() != schema.size())
    throw SchemaError("tuple arity " + std::to_string(t.values.size()) +
                      " does not match schema arity " + std::to_string(schema.size()));
  for (size_t i = 0; i < schema.size(); ++i) {
    const auto& a = schema.at(i);
    if (a.kind == AttrKind::Numeric) {
      const double* v = std::get_if<double>(&t.values[i]);
      if (!v) throw SchemaError("attribute " + a.name + ": expected numeric value");
      if (!a.contains_number(*v)) return false;
    } else {
      const std::string* v = std::get_if<std::string>(&t.values[i]);
      if (!v) throw SchemaError("attribute " + a.name + ": expected categorical value");
      if (!a.contains_value(*v)) return false;
    }
  }
  return true;
}

}  // namespace rangebound
