// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rng.hpp"
#include "schema.hpp"

namespace rangebound::testutil {

inline AttributeDomain num_attr(const std::string& name, double lo, double hi) {
  AttributeDomain a;
  a.name = name;
  a.kind = AttrKind::Numeric;
  a.lo = lo;
  a.hi = hi;
  return a;
}

inline AttributeDomain cat_attr(const std::string& name, std::vector<std::string> values) {
  AttributeDomain a;
  a.name = name;
  a.kind = AttrKind::Categorical;
  a.values = std::move(values);
  return a;
}

inline SchemaPtr make_schema(std::vector<AttributeDomain> attrs) {
  return std::make_shared<const Schema>(std::move(attrs));
}

inline Tuple tup(std::vector<Value> vals) { return Tuple{std::move(vals)}; }

}  // namespace rangebound::testutil
