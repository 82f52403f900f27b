// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json_io.hpp"
#include "predicate.hpp"

namespace rangebound {

enum class AggKind { Sum, Count, Avg, Min, Max };

const char* agg_name(AggKind k);

// A parsed aggregate query:
//   SELECT agg(attr|*|1) FROM r1[,r2...] [WHERE a op lit AND ...] [GROUP BY g]
struct QuerySpec {
  AggKind aggregate = AggKind::Count;
  std::string target;  // "*" for COUNT(*)
  std::vector<std::string> relations;
  Predicate predicate;  // canonical conjunction; EMPTY-marked if contradictory
  std::optional<std::string> group_by;
};

// Recursive-descent parser for the supported subset. Keywords are
// case-insensitive; atoms are `attr op literal` with op in {=,<,<=,>,>=};
// literals are numbers, single-quoted strings, and timestamps (converted to
// epoch seconds). Atoms on one attribute intersect into a single canonical
// atom; a contradiction yields an EMPTY-marked predicate rather than an
// error. With a schema, attribute references and types are validated.
QuerySpec parse_query(const std::string& text, const Schema* schema);

std::string pretty_print(const QuerySpec& q);

Json queryspec_to_json(const QuerySpec& q);

}  // namespace rangebound
