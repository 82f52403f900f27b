// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "decompose.hpp"
#include "pc.hpp"

namespace rangebound {

using Json = nlohmann::json;

// Schema: {"attributes":[{"name":..,"kind":"numeric","lo":..,"hi":..} |
//                        {"name":..,"kind":"categorical","values":[..]}]}
Json schema_to_json(const Schema& schema);
SchemaPtr schema_from_json(const Json& j);

// Predicate: {"atoms":{attr:{"lo":..,"hi":..,"lo_open":..,"hi_open":..} |
//                      {"in":[..]}}}; the EMPTY marker adds "empty":true.
Json predicate_to_json(const Predicate& p);
Predicate predicate_from_json(const Json& j);

// PC set: {"schema":.., "constraints":[{"id":..,"psi":..,"nu":{attr:{"lo":..,"hi":..}},
//          "kappa":{"kl":..,"ku":..}}]}
Json pcset_to_json(const PCSet& set);
PCSet pcset_from_json(const Json& j);

Json tuple_to_json(const Schema& schema, const Tuple& t);

Json cells_to_json(const DecompositionResult& res, const PCSet& set);

}  // namespace rangebound
