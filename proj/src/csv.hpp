// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "schema.hpp"

namespace rangebound {

struct CsvIssue {
  size_t line = 0;
  std::string message;
};

struct CsvResult {
  Relation relation;
  std::vector<CsvIssue> skipped;  // lenient mode: rows dropped with reasons
};

// RFC-4180 CSV with a header row naming the attributes. Values for numeric
// attributes may be numbers or timestamps (converted to epoch seconds).
// Strict mode aborts on the first bad row; lenient mode skips and records it.
CsvResult read_csv(std::istream& in, SchemaPtr schema, bool strict);
CsvResult read_csv_file(const std::string& path, SchemaPtr schema, bool strict);

void write_csv(std::ostream& out, const Relation& relation);

}  // namespace rangebound
