// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rangebound {

// Malformed schemas, tuples that do not fit a schema, references to unknown
// attributes, invalid constraint components.
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Query text rejected by the parser; `pos` is a 0-based character offset.
struct ParseError : std::runtime_error {
  ParseError(size_t pos_, const std::string& msg)
      : std::runtime_error(msg + " (at offset " + std::to_string(pos_) + ")"),
        pos(pos_),
        message(msg) {}
  size_t pos;
  std::string message;
};

// Bad configuration files, CLI flag combinations, CSV ingestion failures in
// strict mode.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rangebound
