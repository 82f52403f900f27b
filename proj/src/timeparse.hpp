// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

namespace rangebound {

// Parse a timestamp literal to epoch seconds (UTC). Accepted forms:
//   2000-11-11, 2000-11-11 10:20, 2000-11-11T10:20:30
//   Nov-11, Nov-11 10:20  (month-name form; the year defaults to 2000)
// Returns nullopt when the text is not a timestamp.
std::optional<double> parse_timestamp(const std::string& text);

}  // namespace rangebound
