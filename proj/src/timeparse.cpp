// SPDX-License-Identifier: Apache-2.0
#include "timeparse.hpp"

#include <array>
#include <cctype>
#include <cstdint>

namespace rangebound {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian civil date.
int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  int64_t era = (y >= 0 ? y : y - 399) / 400;
  unsigned yoe = static_cast<unsigned>(y - era * 400);
  unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

constexpr std::array<const char*, 12> kMonths = {"jan", "feb", "mar", "apr",
                                                 "may", "jun", "jul", "aug",
                                                 "sep", "oct", "nov", "dec"};

bool read_uint(const std::string& s, size_t& i, int max_digits, int& out) {
  int digits = 0;
  out = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) && digits < max_digits) {
    out = out * 10 + (s[i] - '0');
    ++i;
    ++digits;
  }
  return digits > 0;
}

}  // namespace

std::optional<double> parse_timestamp(const std::string& text) {
  size_t i = 0, n = text.size();
  while (i < n && text[i] == ' ') ++i;
  int year = 2000, month = 0, day = 0;

  if (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
    int y;
    size_t start = i;
    if (!read_uint(text, i, 4, y)) return std::nullopt;
    if (i - start != 4 || i >= n || text[i] != '-') return std::nullopt;
    ++i;
    if (!read_uint(text, i, 2, month)) return std::nullopt;
    if (i >= n || text[i] != '-') return std::nullopt;
    ++i;
    if (!read_uint(text, i, 2, day)) return std::nullopt;
    year = y;
  } else {
    if (i + 3 > n) return std::nullopt;
    std::string mon;
    for (size_t k = i; k < i + 3; ++k)
      mon += static_cast<char>(std::tolower(static_cast<unsigned char>(text[k])));
    month = 0;
    for (size_t m = 0; m < kMonths.size(); ++m)
      if (mon == kMonths[m]) month = static_cast<int>(m) + 1;
    if (month == 0) return std::nullopt;
    i += 3;
    if (i >= n || text[i] != '-') return std::nullopt;
    ++i;
    if (!read_uint(text, i, 2, day)) return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;

  int hh = 0, mm = 0, ss = 0;
  if (i < n && (text[i] == ' ' || text[i] == 'T')) {
    ++i;
    if (!read_uint(text, i, 2, hh)) return std::nullopt;
    if (i >= n || text[i] != ':') return std::nullopt;
    ++i;
    if (!read_uint(text, i, 2, mm)) return std::nullopt;
    if (i < n && text[i] == ':') {
      ++i;
      if (!read_uint(text, i, 2, ss)) return std::nullopt;
    }
  }
  while (i < n && text[i] == ' ') ++i;
  if (i != n) return std::nullopt;
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;

  int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  return static_cast<double>(days * 86400 + hh * 3600 + mm * 60 + ss);
}

}  // namespace rangebound
