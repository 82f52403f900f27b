// SPDX-License-Identifier: Apache-2.0
#include "csv.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "timeparse.hpp"

namespace rangebound {

namespace {

// One CSV record honoring quotes; returns false on clean EOF.
bool read_record(std::istream& in, std::vector<std::string>& fields, size_t& line) {
  fields.clear();
  std::string field;
  bool quoted = false, any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += static_cast<char>(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else {
      field += static_cast<char>(c);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

CsvResult read_csv(std::istream& in, SchemaPtr schema, bool strict) {
  CsvResult out;
  out.relation.schema = schema;
  size_t line = 1;
  std::vector<std::string> fields;
  if (!read_record(in, fields, line)) return out;  // empty file: empty relation

  std::vector<size_t> column_attr(fields.size());
  for (size_t i = 0; i < fields.size(); ++i) column_attr[i] = schema->index_of(fields[i]);
  if (fields.size() != schema->size())
    throw ConfigError("CSV header has " + std::to_string(fields.size()) +
                      " columns; schema has " + std::to_string(schema->size()));

  size_t record_line;
  while (record_line = line, read_record(in, fields, line)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
    if (fields.size() != column_attr.size()) {
      std::string msg = "wrong column count";
      if (strict) throw ConfigError("line " + std::to_string(record_line) + ": " + msg);
      out.skipped.push_back({record_line, msg});
      continue;
    }
    Tuple t;
    t.values.resize(schema->size());
    bool ok = true;
    std::string error;
    for (size_t i = 0; i < fields.size() && ok; ++i) {
      const auto& dom = schema->at(column_attr[i]);
      if (dom.kind == AttrKind::Categorical) {
        t.values[column_attr[i]] = fields[i];
        continue;
      }
      const char* s = fields[i].c_str();
      char* end = nullptr;
      double v = std::strtod(s, &end);
      if (end == s + fields[i].size() && !fields[i].empty()) {
        t.values[column_attr[i]] = v;
      } else if (auto ts = parse_timestamp(fields[i])) {
        t.values[column_attr[i]] = *ts;
      } else {
        ok = false;
        error = "attribute " + dom.name + ": malformed number '" + fields[i] + "'";
      }
    }
    if (!ok) {
      if (strict) throw ConfigError("line " + std::to_string(record_line) + ": " + error);
      out.skipped.push_back({record_line, error});
      continue;
    }
    out.relation.rows.push_back(std::move(t));
  }
  return out;
}

CsvResult read_csv_file(const std::string& path, SchemaPtr schema, bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open CSV file: " + path);
  return read_csv(in, std::move(schema), strict);
}

void write_csv(std::ostream& out, const Relation& relation) {
  const Schema& schema = *relation.schema;
  for (size_t i = 0; i < schema.size(); ++i) out << (i ? "," : "") << schema.at(i).name;
  out << "\n";
  std::ostringstream num;
  num.precision(17);
  for (const Tuple& t : relation.rows) {
    for (size_t i = 0; i < schema.size(); ++i) {
      if (i) out << ",";
      if (const double* v = std::get_if<double>(&t.values[i])) {
        num.str("");
        num << *v;
        out << num.str();
      } else {
        const std::string& s = std::get<std::string>(t.values[i]);
        if (s.find_first_of(",\"\n") != std::string::npos) {
          out << '"';
          for (char c : s) {
            if (c == '"') out << '"';
            out << c;
          }
          out << '"';
        } else {
          out << s;
        }
      }
    }
    out << "\n";
  }
}

}  // namespace rangebound
