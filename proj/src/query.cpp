// SPDX-License-Identifier: Apache-2.0
#include "query.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "timeparse.hpp"

namespace rangebound {

const char* agg_name(AggKind k) {
  switch (k) {
    case AggKind::Sum: return "SUM";
    case AggKind::Count: return "COUNT";
    case AggKind::Avg: return "AVG";
    case AggKind::Min: return "MIN";
    case AggKind::Max: return "MAX";
  }
  return "?";
}

namespace {

enum class Tok { Ident, Number, String, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;   // identifier/symbol text, or string contents
  double number = 0;
  size_t pos = 0;
};

struct Lexer {
  const std::string& src;
  size_t i = 0;

  explicit Lexer(const std::string& s) : src(s) {}

  Token next() {
    while (i < src.size() && std::isspace(static_cast<unsigned char>(src[i]))) ++i;
    Token t;
    t.pos = i;
    if (i >= src.size()) return t;
    char c = src[i];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = i;
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_'))
        ++i;
      t.kind = Tok::Ident;
      t.text = src.substr(start, i - start);
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      size_t start = i;
      if (src[i] == '-') ++i;
      while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) ||
                                src[i] == '.' || src[i] == 'e' || src[i] == 'E' ||
                                ((src[i] == '+' || src[i] == '-') &&
                                 (src[i - 1] == 'e' || src[i - 1] == 'E'))))
        ++i;
      std::string num = src.substr(start, i - start);
      t.kind = Tok::Number;
      char* end = nullptr;
      t.number = std::strtod(num.c_str(), &end);
      if (end != num.c_str() + num.size()) throw ParseError(start, "malformed number");
      return t;
    }
    if (c == '\'') {
      ++i;
      std::string out;
      while (i < src.size()) {
        if (src[i] == '\'') {
          if (i + 1 < src.size() && src[i + 1] == '\'') {
            out += '\'';
            i += 2;
            continue;
          }
          ++i;
          t.kind = Tok::String;
          t.text = std::move(out);
          return t;
        }
        out += src[i++];
      }
      throw ParseError(t.pos, "unterminated string literal");
    }
    static const char* two_char[] = {"<=", ">=", "!=", "<>"};
    for (const char* s : two_char) {
      if (src.compare(i, 2, s) == 0) {
        t.kind = Tok::Symbol;
        t.text = s;
        i += 2;
        return t;
      }
    }
    if (std::string("()<>=,*").find(c) != std::string::npos) {
      t.kind = Tok::Symbol;
      t.text = std::string(1, c);
      ++i;
      return t;
    }
    throw ParseError(i, std::string("unexpected character '") + c + "'");
  }
};

std::string upper(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

struct Parser {
  Lexer lex;
  Token cur;
  const Schema* schema;

  Parser(const std::string& text, const Schema* schema_) : lex(text), schema(schema_) {
    cur = lex.next();
  }

  void advance() { cur = lex.next(); }

  bool is_keyword(const char* kw) const {
    return cur.kind == Tok::Ident && upper(cur.text) == kw;
  }

  void expect_keyword(const char* kw) {
    if (!is_keyword(kw)) throw ParseError(cur.pos, std::string("expected ") + kw);
    advance();
  }

  void expect_symbol(const char* sym) {
    if (cur.kind != Tok::Symbol || cur.text != sym)
      throw ParseError(cur.pos, std::string("expected '") + sym + "'");
    advance();
  }

  std::string expect_ident(const char* what) {
    if (cur.kind != Tok::Ident) throw ParseError(cur.pos, std::string("expected ") + what);
    std::string s = cur.text;
    advance();
    return s;
  }

  QuerySpec parse() {
    QuerySpec q;
    expect_keyword("SELECT");
    size_t agg_pos = cur.pos;
    std::string agg = upper(expect_ident("aggregate function"));
    if (agg == "SUM")
      q.aggregate = AggKind::Sum;
    else if (agg == "COUNT")
      q.aggregate = AggKind::Count;
    else if (agg == "AVG")
      q.aggregate = AggKind::Avg;
    else if (agg == "MIN")
      q.aggregate = AggKind::Min;
    else if (agg == "MAX")
      q.aggregate = AggKind::Max;
    else
      throw ParseError(agg_pos, "unsupported aggregate: " + agg);
    expect_symbol("(");
    if (cur.kind == Tok::Symbol && cur.text == "*") {
      if (q.aggregate != AggKind::Count)
        throw ParseError(cur.pos, "'*' is only valid in COUNT");
      q.target = "*";
      advance();
    } else if (cur.kind == Tok::Number && cur.number == 1.0) {
      if (q.aggregate != AggKind::Count)
        throw ParseError(cur.pos, "'1' is only valid in COUNT");
      q.target = "*";  // COUNT(1) == COUNT(*)
      advance();
    } else {
      size_t pos = cur.pos;
      q.target = expect_ident("aggregate attribute");
      if (schema) {
        if (!schema->has(q.target)) throw ParseError(pos, "unknown attribute: " + q.target);
        if (q.aggregate != AggKind::Count &&
            schema->at(schema->index_of(q.target)).kind != AttrKind::Numeric)
          throw ParseError(pos, "aggregate attribute must be numeric: " + q.target);
      }
    }
    expect_symbol(")");

    expect_keyword("FROM");
    q.relations.push_back(expect_ident("relation name"));
    while (cur.kind == Tok::Symbol && cur.text == ",") {
      advance();
      q.relations.push_back(expect_ident("relation name"));
    }

    if (is_keyword("WHERE")) {
      advance();
      parse_atom(q.predicate);
      while (cur.kind == Tok::Ident) {
        if (is_keyword("AND")) {
          advance();
          parse_atom(q.predicate);
        } else if (is_keyword("OR")) {
          throw ParseError(cur.pos, "OR is not supported; predicates are conjunctive");
        } else {
          break;
        }
      }
    }

    if (is_keyword("GROUP")) {
      advance();
      expect_keyword("BY");
      size_t pos = cur.pos;
      std::string g = expect_ident("grouping attribute");
      if (schema) {
        if (!schema->has(g)) throw ParseError(pos, "unknown attribute: " + g);
        if (schema->at(schema->index_of(g)).kind != AttrKind::Categorical)
          throw ParseError(pos, "grouping attribute must be categorical: " + g);
      }
      q.group_by = g;
    }

    if (cur.kind != Tok::End) throw ParseError(cur.pos, "trailing input after query");
    return q;
  }

  void parse_atom(Predicate& pred) {
    size_t attr_pos = cur.pos;
    std::string attr = expect_ident("attribute");
    if (cur.kind != Tok::Symbol) throw ParseError(cur.pos, "expected comparison operator");
    std::string op = cur.text;
    if (op == "!=" || op == "<>")
      throw ParseError(cur.pos, "'!=' is not supported; predicates are conjunctive ranges");
    if (op != "=" && op != "<" && op != "<=" && op != ">" && op != ">=")
      throw ParseError(cur.pos, "expected comparison operator");
    advance();

    bool is_string = false;
    double num = 0;
    std::string str;
    size_t lit_pos = cur.pos;
    if (cur.kind == Tok::Number) {
      num = cur.number;
    } else if (cur.kind == Tok::String) {
      if (auto ts = parse_timestamp(cur.text)) {
        num = *ts;
      } else {
        is_string = true;
        str = cur.text;
      }
    } else {
      throw ParseError(cur.pos, "expected literal");
    }
    advance();

    if (schema) {
      if (!schema->has(attr)) throw ParseError(attr_pos, "unknown attribute: " + attr);
      const auto& dom = schema->at(schema->index_of(attr));
      if (dom.kind == AttrKind::Categorical && !is_string)
        throw ParseError(lit_pos, "attribute " + attr + " is categorical; expected a string literal");
      if (dom.kind == AttrKind::Numeric && is_string)
        throw ParseError(lit_pos, "attribute " + attr + " is numeric; expected a number");
    }

    Atom atom;
    if (is_string) {
      if (op != "=")
        throw ParseError(lit_pos, "string literals support '=' only");
      atom = CatSet::of({str});
    } else {
      Interval iv;
      if (op == "=")
        iv = Interval::point(num);
      else if (op == "<")
        iv = Interval{-kInf, num, false, true};
      else if (op == "<=")
        iv = Interval{-kInf, num, false, false};
      else if (op == ">")
        iv = Interval{num, kInf, true, false};
      else
        iv = Interval{num, kInf, false, false};
      atom = iv;
    }

    if (pred.empty_marked) return;
    auto it = pred.atoms.find(attr);
    if (it == pred.atoms.end()) {
      pred.atoms.emplace(attr, std::move(atom));
      return;
    }
    // Contradictions mark the predicate EMPTY but keep the atoms gathered so
    // far, so the query still prints and round-trips.
    if (Interval* a = std::get_if<Interval>(&it->second)) {
      Interval* b = std::get_if<Interval>(&atom);
      if (!b) throw ParseError(lit_pos, "attribute " + attr + " compared to both numbers and strings");
      Interval m = Interval::intersect(*a, *b);
      if (m.empty())
        pred.empty_marked = true;
      else
        it->second = m;
    } else {
      CatSet* b = std::get_if<CatSet>(&atom);
      if (!b) throw ParseError(lit_pos, "attribute " + attr + " compared to both numbers and strings");
      CatSet m = CatSet::intersect(std::get<CatSet>(it->second), *b);
      if (m.values.empty())
        pred.empty_marked = true;
      else
        it->second = m;
    }
  }
};

std::string number_text(double v) {
  // Shortest representation that parses back to the same double.
  for (int prec = 15; prec <= 17; ++prec) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    std::string s = os.str();
    if (std::strtod(s.c_str(), nullptr) == v) return s;
  }
  return std::to_string(v);
}

}  // namespace

QuerySpec parse_query(const std::string& text, const Schema* schema) {
  Parser p(text, schema);
  return p.parse();
}

std::string pretty_print(const QuerySpec& q) {
  std::ostringstream os;
  os << "SELECT " << agg_name(q.aggregate) << "(" << q.target << ") FROM ";
  for (size_t i = 0; i < q.relations.size(); ++i) {
    if (i) os << ", ";
    os << q.relations[i];
  }
  bool first = true;
  auto emit = [&](const std::string& s) {
    os << (first ? " WHERE " : " AND ") << s;
    first = false;
  };
  for (const auto& [attr, atom] : q.predicate.atoms) {
    if (const Interval* iv = std::get_if<Interval>(&atom)) {
      if (iv->lo == iv->hi && !iv->lo_open && !iv->hi_open) {
        emit(attr + " = " + number_text(iv->lo));
        continue;
      }
      if (std::isfinite(iv->lo)) emit(attr + (iv->lo_open ? " > " : " >= ") + number_text(iv->lo));
      if (std::isfinite(iv->hi)) emit(attr + (iv->hi_open ? " < " : " <= ") + number_text(iv->hi));
    } else {
      const CatSet& cs = std::get<CatSet>(atom);
      // Canonical predicates from the parser hold single-value memberships.
      emit(attr + " = '" + cs.values.front() + "'");
    }
  }
  if (q.predicate.empty_marked && !q.predicate.atoms.empty()) {
    // Re-introduce a contradiction against the first atom so the printed text
    // parses back to the same EMPTY-marked predicate.
    const auto& [attr, atom] = *q.predicate.atoms.begin();
    if (const Interval* iv = std::get_if<Interval>(&atom)) {
      if (std::isfinite(iv->lo))
        emit(attr + " < " + number_text(iv->lo));
      else
        emit(attr + " > " + number_text(iv->hi));
    } else {
      const CatSet& cs = std::get<CatSet>(atom);
      std::string outside = cs.values.front();
      while (cs.contains(outside)) outside += "_";
      emit(attr + " = '" + outside + "'");
    }
  }
  if (q.group_by) os << " GROUP BY " << *q.group_by;
  return os.str();
}

Json queryspec_to_json(const QuerySpec& q) {
  Json j;
  j["aggregate"] = agg_name(q.aggregate);
  j["target"] = q.target;
  j["relations"] = q.relations;
  j["predicate"] = predicate_to_json(q.predicate);
  if (q.group_by)
    j["group_by"] = *q.group_by;
  else
    j["group_by"] = nullptr;
  return j;
}

}  // namespace rangebound
