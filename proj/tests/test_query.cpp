// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "query.hpp"
#include "test_util.hpp"
#include "timeparse.hpp"

using namespace rangebound;
using namespace rangebound::testutil;

namespace {

SchemaPtr sales_schema() {
  return make_schema({num_attr("utc", 0, 2e9), num_attr("price", 0, 1000),
                      cat_attr("branch", {"Chicago", "NewYork"})});
}

}  // namespace

TEST_CASE("parses the timestamped sum query") {
  auto schema = sales_schema();
  QuerySpec q = parse_query(
      "SELECT SUM(price) FROM sales WHERE utc >= 'Nov-11 0:00' AND utc <= 'Nov-13 0:00'",
      &*schema);
  CHECK(q.aggregate == AggKind::Sum);
  CHECK(q.target == "price");
  CHECK(q.relations == std::vector<std::string>{"sales"});
  const Interval& iv = std::get<Interval>(q.predicate.atoms.at("utc"));
  CHECK(iv.lo == *parse_timestamp("Nov-11 0:00"));
  CHECK(iv.hi == *parse_timestamp("Nov-13 0:00"));
  CHECK_FALSE(iv.lo_open);
  CHECK_FALSE(iv.hi_open);
}

TEST_CASE("count forms and group by") {
  auto schema = sales_schema();
  QuerySpec q = parse_query("select count(1) from Vote group by branch", &*schema);
  CHECK(q.aggregate == AggKind::Count);
  CHECK(q.target == "*");
  REQUIRE(q.group_by.has_value());
  CHECK(*q.group_by == "branch");

  QuerySpec q2 = parse_query("SELECT COUNT(*) FROM t", &*schema);
  CHECK(q2.target == "*");
}

TEST_CASE("rejects disjunction and inequality") {
  auto schema = sales_schema();
  CHECK_THROWS_AS(parse_query("SELECT SUM(price) FROM s WHERE price > 1 OR price < 0", &*schema),
                  ParseError);
  CHECK_THROWS_AS(parse_query("SELECT SUM(price) FROM s WHERE price != 3", &*schema), ParseError);
  CHECK_THROWS_AS(parse_query("SELECT MEDIAN(price) FROM s", &*schema), ParseError);
  CHECK_THROWS_AS(parse_query("SELECT SUM(price) FROM s WHERE price OR 1", &*schema), ParseError);
}

TEST_CASE("semantic validation against the schema") {
  auto schema = sales_schema();
  CHECK_THROWS_AS(parse_query("SELECT SUM(nope) FROM s", &*schema), ParseError);
  CHECK_THROWS_AS(parse_query("SELECT SUM(branch) FROM s", &*schema), ParseError);
  CHECK_THROWS_AS(parse_query("SELECT SUM(price) FROM s GROUP BY price", &*schema), ParseError);
  CHECK_THROWS_AS(parse_query("SELECT SUM(price) FROM s WHERE branch = 3", &*schema), ParseError);
  CHECK_THROWS_AS(parse_query("SELECT SUM(price) FROM s WHERE price = 'x'", &*schema), ParseError);
}

TEST_CASE("error positions point at the offending token") {
  auto schema = sales_schema();
  try {
    parse_query("SELECT SUM(price) FROM s WHERE price != 3", &*schema);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.pos == 37);  // offset of '!='
  }
}

TEST_CASE("atoms on one attribute intersect") {
  auto schema = sales_schema();
  QuerySpec q =
      parse_query("SELECT SUM(price) FROM s WHERE price >= 2 AND price <= 5", &*schema);
  const Interval& iv = std::get<Interval>(q.predicate.atoms.at("price"));
  CHECK(iv == Interval::closed(2, 5));
}

TEST_CASE("contradictory atoms mark the predicate empty") {
  auto schema = sales_schema();
  QuerySpec q =
      parse_query("SELECT SUM(price) FROM s WHERE price > 5 AND price < 3", &*schema);
  CHECK(q.predicate.empty_marked);
}

TEST_CASE("pretty-printed queries reparse identically") {
  auto schema = sales_schema();
  for (const char* text : {
           "SELECT SUM(price) FROM sales WHERE utc >= 'Nov-11 0:00' AND utc <= 'Nov-13 0:00'",
           "SELECT COUNT(*) FROM t",
           "SELECT AVG(price) FROM t WHERE branch = 'Chicago' AND price < 7",
           "SELECT MAX(price) FROM t WHERE price > 2 AND price <= 9 GROUP BY branch",
           "SELECT SUM(price) FROM a, b WHERE price = 3",
           "SELECT SUM(price) FROM s WHERE price > 5 AND price < 3",
           "SELECT COUNT(1) FROM s WHERE branch = 'Chicago' AND branch = 'NewYork'",
       }) {
    QuerySpec q = parse_query(text, &*schema);
    std::string printed = pretty_print(q);
    QuerySpec q2 = parse_query(printed, &*schema);
    INFO("original: ", text, "\nprinted:  ", printed);
    CHECK(q.aggregate == q2.aggregate);
    CHECK(q.target == q2.target);
    CHECK(q.relations == q2.relations);
    CHECK(q.group_by == q2.group_by);
    CHECK(q.predicate == q2.predicate);
  }
}

TEST_CASE("schema-less parsing infers literal kinds") {
  QuerySpec q = parse_query("SELECT COUNT(*) FROM t WHERE b = 'x' AND n <= 5", nullptr);
  CHECK(std::holds_alternative<CatSet>(q.predicate.atoms.at("b")));
  CHECK(std::holds_alternative<Interval>(q.predicate.atoms.at("n")));
}
