// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "test_util.hpp"

using namespace rangebound;
using namespace rangebound::testutil;

TEST_CASE("validate_tuple checks domain membership") {
  auto schema = make_schema({num_attr("price", 0, 1000)});
  CHECK(validate_tuple(*schema, tup({3.02})));
  CHECK_FALSE(validate_tuple(*schema, tup({-1.0})));

  auto branches = make_schema({cat_attr("branch", {"Chicago", "NewYork"})});
  CHECK_FALSE(validate_tuple(*branches, tup({std::string("Trenton")})));
  CHECK(validate_tuple(*branches, tup({std::string("Chicago")})));
}

TEST_CASE("validate_tuple rejects arity mismatches") {
  auto schema = make_schema({num_attr("a", 0, 1), num_attr("b", 0, 1)});
  CHECK_THROWS_AS(validate_tuple(*schema, tup({0.5})), SchemaError);
}

TEST_CASE("schema rejects malformed domains") {
  CHECK_THROWS_AS(make_schema({num_attr("x", 5, 1)}), SchemaError);
  CHECK_THROWS_AS(make_schema({cat_attr("c", {})}), SchemaError);
  CHECK_THROWS_AS(make_schema({num_attr("x", 0, 1), num_attr("x", 0, 2)}), SchemaError);
}

TEST_CASE("validation is monotone under domain widening") {
  SplitMix64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    double lo = rng.next_range(-10, 0), hi = rng.next_range(0, 10);
    auto narrow = make_schema({num_attr("x", lo, hi)});
    auto wide = make_schema({num_attr("x", lo - rng.next_range(0, 5), hi + rng.next_range(0, 5))});
    double v = rng.next_range(-12, 12);
    if (validate_tuple(*narrow, tup({v}))) CHECK(validate_tuple(*wide, tup({v})));
  }
}
