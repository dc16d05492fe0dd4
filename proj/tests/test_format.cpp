#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <sstream>

#include "iterlil/error.hpp"
#include "iterlil/format.hpp"

using namespace iterlil;

TEST_CASE("shortest and sig17 round-trip doubles") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 0.0, 123456789.123456789}) {
    double back = 0.0;
    REQUIRE(parse_double(shortest(x), back));
    CHECK(back == x);
    REQUIRE(parse_double(sig17(x), back));
    CHECK(back == x);
  }
  CHECK(shortest(1.0) == "1");
  CHECK(shortest(0.5) == "0.5");
}

TEST_CASE("parse_double accepts whitespace and a leading plus, rejects junk") {
  double v = 0.0;
  CHECK(parse_double(" +2.5\t", v));
  CHECK(v == 2.5);
  CHECK(parse_double("1e3", v));
  CHECK(v == 1000.0);
  CHECK_FALSE(parse_double("", v));
  CHECK_FALSE(parse_double("1.5x", v));
  CHECK_FALSE(parse_double("one", v));
}

TEST_CASE("csv rows") {
  std::ostringstream os;
  const std::string cells[] = {"a", "1", "2.5"};
  write_csv_row(os, cells);
  CHECK(os.str() == "a,1,2.5\n");
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  CHECK(hex64(0xabcull) == "0000000000000abc");
}

TEST_CASE("errors carry a code and an unprefixed message") {
  try {
    require(false, Errc::table_range, "t beyond table");
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::table_range);
    CHECK(e.message() == "t beyond table");
    CHECK(std::string(e.what()) == "table-range error: t beyond table");
  }
  CHECK_NOTHROW(require(true, Errc::grid_error, "unused"));
}
