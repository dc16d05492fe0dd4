#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "iterlil/grid.hpp"
#include "iterlil/stats.hpp"

using namespace iterlil;

namespace {
Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no throw");
  return Errc::config_error;
}
}  // namespace

TEST_CASE("grid function interpolation") {
  const GridFunction f{{1, 2, 4}, {10, 20, 0}};
  CHECK(f.at(1) == 10);
  CHECK(f.at(1.5) == 15);
  CHECK(f.at(3) == 10);
  CHECK(f.at(4) == 0);
  CHECK_FALSE(f.nondecreasing());
  CHECK(code_of([&] { f.at(0.5); }) == Errc::table_range);
  CHECK(code_of([&] { f.at(4.01); }) == Errc::table_range);
}

TEST_CASE("grid builders") {
  CHECK(uniform_grid(1, 3) == std::vector<double>{1, 2, 3});
  CHECK(uniform_grid(2, 5) == std::vector<double>{2, 4, 5});
  const auto tenths = uniform_grid(0.1, 0.3);
  CHECK(tenths.size() == 3);
  CHECK(tenths.back() == 0.3);

  const auto g = geometric_grid(2, 20, 100);
  CHECK(g == std::vector<double>{20, 40, 80, 100});

  const auto p = proof_grid(20, 1e6);
  for (double t : p) {
    const double n = std::pow(std::log(t), 4.0 / 3.0);
    CHECK(std::abs(n - std::round(n)) < 1e-9);
  }
  CHECK(p.front() >= 20);
  CHECK(p.back() <= 1e6);

  CHECK(code_of([] { uniform_grid(0, 1); }) == Errc::grid_error);
  CHECK(code_of([] { uniform_grid(1e-9, 1); }) == Errc::grid_error);
  CHECK(code_of([] { geometric_grid(1, 1, 2); }) == Errc::grid_error);
  CHECK(code_of([] { proof_grid(3, 3.1); }) == Errc::grid_error);
  CHECK(code_of([] { require_ascending(std::vector<double>{1, 1}, "g"); }) == Errc::grid_error);
  CHECK(code_of([] { require_ascending(std::vector<double>{}, "g"); }) == Errc::grid_error);
}

TEST_CASE("grid spec text") {
  for (const char* text : {"uniform(0.5)", "geometric(1.2)", "proof", "points(25,50,100)"})
    CHECK(GridSpec::parse(text).canonical() == text);
  CHECK(GridSpec::parse("points(1,2)").build(0, 0) == std::vector<double>{1, 2});
  CHECK(code_of([] { GridSpec::parse("geometric"); }) == Errc::config_error);
  CHECK(code_of([] { GridSpec::parse("uniform(1"); }) == Errc::config_error);
  CHECK(code_of([] { GridSpec::parse("points(2,1)").build(0, 10); }) == Errc::grid_error);
}

TEST_CASE("stats helpers") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(stats::mean(x) == 2.5);
  CHECK(stats::variance(x) == Catch::Approx(5.0 / 3.0));
  CHECK(stats::median(x) == 2.5);
  CHECK(stats::median(std::vector<double>{3, 1, 2}) == 2);
  CHECK(stats::ols_slope(x, std::vector<double>{3, 5, 7, 9}) == Catch::Approx(2.0));
  CHECK(stats::ks_statistic(std::vector<double>{0.5}, [](double v) { return v; }) == 0.5);
}
