#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "iterlil/renewal.hpp"
#include "iterlil/stats.hpp"

using namespace iterlil;
using Catch::Matchers::WithinAbs;

namespace {
constexpr std::uint64_t kSeed = 20261018;

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

TEST_CASE("exponential renewal function is 1 + t") {
  const auto table = renewal_function(make_law(Family::exp_indep, {1, 1}), 0.01, 50);
  CHECK(std::abs(table.u_at(50) - 51.0) < 0.05);
  CHECK(table.u_at(0) == Catch::Approx(1.0).margin(0.01));
  const auto fast = renewal_function(make_law(Family::exp_indep, {2, 1}), 0.01, 20);
  CHECK(std::abs(fast.u_at(20) - 41.0) < 0.05);
}

TEST_CASE("deterministic staircase is exact off the lattice") {
  const auto table = build_tables(make_law(Family::det, {1, 0.5}), 0.05, 10, 2);
  for (double t : {0.0, 0.5, 0.97, 1.0, 2.5, 7.4, 9.95}) {
    const double k = std::floor(t + 1e-12);
    if (std::abs(t - std::round(t)) > 0.06) CHECK(table.u_at(t) == k + 1.0);
  }
  // V(t) = #{k: k - 0.5 <= t}; V_2(3) = 6
  CHECK(table.v_at(1, 3.0) == 3.0);
  CHECK(table.v_at(2, 3.0) == 6.0);
  CHECK(table.v_at(2, 0.95) == 0.0);
}

TEST_CASE("subadditivity of U over random pairs") {
  const auto table = renewal_function(make_law(Family::lognormal_indep, {0, 0.6, 1}), 0.01, 40);
  Stream s(kSeed, 0);
  for (int n = 0; n < 100; ++n) {
    const double x = s.uniform() * 20;
    const double hh = s.uniform() * 20;
    CHECK(table.u_at(x + hh) - table.u_at(x) <= table.u_at(hh) + 10 * table.h);
  }
}

TEST_CASE("V = F * U closed forms") {
  const auto coupled = build_tables(make_eta_eq_xi(Marginal::exponential(1)), 0.01, 50, 2);
  CHECK(std::abs(coupled.v_at(1, 50) - 50.0) < 0.05);
  CHECK(std::abs(coupled.v_at(2, 50) / 1250.0 - 1.0) < 1e-2);

  const auto law = make_law(Family::exp_indep, {1, 1});
  const auto table = build_tables(law, 0.01, 400, 1);
  CHECK(std::abs(table.v_at(1, 400) / 400 - 1.0 / law.mu) < 0.02);
}

TEST_CASE("V_j asymptotics") {
  const auto table = build_tables(make_law(Family::exp_indep, {1, 1}), 0.02, 200, 3);
  CHECK(std::abs(table.v_at(2, 200) * 2 / (200.0 * 200) - 1) < 0.05);
  CHECK(std::abs(table.v_at(3, 200) * 6 / (200.0 * 200 * 200) - 1) < 0.05);
}

TEST_CASE("table invariants") {
  for (const auto& law : {make_law(Family::exp_indep, {1, 3}), make_law(Family::slow_tail, {1}),
                          make_law(Family::lognormal_indep, {-0.5, 1, 1}), make_eta_eq_xi(Marginal::lognormal(0, 0.4))}) {
    const auto table = build_tables(law, 0.05, 30, 3);
    CHECK(table.u().nondecreasing());
    for (int j = 1; j <= 3; ++j) {
      CHECK(table.v(j).nondecreasing());
      CHECK(table.v_of(j)[0] == 0.0);
    }
    for (std::size_t i = 0; i < table.nodes(); ++i) REQUIRE(table.v_of(1)[i] <= table.u_vals[i] + 1e-12);
  }
}

TEST_CASE("renewal errors") {
  const auto law = make_law(Family::exp_indep, {1, 1});
  CHECK(code_of([&] { renewal_function(law, 0, 10); }) == Errc::grid_error);
  CHECK(code_of([&] { renewal_function(law, -1, 10); }) == Errc::grid_error);
  CHECK(code_of([&] { renewal_function(law, 1e-9, 10); }) == Errc::grid_error);
  const auto table = build_tables(law, 0.1, 10, 2);
  CHECK(code_of([&] { table.u_at(10.5); }) == Errc::table_range);
  CHECK(code_of([&] { table.v_at(3, 1); }) == Errc::table_range);
  CHECK(code_of([&] { vj_table(table, 4); }) == Errc::table_range);
  CHECK(code_of([&] { vj_table(table, 1); }) == Errc::invalid_parameter);
}

TEST_CASE("Monte Carlo oracle agrees with the tables") {
  const auto law = make_law(Family::exp_indep, {1, 1});
  const auto table = build_tables(law, 0.01, 50, 2);
  const auto grid = uniform_grid(10, 50);
  const auto mc = vj_monte_carlo(law, 2, grid, 4000, kSeed);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(mc.mean[i] - table.v_at(2, grid[i])) < 3 * mc.se[i]);

  const double t3[] = {3};
  const auto det = vj_monte_carlo(make_law(Family::det, {1, 0.5}), 2, t3, 5, kSeed);
  CHECK(det.mean[0] == 6.0);
  CHECK(det.se[0] == 0.0);
}

TEST_CASE("j = 1 Monte Carlo is the mean of count_y") {
  const auto law = make_law(Family::exp_indep, {1, 2});
  const double t[] = {5, 15};
  const auto mc = vj_monte_carlo(law, 1, t, 500, kSeed);
  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<double> y;
    for (std::size_t r = 0; r < 500; ++r) {
      Stream s = Stream::replicate(kSeed, r);
      y.push_back(count_y(simulate_path(law, 15, s), t).values[i]);
    }
    CHECK(mc.mean[i] == stats::mean(y));
  }
}

TEST_CASE("increment bound for V_k") {
  const auto table = build_tables(make_law(Family::exp_indep, {1, 1}), 0.01, 50, 3);
  Stream s(kSeed, 1);
  for (int k = 1; k <= 3; ++k) {
    for (int n = 0; n < 1000; ++n) {
      const double x = s.uniform() * 50;
      const double hh = s.uniform() * (50 - x);
      const auto c = check_subadditivity(table, k, x, hh);
      REQUIRE(c.holds());
    }
    const auto whole = check_subadditivity(table, k, 1e-9, 50 - 1e-9);
    CHECK(whole.holds());
  }
  CHECK(code_of([&] { check_subadditivity(table, 1, 0, 1); }) == Errc::invalid_parameter);
  CHECK(code_of([&] { check_subadditivity(table, 1, 30, 30); }) == Errc::table_range);
}

TEST_CASE("table csv round trip") {
  const auto table = build_tables(make_law(Family::exp_indep, {1, 1}), 0.25, 5, 2);
  std::stringstream ss;
  write_table_csv(ss, table);
  const auto back = read_table_csv(ss);
  CHECK(back.h == table.h);
  CHECK(back.t_max == table.t_max);
  CHECK(back.u_vals == table.u_vals);
  CHECK(back.v_of(1) == table.v_of(1));
  CHECK(back.v_of(2) == table.v_of(2));
  std::stringstream bad("t,V1\n0,1\n");
  CHECK(code_of([&] { read_table_csv(bad); }) == Errc::table_range);
}
