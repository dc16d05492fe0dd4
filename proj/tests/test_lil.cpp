#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "iterlil/lil.hpp"

using namespace iterlil;

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

TEST_CASE("normalizer values") {
  const double ee = std::exp(std::numbers::e);
  CHECK(lil_normalizer(1, 1, 1, ee) == Catch::Approx(5.5055).margin(5e-4));
  CHECK(lil_normalizer(1, 1, 1, ee) == Catch::Approx(std::sqrt(2 * ee)));
  // j = 3: 2 / (5 * 2!) sigma^2 mu^-7 t^5 log log t
  const double t = 100;
  CHECK(lil_normalizer(3, 2, 0.5, t) ==
        Catch::Approx(std::sqrt(0.2 * 0.5 * std::pow(2.0, -7) * std::pow(t, 5) * std::log(std::log(t)))));
  CHECK(code_of([] { lil_normalizer(1, 1, 1, std::numbers::e); }) == Errc::domain_error);
  CHECK(code_of([] { lil_normalizer(0, 1, 1, 10); }) == Errc::invalid_parameter);
}

TEST_CASE("centering of Y") {
  const auto slow = make_law(Family::slow_tail, {1});
  CHECK(center_y1(0, 2.0, slow) == 0.0);
  const auto law = make_law(Family::exp_indep, {2, 1});
  CHECK(center_y1(10, 5, law) == Catch::Approx(10 - (5 + std::expm1(-5.0)) / 0.5));
}

TEST_CASE("lil scan structure") {
  const auto law = make_law(Family::exp_indep, {1, 1});
  const auto scan = lil_scan(law, 1, GridSpec::parse("geometric(1.5)"), 20, 2000, 12, kSeed);
  CHECK(scan.replicates() == 12);
  CHECK(scan.scan_times.front() == 20);
  CHECK(scan.scan_times.back() == 2000);
  CHECK(scan.extremes_monotone());
  double hi = -1e300, lo = 1e300;
  for (std::size_t r = 0; r < scan.replicates(); ++r) {
    hi = std::max(hi, scan.running_max[r].back());
    lo = std::min(lo, scan.running_min[r].back());
    for (std::size_t i = 0; i < scan.scan_times.size(); ++i)
      REQUIRE(scan.r[r][i] == Catch::Approx((scan.counts[r][i] - scan.centering[i]) / scan.normalizer[i]));
  }
  CHECK(scan.envelope_max == hi);
  CHECK(scan.envelope_min == lo);

  HarnessOptions four;
  four.workers = 4;
  const auto again = lil_scan(law, 1, GridSpec::parse("geometric(1.5)"), 20, 2000, 12, kSeed, four);
  CHECK(again.r == scan.r);
  CHECK(again.fingerprint == scan.fingerprint);
}

TEST_CASE("envelope widens with t_max") {
  const auto law = make_law(Family::exp_indep, {1, 1});
  const auto grid = GridSpec::parse("proof");
  const auto small = lil_scan(law, 1, grid, 20, 1e3, 20, kSeed);
  const auto large = lil_scan(law, 1, grid, 20, 1e5, 20, kSeed);
  CHECK(large.envelope_max >= small.envelope_max);
  CHECK(large.envelope_min <= small.envelope_min);
}

TEST_CASE("second-generation scan") {
  const auto scan = lil_scan(make_eta_eq_xi(Marginal::exponential(1)), 2, GridSpec{}, 20, 300, 10, kSeed);
  CHECK(scan.extremes_monotone());
  CHECK(scan.centering.back() == Catch::Approx(300.0 * 300 / 2).epsilon(1e-2));
}

TEST_CASE("lil scan preconditions") {
  const auto law = make_law(Family::exp_indep, {1, 1});
  CHECK(code_of([&] { lil_scan(law, 1, GridSpec{}, 5, 100, 3, kSeed); }) == Errc::domain_error);
  CHECK(code_of([&] { lil_scan(make_law(Family::det, {1, 1}), 1, GridSpec{}, 20, 100, 3, kSeed); }) ==
        Errc::degenerate_law);
  CHECK(code_of([&] { lil_scan(law, 1, GridSpec{}, 20, 10, 3, kSeed); }) == Errc::grid_error);
}

TEST_CASE("variance growth exponent") {
  const double t[] = {25, 50, 100, 200, 400};
  const auto k1 = variance_scan(make_law(Family::exp_indep, {1, 1}), 1, t, 4000, kSeed);
  CHECK(std::abs(k1.slope - 1.0) <= 0.35);
  for (std::size_t i = 0; i < 5; ++i) CHECK(k1.mean[i] == Catch::Approx(t[i]).epsilon(0.05));
  const double short_span[] = {25, 50, 100, 150, 200};
  CHECK(code_of([&] { variance_scan(make_law(Family::exp_indep, {1, 1}), 1, short_span, 10, kSeed); }) ==
        Errc::grid_error);
}

TEST_CASE("renewal CLT") {
  const auto law = make_law(Family::exp_indep, {1, 1});
  const auto c = clt_check(law, 2000, 1000, kSeed);
  CHECK(c.threshold == Catch::Approx(1.63 / std::sqrt(1000.0)));
  CHECK(c.passed());
  const auto table = renewal_function(law, 0.1, 100);
  CHECK(code_of([&] { clt_check(law, table, 200, 200, kSeed); }) == Errc::table_range);
  CHECK(code_of([&] { clt_check(law, table, 50, 1, kSeed); }) == Errc::invalid_parameter);
}

TEST_CASE("supermartingale mean") {
  const auto c = supermartingale_check(make_law(Family::exp_indep, {1, 1}), 100, 0.1, 20000, kSeed);
  CHECK(c.passed());
  CHECK(c.overflow_count == 0);
  CHECK(code_of([] { supermartingale_check(make_law(Family::exp_indep, {1, 1}), 100, 0, 100, kSeed); }) ==
        Errc::invalid_parameter);
}

TEST_CASE("median decay checks") {
  const double t[] = {1e3, 1e4, 1e5};
  const auto tail = tail_sum_check(make_law(Family::exp_indep, {1, 1}), t, 40, kSeed);
  CHECK(tail.passed);
  const auto slow = tail_sum_check(make_law(Family::slow_tail, {1}), t, 40, kSeed);
  CHECK(slow.passed);
  const auto nu = nu_increment_check(make_law(Family::exp_indep, {1, 1}), t, 1, 0.5, 40, kSeed);
  CHECK(nu.passed);
}
