#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "iterlil/law.hpp"
#include "iterlil/stats.hpp"

using namespace iterlil;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double midpoint_integral(const Marginal& m, double x, std::size_t n) {
  const double h = x / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += m.cdf((static_cast<double>(i) + 0.5) * h);
  return sum * h;
}

std::vector<JointStepLaw> all_laws() {
  return {make_law(Family::det, {1.0, 0.5}), make_law(Family::exp_indep, {1.0, 2.0}),
          make_eta_eq_xi(Marginal::exponential(1.5)), make_eta_eq_xi(Marginal::lognormal(0.0, 0.5)),
          make_law(Family::lognormal_indep, {-0.3, 0.8, 1.0}), make_law(Family::slow_tail, {1.0})};
}

}  // namespace

TEST_CASE("make_law moments") {
  const auto e = make_law(Family::exp_indep, {1, 1});
  CHECK(e.mu == 1.0);
  CHECK(e.sigma2 == 1.0);
  const auto d = make_law(Family::det, {1, 0.5});
  CHECK(d.mu == 1.0);
  CHECK(d.sigma2 == 0.0);
  CHECK(d.degenerate());
  const auto ln = make_law(Family::lognormal_indep, {0.2, 0.5, 1.0});
  CHECK_THAT(ln.mu, WithinRel(std::exp(0.2 + 0.125), 1e-14));
  CHECK_THAT(ln.sigma2, WithinRel(std::expm1(0.25) * std::exp(0.4 + 0.25), 1e-14));
  const auto st = make_law(Family::slow_tail, {2.0});
  CHECK(st.mu == 0.5);
  CHECK_FALSE(st.eta_mean_finite());
}

TEST_CASE("make_law rejects bad parameters") {
  const auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::config_error;
  };
  CHECK(code([] { make_law(Family::exp_indep, {-1, 1}); }) == Errc::invalid_parameter);
  CHECK(code([] { make_law(Family::exp_indep, {1, 0}); }) == Errc::invalid_parameter);
  CHECK(code([] { make_law(Family::det, {1}); }) == Errc::invalid_parameter);
  CHECK(code([] { make_law(Family::lognormal_indep, {0, -1, 1}); }) == Errc::invalid_parameter);
  CHECK(code([] { make_law(Family::slow_tail, {std::numeric_limits<double>::infinity()}); }) ==
        Errc::invalid_parameter);
  CHECK(code([] { make_eta_eq_xi(Marginal::constant(1)); }) == Errc::invalid_parameter);
  CHECK(code([] { require_nondegenerate(make_law(Family::det, {1, 0.5}), "op"); }) == Errc::degenerate_law);
  CHECK_NOTHROW(make_law(Family::lognormal_indep, {-2, 1, 1}));
}

TEST_CASE("law spec text round-trips") {
  for (const auto& law : all_laws()) {
    const auto back = parse_law(law.spec());
    CHECK(back.spec() == law.spec());
    CHECK(back.family == law.family);
    CHECK(back.mu == law.mu);
  }
  CHECK(parse_law(" exp_indep( 1 , 2 ) ").spec() == "exp_indep(1,2)");
  CHECK(parse_law("eta_eq_xi(exp(1))").coupled);
  for (const char* bad : {"", "exp_indep(1,", "exp_indep(1,1)x", "nope(1)", "eta_eq_xi(1)", "eta_eq_xi(det(1))",
                          "exp_indep(a,1)", "det(exp(1),1)"})
    CHECK_THROWS_AS(parse_law(bad), Error);
}

TEST_CASE("eta_cdf examples") {
  CHECK(eta_cdf(make_law(Family::exp_indep, {1, 1}), 0.0) == 0.0);
  CHECK_THAT(eta_cdf(make_law(Family::slow_tail, {1}), std::exp(3.0)), WithinAbs(1.0 - 1.0 / 3.0, 1e-12));
  CHECK_THAT(eta_cdf(make_law(Family::slow_tail, {1}), std::exp(2.0)), WithinAbs(0.5, 1e-12));
  const auto d = make_law(Family::det, {1, 0.5});
  CHECK(eta_cdf(d, 0.4) == 0.0);
  CHECK(eta_cdf(d, 0.5) == 1.0);
  for (const auto& law : all_laws()) CHECK(eta_cdf(law, -1.0) == 0.0);
}

TEST_CASE("eta_cdf refuses laws without a closed form") {
  auto law = make_law(Family::exp_indep, {1, 1});
  law.eta_cdf_form = CdfForm::empirical;
  try {
    eta_cdf(law, 1.0);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unsupported_query);
  }
}

TEST_CASE("survival complements cdf") {
  for (const auto& law : all_laws())
    for (double x : {0.1, 0.5, 1.0, 3.0, 20.0, 1e4}) CHECK_THAT(law.eta.cdf(x) + law.eta.survival(x), WithinAbs(1.0, 1e-14));
}

TEST_CASE("integrated_cdf matches midpoint quadrature") {
  const Marginal ms[] = {Marginal::exponential(0.7), Marginal::lognormal(0.3, 0.6), Marginal::lognormal(-1.0, 1.2),
                         Marginal::slow_tail()};
  for (const auto& m : ms)
    for (double x : {0.5, 2.0, 10.0, 100.0}) {
      const double oracle = midpoint_integral(m, x, 1'000'000);
      CHECK_THAT(m.integrated_cdf(x), WithinAbs(oracle, 1e-6 * std::max(1.0, oracle)));
    }
  // the step CDF is handled exactly; midpoint on a lattice avoiding the jump agrees
  CHECK(Marginal::constant(0.5).integrated_cdf(3.0) == 2.5);
  CHECK(Marginal::constant(0.5).integrated_cdf(0.25) == 0.0);
}

TEST_CASE("partial_moment agrees with quadrature") {
  const Marginal ms[] = {Marginal::exponential(1.3), Marginal::lognormal(0.0, 0.5)};
  for (const auto& m : ms) {
    const double lo = 0.4, hi = 1.1;
    const std::size_t n = 200000;
    const double step = (hi - lo) / n;
    // E[(X-lo)1{lo<X<=hi}] = (hi-lo)F(hi) - int_lo^hi F
    double integral = 0.0;
    for (std::size_t i = 0; i < n; ++i) integral += m.cdf(lo + (i + 0.5) * step) * step;
    CHECK_THAT(m.partial_moment(lo, hi), WithinAbs((hi - lo) * m.cdf(hi) - integral, 1e-9));
  }
  CHECK(Marginal::constant(1.0).partial_moment(0.5, 1.0) == 0.5);
  CHECK(Marginal::constant(1.0).partial_moment(1.0, 2.0) == 0.0);
}

TEST_CASE("sample_pair examples") {
  Stream s(1, 0);
  const auto d = sample_pair(make_law(Family::det, {1, 0.5}), s);
  CHECK(d.xi == 1.0);
  CHECK(d.eta == 0.5);

  const auto coupled = make_eta_eq_xi(Marginal::exponential(1.0));
  for (int i = 0; i < 1000; ++i) {
    const auto p = sample_pair(coupled, s);
    REQUIRE(p.xi == p.eta);
  }

  const auto law = make_law(Family::exp_indep, {1, 1});
  Stream a(42, 7), b(42, 7);
  const auto pa = sample_pair(law, a);
  const auto pb = sample_pair(law, b);
  CHECK(pa.xi == pb.xi);
  CHECK(pa.eta == pb.eta);
}

TEST_CASE("sampled components are strictly positive") {
  for (const auto& law : all_laws()) {
    Stream s(20261018, 1);
    for (int i = 0; i < 1'000'000; ++i) {
      const auto p = sample_pair(law, s);
      REQUIRE(p.xi > 0.0);
      REQUIRE(p.eta > 0.0);
    }
  }
}

TEST_CASE("xi moments within 5 standard errors") {
  for (const auto& law : all_laws()) {
    if (law.degenerate()) continue;
    Stream s(20261018, 2);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = sample_pair(law, s).xi;
    const double n = static_cast<double>(xs.size());
    CHECK(std::abs(stats::mean(xs) - law.mu) < 5.0 * std::sqrt(law.sigma2 / n));
    // SE of the sample variance: sqrt((m4 - sigma^4) / n)
    double m4 = 0.0;
    for (double x : xs) m4 += std::pow(x - law.mu, 4);
    m4 /= n;
    CHECK(std::abs(stats::variance(xs) - law.sigma2) < 5.0 * std::sqrt((m4 - law.sigma2 * law.sigma2) / n));
  }
}

TEST_CASE("eta samples lie inside the DKW band of the closed-form cdf") {
  const std::size_t n = 20000;
  const double band = std::sqrt(std::log(2.0 / 0.001) / (2.0 * n));  // 99.9% DKW
  for (const auto& law : all_laws()) {
    if (law.family == Family::det) continue;
    Stream s(20261018, 3);
    std::vector<double> eta(n);
    for (auto& e : eta) e = sample_pair(law, s).eta;
    CHECK(stats::ks_statistic(eta, [&](double x) { return law.eta.cdf(x); }) < band);
  }
}
