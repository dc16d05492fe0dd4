#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iterlil/error.hpp"
#include "iterlil/format.hpp"
#include "iterlil/rng.hpp"

namespace iterlil {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// One-dimensional positive law used for either component of (xi, eta).
class Marginal {
 public:
  enum class Kind { constant, exponential, lognormal, slow_tail };

  static Marginal constant(double value) { return Marginal(Kind::constant, value, 0.0); }
  static Marginal exponential(double rate) { return Marginal(Kind::exponential, rate, 0.0); }
  static Marginal lognormal(double location, double scale) { return Marginal(Kind::lognormal, location, scale); }
  /// F(t) = 1 - 1/ln t on [e, inf): no finite moment of any positive order.
  static Marginal slow_tail() { return Marginal(Kind::slow_tail, 0.0, 0.0); }

  Kind kind() const { return kind_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }

  double cdf(double x) const {
    switch (kind_) {
      case Kind::constant: return x >= a_ ? 1.0 : 0.0;
      case Kind::exponential: return x <= 0.0 ? 0.0 : -std::expm1(-a_ * x);
      case Kind::lognormal: return x <= 0.0 ? 0.0 : normal_cdf((std::log(x) - a_) / b_);
      case Kind::slow_tail: return x < std::numbers::e ? 0.0 : 1.0 - 1.0 / std::log(x);
    }
    return 0.0;
  }

  /// 1 - F(x), evaluated without cancellation in the tail.
  double survival(double x) const {
    switch (kind_) {
      case Kind::constant: return x >= a_ ? 0.0 : 1.0;
      case Kind::exponential: return x <= 0.0 ? 1.0 : std::exp(-a_ * x);
      case Kind::lognormal: return x <= 0.0 ? 1.0 : normal_cdf(-(std::log(x) - a_) / b_);
      case Kind::slow_tail: return x < std::numbers::e ? 1.0 : 1.0 / std::log(x);
    }
    return 1.0;
  }

  /// Closed form of the integral of F over [0, x].
  double integrated_cdf(double x) const {
    if (x <= 0.0) return 0.0;
    switch (kind_) {
      case Kind::constant: return x > a_ ? x - a_ : 0.0;
      case Kind::exponential: return x + std::expm1(-a_ * x) / a_;
      case Kind::lognormal: {
        // x F(x) - E[X; X <= x]
        const double lx = std::log(x);
        return x * normal_cdf((lx - a_) / b_) -
               std::exp(a_ + 0.5 * b_ * b_) * normal_cdf((lx - a_ - b_ * b_) / b_);
      }
      case Kind::slow_tail: {
        if (x <= std::numbers::e) return 0.0;
        // integral of 1/ln y from e to x is li(x) - li(e) = Ei(ln x) - Ei(1)
        return (x - std::numbers::e) - (std::expint(std::log(x)) - std::expint(1.0));
      }
    }
    return 0.0;
  }

  /// E[(X - lo) 1{lo < X <= hi}], the first moment of the mass in (lo, hi]
  /// measured from its left end.
  double partial_moment(double lo, double hi) const {
    if (hi <= lo) return 0.0;
    switch (kind_) {
      case Kind::constant: return (lo < a_ && a_ <= hi) ? a_ - lo : 0.0;
      case Kind::exponential: {
        const double l = std::max(lo, 0.0);
        const double shift = l - lo;
        const double w = a_ * (hi - l);
        // E[(X-l)1{l<X<=hi}] = e^{-a l}(1 - e^{-w}(1 + w))/a, plus shift * mass
        const double core = std::exp(-a_ * l) * (-std::expm1(-w) - w * std::exp(-w)) / a_;
        const double mass = std::exp(-a_ * l) * -std::expm1(-w);
        return core + shift * mass;
      }
      case Kind::lognormal:
      case Kind::slow_tail: {
        // generic route: (hi - lo) F(hi) - integral of F over (lo, hi]
        const double value = (hi - lo) * cdf(hi) - (integrated_cdf(hi) - integrated_cdf(lo));
        return std::max(value, 0.0);
      }
    }
    return 0.0;
  }

  double mean() const {
    switch (kind_) {
      case Kind::constant: return a_;
      case Kind::exponential: return 1.0 / a_;
      case Kind::lognormal: return std::exp(a_ + 0.5 * b_ * b_);
      case Kind::slow_tail: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  double variance() const {
    switch (kind_) {
      case Kind::constant: return 0.0;
      case Kind::exponential: return 1.0 / (a_ * a_);
      case Kind::lognormal: return std::expm1(b_ * b_) * std::exp(2.0 * a_ + b_ * b_);
      case Kind::slow_tail: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  /// Smallest point of the support.
  double support_min() const {
    switch (kind_) {
      case Kind::constant: return a_;
      case Kind::slow_tail: return std::numbers::e;
      default: return 0.0;
    }
  }

  double sample(Stream& stream) const {
    switch (kind_) {
      case Kind::constant: return a_;
      case Kind::exponential: return -std::log(stream.uniform()) / a_;
      case Kind::lognormal: {
        const double u1 = stream.uniform();
        const double u2 = stream.uniform();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        return std::exp(a_ + b_ * z);
      }
      case Kind::slow_tail:
        // inverse transform; overflows to +inf with probability 1/709, which
        // is a legitimate "never born within any finite horizon"
        return std::exp(1.0 / stream.uniform());
    }
    return 0.0;
  }

  std::string spec() const {
    switch (kind_) {
      case Kind::constant: return "det(" + shortest(a_) + ")";
      case Kind::exponential: return "exp(" + shortest(a_) + ")";
      case Kind::lognormal: return "lognormal(" + shortest(a_) + "," + shortest(b_) + ")";
      case Kind::slow_tail: return "slow_tail";
    }
    return "";
  }

 private:
  Marginal(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  Kind kind_;
  double a_;
  double b_;
};

enum class Family { det, exp_indep, eta_eq_xi, lognormal_indep, slow_tail };

enum class CdfForm { closed_form, empirical };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::det: return "det";
    case Family::exp_indep: return "exp_indep";
    case Family::eta_eq_xi: return "eta_eq_xi";
    case Family::lognormal_indep: return "lognormal_indep";
    case Family::slow_tail: return "slow_tail";
  }
  return "";
}

/// Joint law of the positive step pair (xi, eta). Immutable once built.
struct JointStepLaw {
  Family family = Family::exp_indep;
  std::vector<double> params;
  Marginal xi = Marginal::exponential(1.0);
  Marginal eta = Marginal::exponential(1.0);
  bool coupled = false;  // eta == xi pathwise
  double mu = 1.0;
  double sigma2 = 1.0;
  CdfForm eta_cdf_form = CdfForm::closed_form;

  bool degenerate() const { return !(sigma2 > 0.0); }
  bool eta_mean_finite() const { return std::isfinite(eta.mean()); }

  /// Canonical law specification, e.g. `exp_indep(1,2)`.
  std::string spec() const {
    if (family == Family::eta_eq_xi) return "eta_eq_xi(" + xi.spec() + ")";
    std::string out(to_string(family));
    out += '(';
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (i) out += ',';
      out += shortest(params[i]);
    }
    return out + ')';
  }
};

namespace detail {

inline void require_positive(std::span<const double> params, std::string_view family) {
  for (double p : params)
    require(std::isfinite(p) && p > 0.0, Errc::invalid_parameter,
            std::string(family) + ": parameters must be finite and positive");
}

inline void require_arity(std::span<const double> params, std::size_t n, std::string_view family) {
  require(params.size() == n, Errc::invalid_parameter,
          std::string(family) + " expects " + std::to_string(n) + " parameter(s)");
}

inline JointStepLaw finish(JointStepLaw law) {
  law.mu = law.xi.mean();
  law.sigma2 = law.xi.variance();
  return law;
}

}  // namespace detail

/// Iterated standard random walk: eta is xi itself, so T_k = S_k.
inline JointStepLaw make_eta_eq_xi(const Marginal& base) {
  require(base.kind() == Marginal::Kind::exponential || base.kind() == Marginal::Kind::lognormal,
          Errc::invalid_parameter, "eta_eq_xi base must be exp(rate) or lognormal(location,scale)");
  if (base.kind() == Marginal::Kind::exponential) {
    const double p[] = {base.param_a()};
    detail::require_positive(p, "exp");
  } else {
    require(std::isfinite(base.param_a()), Errc::invalid_parameter, "lognormal location must be finite");
    const double p[] = {base.param_b()};
    detail::require_positive(p, "lognormal scale");
  }
  JointStepLaw law;
  law.family = Family::eta_eq_xi;
  law.params = base.kind() == Marginal::Kind::exponential ? std::vector<double>{base.param_a()}
                                                          : std::vector<double>{base.param_a(), base.param_b()};
  law.xi = base;
  law.eta = base;
  law.coupled = true;
  return detail::finish(law);
}

/// Builds a law from its family tag and positional parameters:
///   det(a, b)                  xi = a, eta = b
///   exp_indep(rate_xi, rate_eta)
///   eta_eq_xi(rate)            exponential base
///   lognormal_indep(loc, scale, rate_eta)
///   slow_tail(rate_xi)
inline JointStepLaw make_law(Family family, std::span<const double> params) {
  const std::string name(to_string(family));
  JointStepLaw law;
  law.family = family;
  law.params.assign(params.begin(), params.end());
  switch (family) {
    case Family::det:
      detail::require_arity(params, 2, name);
      detail::require_positive(params, name);
      law.xi = Marginal::constant(params[0]);
      law.eta = Marginal::constant(params[1]);
      break;
    case Family::exp_indep:
      detail::require_arity(params, 2, name);
      detail::require_positive(params, name);
      law.xi = Marginal::exponential(params[0]);
      law.eta = Marginal::exponential(params[1]);
      break;
    case Family::eta_eq_xi:
      detail::require_arity(params, 1, name);
      return make_eta_eq_xi(Marginal::exponential(params[0]));
    case Family::lognormal_indep:
      detail::require_arity(params, 3, name);
      require(std::isfinite(params[0]), Errc::invalid_parameter, name + ": location must be finite");
      detail::require_positive(params.subspan(1), name);
      law.xi = Marginal::lognormal(params[0], params[1]);
      law.eta = Marginal::exponential(params[2]);
      break;
    case Family::slow_tail:
      detail::require_arity(params, 1, name);
      detail::require_positive(params, name);
      law.xi = Marginal::exponential(params[0]);
      law.eta = Marginal::slow_tail();
      break;
  }
  return detail::finish(law);
}

inline JointStepLaw make_law(Family family, std::initializer_list<double> params) {
  return make_law(family, std::span<const double>(params.begin(), params.size()));
}

/// Operations that rely on Var xi in (0, inf) call this first.
inline void require_nondegenerate(const JointStepLaw& law, std::string_view operation) {
  require(!law.degenerate(), Errc::degenerate_law,
          std::string(operation) + " requires Var xi > 0; got " + law.spec());
}

namespace detail {

class SpecParser {
 public:
  explicit SpecParser(std::string_view text) : text_(text) {}

  struct Node {
    std::string name;
    std::vector<double> numbers;
    std::vector<Node> children;
  };

  Node parse() {
    Node node = parse_node();
    skip_ws();
    if (pos_ != text_.size()) error("trailing characters");
    return node;
  }

 private:
  Node parse_node() {
    skip_ws();
    Node node;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      node.name += text_[pos_++];
    if (node.name.empty()) error("expected a family name");
    skip_ws();
    if (pos_ == text_.size() || text_[pos_] != '(') return node;
    ++pos_;
    skip_ws();
    if (peek() == ')') {
      ++pos_;
      return node;
    }
    for (;;) {
      skip_ws();
      if (std::isalpha(static_cast<unsigned char>(peek())) && !starts_number()) {
        node.children.push_back(parse_node());
      } else {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ')') ++pos_;
        double value = 0.0;
        if (!parse_double(text_.substr(start, pos_ - start), value)) error("malformed number");
        node.numbers.push_back(value);
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == ')') {
        ++pos_;
        return node;
      }
      error("expected ',' or ')'");
    }
  }

  bool starts_number() const {
    const std::string_view rest = text_.substr(pos_);
    return rest.starts_with("inf") || rest.starts_with("nan");
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  [[noreturn]] void error(const std::string& what) const {
    fail(Errc::invalid_parameter, "malformed law spec '" + std::string(text_) + "': " + what);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `family(p1,p2,...)`; eta_eq_xi takes a nested base law,
/// `eta_eq_xi(exp(1))` or `eta_eq_xi(lognormal(0,0.5))`.
inline JointStepLaw parse_law(std::string_view text) {
  const auto node = detail::SpecParser(text).parse();
  const auto malformed = [&](const std::string& why) {
    fail(Errc::invalid_parameter, "malformed law spec '" + std::string(text) + "': " + why);
  };
  if (node.name == "eta_eq_xi") {
    if (node.children.size() != 1 || !node.numbers.empty()) malformed("eta_eq_xi takes one nested base law");
    const auto& base = node.children.front();
    if (!base.children.empty()) malformed("nested base law takes numbers only");
    if (base.name == "exp" && base.numbers.size() == 1) return make_eta_eq_xi(Marginal::exponential(base.numbers[0]));
    if (base.name == "lognormal" && base.numbers.size() == 2)
      return make_eta_eq_xi(Marginal::lognormal(base.numbers[0], base.numbers[1]));
    malformed("unknown base law '" + base.name + "'");
  }
  if (!node.children.empty()) malformed("unexpected nested law");
  for (Family f : {Family::det, Family::exp_indep, Family::lognormal_indep, Family::slow_tail})
    if (node.name == to_string(f)) return make_law(f, node.numbers);
  malformed("unknown family '" + node.name + "'");
  return {};
}

struct StepPair {
  double xi;
  double eta;
};

/// Draw order is fixed (xi first, then eta) so a stream replays exactly.
inline StepPair sample_pair(const JointStepLaw& law, Stream& stream) {
  const double xi = law.xi.sample(stream);
  if (law.coupled) return {xi, xi};
  return {xi, law.eta.sample(stream)};
}

inline void require_closed_form_eta(const JointStepLaw& law, std::string_view operation) {
  require(law.eta_cdf_form == CdfForm::closed_form, Errc::unsupported_query,
          std::string(operation) + " needs a closed-form CDF of eta; " + law.spec() + " has none");
}

/// F(t) = P{eta <= t}.
inline double eta_cdf(const JointStepLaw& law, double t) {
  require_closed_form_eta(law, "eta_cdf");
  return law.eta.cdf(t);
}

/// Centering term of the first-generation LIL: mu^{-1} times the integral of
/// F over [0, t].
inline double mean_centering(const JointStepLaw& law, double t) {
  require_closed_form_eta(law, "centering");
  return law.eta.integrated_cdf(t) / law.mu;
}

}  // namespace iterlil
