#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "iterlil/error.hpp"
#include "iterlil/law.hpp"

namespace iterlil::stats {

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

/// Unbiased sample variance (two-pass).
inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double standard_error(std::span<const double> xs) {
  return xs.empty() ? 0.0 : std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

inline double median(std::span<const double> xs) {
  require(!xs.empty(), Errc::invalid_parameter, "median of an empty sample");
  std::vector<double> v(xs.begin(), xs.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

/// Ordinary least-squares slope of y on x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, Errc::invalid_parameter, "ols_slope needs >= 2 paired points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  require(sxx > 0.0, Errc::invalid_parameter, "ols_slope: x values are all equal");
  return sxy / sxx;
}

/// One-sample Kolmogorov-Smirnov statistic sup |F_n - F| against a
/// continuous CDF.
template <class Cdf>
double ks_statistic(std::span<const double> sample, Cdf&& cdf) {
  require(!sample.empty(), Errc::invalid_parameter, "KS statistic of an empty sample");
  std::vector<double> v(sample.begin(), sample.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic two-sided KS critical value at the 1% level, 1.63 / sqrt(n).
inline double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

}  // namespace iterlil::stats
