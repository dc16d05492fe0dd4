#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "iterlil/branching.hpp"
#include "iterlil/error.hpp"
#include "iterlil/format.hpp"
#include "iterlil/grid.hpp"
#include "iterlil/law.hpp"
#include "iterlil/parallel.hpp"
#include "iterlil/path.hpp"
#include "iterlil/renewal.hpp"
#include "iterlil/stats.hpp"

namespace iterlil {

/// LIL normalizer of generation j:
///   (2 ((2j-1)(j-1)!)^{-1} sigma^2 mu^{-2j-1} t^{2j-1} log log t)^{1/2}.
/// For j = 1 this is a(t) = (2 sigma^2 mu^{-3} t log log t)^{1/2}.
inline double lil_normalizer(int j, double mu, double sigma2, double t) {
  require(j >= 1, Errc::invalid_parameter, "lil_normalizer needs j >= 1");
  require(mu > 0.0 && sigma2 > 0.0, Errc::invalid_parameter, "lil_normalizer needs mu > 0 and sigma2 > 0");
  require(t > std::numbers::e, Errc::domain_error, "lil_normalizer needs t > e, got " + shortest(t));
  double factorial = 1.0;
  for (int i = 2; i < j; ++i) factorial *= i;
  const double coefficient = 2.0 / ((2.0 * j - 1.0) * factorial);
  return std::sqrt(coefficient * sigma2 * std::pow(mu, -(2.0 * j + 1.0)) * std::pow(t, 2.0 * j - 1.0) *
                   std::log(std::log(t)));
}

/// Y(t) - mu^{-1} * integral_0^t P{eta <= y} dy.
inline double center_y1(double y, double t, const JointStepLaw& law) { return y - mean_centering(law, t); }

struct HarnessOptions {
  unsigned workers = 1;
  /// Step of the renewal tables used for centering; 0 picks
  /// max(0.01, t_max / 20000).
  double table_step = 0.0;
  BranchingOptions branching{};
};

namespace detail {

inline double auto_step(double t_max, double requested) {
  return requested > 0.0 ? requested : std::max(0.01, t_max / 20000.0);
}

inline std::vector<std::vector<double>> per_replicate(std::size_t n_rep, unsigned workers,
                                                      const std::function<std::vector<double>(std::size_t)>& fn) {
  return parallel_map<std::vector<double>>(n_rep, workers, fn);
}

inline std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t i) {
  std::vector<double> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) out[r] = rows[r][i];
  return out;
}

inline bool nonincreasing(std::span<const double> v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) return false;
  return true;
}

}  // namespace detail

/// Normalised fluctuations R_j(t) = (Y_j(t) - V_j(t)) / normalizer(t) along
/// a scan grid, with running extremes per replicate.
struct LilScanResult {
  int j = 1;
  std::vector<double> scan_times;
  std::vector<double> centering;   // V_j(t), or mu^{-1} int_0^t F for j = 1
  std::vector<double> normalizer;
  std::vector<std::vector<double>> counts;  // [replicate][time]
  std::vector<std::vector<double>> r;
  std::vector<std::vector<double>> running_max;
  std::vector<std::vector<double>> running_min;
  double envelope_max = 0.0;
  double envelope_min = 0.0;
  std::string fingerprint;

  std::size_t replicates() const { return r.size(); }

  bool extremes_monotone() const {
    for (std::size_t rep = 0; rep < r.size(); ++rep)
      for (std::size_t i = 1; i < scan_times.size(); ++i)
        if (running_max[rep][i] < running_max[rep][i - 1] || running_min[rep][i] > running_min[rep][i - 1])
          return false;
    return true;
  }
};

inline LilScanResult lil_scan(const JointStepLaw& law, int j, const GridSpec& preset, double t_min, double t_max,
                              std::size_t n_rep, std::uint64_t seed, const HarnessOptions& options = {}) {
  require_nondegenerate(law, "lil_scan");
  require(j >= 1, Errc::invalid_parameter, "lil_scan needs j >= 1");
  require(n_rep >= 1, Errc::invalid_parameter, "lil_scan needs n_rep >= 1");
  require(t_min > std::exp(2.0), Errc::domain_error, "lil_scan needs t_min > e^2");
  require(t_max >= t_min, Errc::grid_error, "lil_scan needs t_max >= t_min");

  LilScanResult out;
  out.j = j;
  out.scan_times = preset.build(t_min, t_max);
  require_ascending(out.scan_times, "lil_scan");
  require(out.scan_times.front() > std::exp(2.0), Errc::domain_error, "scan times must exceed e^2");
  const double horizon = out.scan_times.back();
  const double step = detail::auto_step(horizon, options.table_step);
  out.fingerprint = law.spec() + ";j=" + std::to_string(j) + ";grid=" + preset.canonical() + ";t_min=" +
                    shortest(t_min) + ";t_max=" + shortest(t_max) + ";n_rep=" + std::to_string(n_rep) +
                    ";seed=" + std::to_string(seed) + (j >= 2 ? ";h=" + shortest(step) : "");

  if (j == 1) {
    for (double t : out.scan_times) out.centering.push_back(mean_centering(law, t));
  } else {
    const RenewalTable table = build_tables(law, step, horizon + step, j);
    for (double t : out.scan_times) out.centering.push_back(table.v_at(j, t));
  }
  for (double t : out.scan_times) out.normalizer.push_back(lil_normalizer(j, law.mu, law.sigma2, t));

  BranchingOptions inner = options.branching;
  inner.workers = 1;
  out.counts = detail::per_replicate(n_rep, options.workers, [&](std::size_t rep) {
    Stream stream = Stream::replicate(seed, rep);
    if (j == 1) return count_y(simulate_path(law, horizon, stream), out.scan_times).values;
    return simulate_generations(law, horizon, j, out.scan_times, stream, inner).generation(j).values;
  });

  const std::size_t n_t = out.scan_times.size();
  out.r.assign(n_rep, std::vector<double>(n_t));
  out.running_max.assign(n_rep, std::vector<double>(n_t));
  out.running_min.assign(n_rep, std::vector<double>(n_t));
  out.envelope_max = -std::numeric_limits<double>::infinity();
  out.envelope_min = std::numeric_limits<double>::infinity();
  for (std::size_t rep = 0; rep < n_rep; ++rep) {
    for (std::size_t i = 0; i < n_t; ++i) {
      const double value = (out.counts[rep][i] - out.centering[i]) / out.normalizer[i];
      require(std::isfinite(value), Errc::domain_error, "non-finite normalised value in lil_scan");
      out.r[rep][i] = value;
      out.running_max[rep][i] = i ? std::max(out.running_max[rep][i - 1], value) : value;
      out.running_min[rep][i] = i ? std::min(out.running_min[rep][i - 1], value) : value;
    }
    out.envelope_max = std::max(out.envelope_max, out.running_max[rep].back());
    out.envelope_min = std::min(out.envelope_min, out.running_min[rep].back());
  }
  return out;
}

/// replicate, t, Y_j, V_j, normalizer, R_j, running_max, running_min
inline void write_scan_csv(std::ostream& os, const LilScanResult& scan) {
  os << "replicate,t,Y_j,V_j,normalizer,R_j,running_max,running_min\n";
  for (std::size_t rep = 0; rep < scan.replicates(); ++rep)
    for (std::size_t i = 0; i < scan.scan_times.size(); ++i)
      os << rep << ',' << sig17(scan.scan_times[i]) << ',' << sig17(scan.counts[rep][i]) << ','
         << sig17(scan.centering[i]) << ',' << sig17(scan.normalizer[i]) << ',' << sig17(scan.r[rep][i]) << ','
         << sig17(scan.running_max[rep][i]) << ',' << sig17(scan.running_min[rep][i]) << '\n';
}

struct VarianceScan {
  std::vector<double> t_points;
  std::vector<double> mean;
  std::vector<double> variance;
  double slope = 0.0;  // OLS slope of log variance on log t
};

/// Monte Carlo growth exponent of Var Y_k(t).
inline VarianceScan variance_scan(const JointStepLaw& law, int k, std::span<const double> t_points, std::size_t n_rep,
                                  std::uint64_t seed, const HarnessOptions& options = {}) {
  require_nondegenerate(law, "variance_scan");
  require(k >= 1, Errc::invalid_parameter, "variance_scan needs k >= 1");
  require(n_rep >= 2, Errc::invalid_parameter, "variance_scan needs n_rep >= 2");
  require_ascending(t_points, "variance_scan");
  require(t_points.size() >= 5 && t_points.back() >= 10.0 * t_points.front(), Errc::grid_error,
          "variance_scan needs >= 5 time points spanning at least one decade");
  BranchingOptions inner = options.branching;
  inner.workers = 1;
  const auto rows = detail::per_replicate(n_rep, options.workers, [&](std::size_t rep) {
    return simulate_generations(law, t_points.back(), k, t_points, Stream::replicate(seed, rep), inner)
        .generation(k)
        .values;
  });
  VarianceScan out;
  out.t_points.assign(t_points.begin(), t_points.end());
  std::vector<double> log_t;
  std::vector<double> log_var;
  for (std::size_t i = 0; i < t_points.size(); ++i) {
    const auto col = detail::column(rows, i);
    out.mean.push_back(stats::mean(col));
    out.variance.push_back(stats::variance(col));
    require(out.variance.back() > 0.0, Errc::domain_error, "zero Monte Carlo variance at t = " + shortest(t_points[i]));
    log_t.push_back(std::log(t_points[i]));
    log_var.push_back(std::log(out.variance.back()));
  }
  out.slope = stats::ols_slope(log_t, log_var);
  return out;
}

struct CltCheck {
  double ks = 0.0;
  double threshold = 0.0;  // 1% asymptotic critical value
  double sample_mean = 0.0;
  double u_at_t = 0.0;
  bool passed() const { return ks < threshold; }
};

/// KS distance between {(nu_i(t) - U(t)) / (sigma^2 mu^{-3} t)^{1/2}} and the
/// standard normal, with U(t) read from `table`.
inline CltCheck clt_check(const JointStepLaw& law, const RenewalTable& table, double t, std::size_t n_rep,
                          std::uint64_t seed, const HarnessOptions& options = {}) {
  require_nondegenerate(law, "clt_check");
  require(n_rep >= 100, Errc::invalid_parameter, "clt_check needs n_rep >= 100");
  require(t > 0.0 && t <= table.t_max * (1.0 + 1e-12), Errc::table_range,
          "clt_check: t = " + shortest(t) + " beyond renewal table t_max " + shortest(table.t_max));
  CltCheck out;
  out.u_at_t = table.u_at(t);
  const double scale = std::sqrt(law.sigma2 * std::pow(law.mu, -3.0) * t);
  const auto sample = parallel_map<double>(n_rep, options.workers, [&](std::size_t rep) {
    Stream stream = Stream::replicate(seed, rep);
    const auto nu = walk_steps(law, t, stream, PathOptions{}.max_steps, [](std::size_t, double, const StepPair&) {});
    return (static_cast<double>(nu) - out.u_at_t) / scale;
  });
  out.ks = stats::ks_statistic(sample, normal_cdf);
  out.threshold = stats::ks_critical_1pct(n_rep);
  out.sample_mean = stats::mean(sample);
  return out;
}

inline CltCheck clt_check(const JointStepLaw& law, double t, std::size_t n_rep, std::uint64_t seed,
                          const HarnessOptions& options = {}) {
  require(t > 0.0, Errc::invalid_parameter, "clt_check needs t > 0");
  const double step = options.table_step > 0.0 ? options.table_step : std::max(0.01, t / 10000.0);
  return clt_check(law, renewal_function(law, step, t), t, n_rep, seed, options);
}

struct SupermartingaleCheck {
  double mean = 0.0;
  double se = 0.0;
  std::size_t overflow_count = 0;
  bool passed() const { return mean <= 1.0 + 3.0 * se; }
};

/// Monte Carlo estimate of E exp(u X(t) - (u^2 e^{|u|}/2) tail_sum(t)); the
/// exact value is at most 1.
inline SupermartingaleCheck supermartingale_check(const JointStepLaw& law, double t, double u, std::size_t n_rep,
                                                  std::uint64_t seed, const HarnessOptions& options = {}) {
  require(u != 0.0 && std::isfinite(u), Errc::invalid_parameter, "supermartingale_check needs finite u != 0");
  require(n_rep >= 2, Errc::invalid_parameter, "supermartingale_check needs n_rep >= 2");
  const auto values = parallel_map<SupermartingaleValue>(n_rep, options.workers, [&](std::size_t rep) {
    Stream stream = Stream::replicate(seed, rep);
    return supermartingale_stat(simulate_path(law, t, stream), t, u, law);
  });
  std::vector<double> v;
  v.reserve(n_rep);
  SupermartingaleCheck out;
  for (const auto& s : values) {
    v.push_back(s.value);
    out.overflow_count += s.overflow ? 1 : 0;
  }
  out.mean = stats::mean(v);
  out.se = stats::standard_error(v);
  return out;
}

struct MedianDecay {
  std::vector<double> t_points;
  std::vector<double> medians;
  bool passed = false;
};

/// Medians of t^{-1} tail_sum(t). Passes when the medians are nonincreasing
/// and, if E eta < inf, the last one is below half the first.
inline MedianDecay tail_sum_check(const JointStepLaw& law, std::span<const double> t_points, std::size_t n_rep,
                                  std::uint64_t seed, const HarnessOptions& options = {}) {
  require_ascending(t_points, "tail_sum_check");
  require(t_points.size() >= 2 && n_rep >= 1, Errc::invalid_parameter, "tail_sum_check needs >= 2 times, n_rep >= 1");
  const auto rows = detail::per_replicate(n_rep, options.workers, [&](std::size_t rep) {
    Stream stream = Stream::replicate(seed, rep);
    const PrwPath path = simulate_path(law, t_points.back(), stream);
    std::vector<double> row;
    for (double t : t_points) row.push_back(tail_sum(path, t, law) / t);
    return row;
  });
  MedianDecay out;
  out.t_points.assign(t_points.begin(), t_points.end());
  for (std::size_t i = 0; i < t_points.size(); ++i) out.medians.push_back(stats::median(detail::column(rows, i)));
  out.passed = detail::nonincreasing(out.medians);
  if (law.eta_mean_finite()) out.passed = out.passed && out.medians.back() < out.medians.front() / 2.0;
  return out;
}

/// Medians of (nu(t + b) - nu(t)) / t^c; passes when nonincreasing in t.
inline MedianDecay nu_increment_check(const JointStepLaw& law, std::span<const double> t_points, double b, double c,
                                      std::size_t n_rep, std::uint64_t seed, const HarnessOptions& options = {}) {
  require_ascending(t_points, "nu_increment_check");
  require(b > 0.0 && c > 0.0 && n_rep >= 1, Errc::invalid_parameter, "nu_increment_check needs b, c > 0");
  const auto rows = detail::per_replicate(n_rep, options.workers, [&](std::size_t rep) {
    Stream stream = Stream::replicate(seed, rep);
    const PrwPath path = simulate_path(law, t_points.back() + b, stream);
    std::vector<double> grid;
    for (double t : t_points) {
      grid.push_back(t);
      grid.push_back(t + b);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const auto nu = count_nu(path, grid);
    std::vector<double> row;
    for (double t : t_points) row.push_back((nu.at(t + b) - nu.at(t)) / std::pow(t, c));
    return row;
  });
  MedianDecay out;
  out.t_points.assign(t_points.begin(), t_points.end());
  for (std::size_t i = 0; i < t_points.size(); ++i) out.medians.push_back(stats::median(detail::column(rows, i)));
  out.passed = detail::nonincreasing(out.medians);
  return out;
}

struct ZjScan {
  std::vector<double> t_points;
  std::vector<double> median_ratio;  // median of |Z_j(t)| / (t^{2j-1} log log t)^{1/2}
  std::vector<double> mean;          // mean of Z_j(t)
  std::vector<double> se;
};

/// Replicated Z_j along t_points, with V_{j-1} from a renewal table.
inline ZjScan zj_scan(const JointStepLaw& law, int j, std::span<const double> t_points, std::size_t n_rep,
                      std::uint64_t seed, const HarnessOptions& options = {}) {
  require(j >= 2, Errc::invalid_parameter, "zj_scan needs j >= 2");
  require_ascending(t_points, "zj_scan");
  require(t_points.front() > std::numbers::e, Errc::domain_error, "zj_scan needs t > e");
  const double horizon = t_points.back();
  const double step = detail::auto_step(horizon, options.table_step);
  const RenewalTable table = build_tables(law, step, horizon + step, j - 1);
  const GridFunction previous = table.v(j - 1);
  BranchingOptions inner = options.branching;
  inner.workers = 1;
  const auto rows = detail::per_replicate(n_rep, options.workers, [&](std::size_t rep) {
    return zj_term(law, horizon, j, t_points, Stream::replicate(seed, rep), previous, inner).values;
  });
  ZjScan out;
  out.t_points.assign(t_points.begin(), t_points.end());
  for (std::size_t i = 0; i < t_points.size(); ++i) {
    const double t = t_points[i];
    const auto col = detail::column(rows, i);
    const double norm = std::sqrt(std::pow(t, 2.0 * j - 1.0) * std::log(std::log(t)));
    std::vector<double> ratio;
    for (double z : col) ratio.push_back(std::abs(z) / norm);
    out.median_ratio.push_back(stats::median(ratio));
    out.mean.push_back(stats::mean(col));
    out.se.push_back(stats::standard_error(col));
  }
  return out;
}

}  // namespace iterlil
