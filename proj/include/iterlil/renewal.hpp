#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "iterlil/branching.hpp"
#include "iterlil/error.hpp"
#include "iterlil/format.hpp"
#include "iterlil/grid.hpp"
#include "iterlil/law.hpp"
#include "iterlil/parallel.hpp"
#include "iterlil/rng.hpp"
#include "iterlil/stats.hpp"

namespace iterlil {

/// U, F and V_j tabulated on {0, h, 2h, ...}. Every table is the running sum
/// of a convolution of nonnegative increments, so each one is
/// nondecreasing exactly, in floating point too.
struct RenewalTable {
  double h = 0.01;
  double t_max = 0.0;
  std::vector<double> u_vals;
  std::vector<double> f_vals;
  std::vector<std::vector<double>> v_vals;  // v_vals[j] holds V_j; v_vals[0] unused

  std::size_t nodes() const { return u_vals.size(); }
  double time(std::size_t i) const { return static_cast<double>(i) * h; }
  bool has_v(int j) const {
    return j >= 1 && static_cast<std::size_t>(j) < v_vals.size() && !v_vals[static_cast<std::size_t>(j)].empty();
  }
  int highest_v() const {
    int j = 0;
    while (has_v(j + 1)) ++j;
    return j;
  }

  const std::vector<double>& v_of(int j) const {
    require(has_v(j), Errc::table_range, "V_" + std::to_string(j) + " has not been tabulated");
    return v_vals[static_cast<std::size_t>(j)];
  }

  /// Linear interpolation of a tabulated column at x in [0, t_max].
  double interpolate(const std::vector<double>& vals, double x) const {
    require(x >= 0.0 && x <= t_max * (1.0 + 1e-12), Errc::table_range,
            "point " + shortest(x) + " outside table range [0, " + shortest(t_max) + "]");
    const double pos = x / h;
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= vals.size()) return vals.back();
    const double w = pos - static_cast<double>(i);
    return vals[i] + w * (vals[i + 1] - vals[i]);
  }
  double u_at(double x) const { return interpolate(u_vals, x); }
  double v_at(int j, double x) const { return interpolate(v_of(j), x); }

  GridFunction as_grid_function(const std::vector<double>& vals) const {
    GridFunction g;
    g.grid.reserve(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) g.grid.push_back(time(i));
    g.values = vals;
    return g;
  }
  GridFunction u() const { return as_grid_function(u_vals); }
  GridFunction v(int j) const { return as_grid_function(v_of(j)); }
};

namespace detail {

/// sum_{k=lo}^{hi} a[k] * b[n - k]
inline double convolve_at(const std::vector<double>& a, const std::vector<double>& b, std::size_t n, std::size_t lo,
                          std::size_t hi) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t k = lo;
  for (; k + 3 <= hi; k += 4) {
    acc[0] += a[k] * b[n - k];
    acc[1] += a[k + 1] * b[n - k - 1];
    acc[2] += a[k + 2] * b[n - k - 2];
    acc[3] += a[k + 3] * b[n - k - 3];
  }
  for (; k <= hi; ++k) acc[0] += a[k] * b[n - k];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

inline std::size_t last_nonzero(const std::vector<double>& v) {
  std::size_t n = v.size();
  while (n > 0 && v[n - 1] == 0.0) --n;
  return n == 0 ? 0 : n - 1;
}

inline std::vector<double> increments(const std::vector<double>& vals) {
  std::vector<double> d(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) d[i] = i ? std::max(0.0, vals[i] - vals[i - 1]) : vals[0];
  return d;
}

/// Running sum of the discrete convolution of two increment sequences.
inline std::vector<double> convolve_cumulative(const std::vector<double>& da, const std::vector<double>& db) {
  const std::size_t n = da.size();
  const std::size_t support = last_nonzero(da);
  std::vector<double> out(n);
  double running = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    running += convolve_at(da, db, i, 0, std::min(i, support));
    out[i] = running;
  }
  return out;
}

/// Lattice law on {0, h, 2h, ...} with the same mean as xi: the mass of each
/// cell (t_{m-1}, t_m] is split between its two end nodes in proportion to
/// where its centre of mass sits. Atoms on lattice nodes stay put.
inline std::vector<double> lattice_step_law(const Marginal& xi, double h, std::size_t n) {
  std::vector<double> p(n, 0.0);
  for (std::size_t m = 1; m <= n; ++m) {
    const double lo = static_cast<double>(m - 1) * h;
    const double hi = static_cast<double>(m) * h;
    const double mass = std::max(0.0, xi.survival(lo) - xi.survival(hi));
    if (mass == 0.0) continue;
    const double right = std::clamp(xi.partial_moment(lo, hi) / h, 0.0, mass);
    p[m - 1] += mass - right;
    if (m < n) p[m] += right;
  }
  return p;
}

}  // namespace detail

/// Solves U = 1_{[0,inf)} + F_xi * U on the lattice {0, h, ..., t_max} and
/// tabulates F = P{eta <= t} alongside.
inline RenewalTable renewal_function(const JointStepLaw& law, double h, double t_max) {
  require(h > 0.0 && std::isfinite(h), Errc::grid_error, "renewal table needs h > 0");
  require(t_max > 0.0 && std::isfinite(t_max), Errc::grid_error, "renewal table needs t_max > 0");
  require(t_max / h <= 1e8, Errc::grid_error, "renewal table: t_max / h exceeds 1e8 nodes");
  const auto n = static_cast<std::size_t>(std::floor(t_max / h + 1e-9)) + 1;

  RenewalTable table;
  table.h = h;
  table.t_max = static_cast<double>(n - 1) * h;

  const std::vector<double> p = detail::lattice_step_law(law.xi, h, n);
  require(p[0] < 1.0 - 1e-9, Errc::grid_error, "renewal table: step h too coarse for the law of xi");
  const double scale = 1.0 / (1.0 - p[0]);
  const std::size_t support = detail::last_nonzero(p);

  // (1 - p0) dU_i = p_i U_0 + sum_{k=1}^{i-1} p_k dU_{i-k}: all terms >= 0
  std::vector<double> du(n, 0.0);
  du[0] = scale;
  for (std::size_t i = 1; i < n; ++i) {
    double acc = (i <= support ? p[i] : 0.0) * du[0];
    if (i >= 2) acc += detail::convolve_at(p, du, i, 1, std::min(i - 1, support));
    du[i] = acc * scale;
  }
  table.u_vals.resize(n);
  double running = 0.0;
  for (std::size_t i = 0; i < n; ++i) table.u_vals[i] = (running += du[i]);

  if (law.eta_cdf_form == CdfForm::closed_form) {
    table.f_vals.resize(n);
    for (std::size_t i = 0; i < n; ++i) table.f_vals[i] = law.eta.cdf(table.time(i));
  }
  table.v_vals.resize(1);
  return table;
}

/// V(t) = (F * U)(t): v_i = sum_m F(t_i - t_m) dU(t_m).
inline RenewalTable v1_table(RenewalTable table, const JointStepLaw& law) {
  require_closed_form_eta(law, "v1_table");
  require(!table.u_vals.empty(), Errc::table_range, "v1_table needs a renewal function table");
  if (table.f_vals.size() != table.nodes()) {
    table.f_vals.resize(table.nodes());
    for (std::size_t i = 0; i < table.nodes(); ++i) table.f_vals[i] = law.eta.cdf(table.time(i));
  }
  if (table.v_vals.size() < 2) table.v_vals.resize(2);
  table.v_vals[1] = detail::convolve_cumulative(detail::increments(table.f_vals), detail::increments(table.u_vals));
  return table;
}

/// V_j = V_{j-1} * V with left-endpoint Stieltjes weights dV.
inline RenewalTable vj_table(RenewalTable table, int j) {
  require(j >= 2, Errc::invalid_parameter, "vj_table needs j >= 2");
  require(table.has_v(1) && table.has_v(j - 1), Errc::table_range,
          "vj_table needs V_1 and V_" + std::to_string(j - 1));
  if (table.v_vals.size() < static_cast<std::size_t>(j) + 1) table.v_vals.resize(static_cast<std::size_t>(j) + 1);
  table.v_vals[static_cast<std::size_t>(j)] =
      detail::convolve_cumulative(detail::increments(table.v_of(j - 1)), detail::increments(table.v_of(1)));
  return table;
}

/// U, V_1, ..., V_{j_max} in one go.
inline RenewalTable build_tables(const JointStepLaw& law, double h, double t_max, int j_max) {
  RenewalTable table = v1_table(renewal_function(law, h, t_max), law);
  for (int j = 2; j <= j_max; ++j) table = vj_table(std::move(table), j);
  return table;
}

/// Monte Carlo mean with per-point standard errors.
struct McEstimate {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> se;
};

/// Mean of Y_j over n_rep independent branching runs; replicate r uses
/// Stream::replicate(seed, r).
inline McEstimate vj_monte_carlo(const JointStepLaw& law, int j, std::span<const double> grid, std::size_t n_rep,
                                 std::uint64_t seed, const BranchingOptions& options = {}) {
  require(j >= 1, Errc::invalid_parameter, "vj_monte_carlo needs j >= 1");
  require(n_rep >= 1, Errc::invalid_parameter, "vj_monte_carlo needs n_rep >= 1");
  require_ascending(grid, "vj_monte_carlo");
  BranchingOptions inner = options;
  inner.workers = 1;
  const auto rows = parallel_map<std::vector<double>>(n_rep, options.workers, [&](std::size_t r) {
    return simulate_generations(law, grid.back(), j, grid, Stream::replicate(seed, r), inner).generation(j).values;
  });
  McEstimate est{{grid.begin(), grid.end()}, {}, {}};
  std::vector<double> column(n_rep);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t r = 0; r < n_rep; ++r) column[r] = rows[r][i];
    est.mean.push_back(stats::mean(column));
    est.se.push_back(stats::standard_error(column));
  }
  return est;
}

struct SubadditivityCheck {
  double residual = 0.0;   // U(hh) V(x+hh)^{k-1} - (V_k(x+hh) - V_k(x))
  double tolerance = 0.0;  // eps_num; the inequality holds numerically iff residual >= -tolerance
  bool holds() const { return residual >= -tolerance; }
};

/// Numeric check of V_k(x+hh) - V_k(x) <= U(hh) V(x+hh)^{k-1}. The tolerance
/// is 10 h times a local Lipschitz bound of the residual in its arguments,
/// taken from the table slopes next to the evaluation points.
inline SubadditivityCheck check_subadditivity(const RenewalTable& table, int k, double x, double hh) {
  require(k >= 1, Errc::invalid_parameter, "check_subadditivity needs k >= 1");
  require(x > 0.0 && hh > 0.0, Errc::invalid_parameter, "check_subadditivity needs x, hh > 0");
  require(x + hh <= table.t_max * (1.0 + 1e-12), Errc::table_range,
          "x + hh = " + shortest(x + hh) + " beyond table t_max " + shortest(table.t_max));
  const auto& vk = table.v_of(k);
  const auto& v1 = table.v_of(1);

  const auto slope = [&](const std::vector<double>& vals, double at) {
    const auto centre = static_cast<std::ptrdiff_t>(std::floor(at / table.h));
    double s = 0.0;
    for (std::ptrdiff_t i = centre - 1; i <= centre + 1; ++i) {
      if (i < 0 || static_cast<std::size_t>(i) + 1 >= vals.size()) continue;
      s = std::max(s, (vals[static_cast<std::size_t>(i) + 1] - vals[static_cast<std::size_t>(i)]) / table.h);
    }
    return s;
  };

  const double far = x + hh;
  const double u_h = table.interpolate(table.u_vals, hh);
  const double v_far = table.interpolate(v1, far);
  const double power = std::pow(v_far, k - 1);
  SubadditivityCheck out;
  out.residual = u_h * power - (table.interpolate(vk, far) - table.interpolate(vk, x));
  const double d_power = k >= 2 ? (k - 1) * std::pow(v_far, k - 2) * slope(v1, far) : 0.0;
  const double lipschitz = slope(vk, far) + slope(vk, x) + slope(table.u_vals, hh) * power + u_h * d_power;
  out.tolerance = 10.0 * table.h * lipschitz;
  return out;
}

/// CSV export: t, U, V1, ..., Vj for every consecutively tabulated V_j.
inline void write_table_csv(std::ostream& os, const RenewalTable& table) {
  const int jmax = table.highest_v();
  os << "t,U";
  for (int j = 1; j <= jmax; ++j) os << ",V" << j;
  os << '\n';
  for (std::size_t i = 0; i < table.nodes(); ++i) {
    os << sig17(table.time(i)) << ',' << sig17(table.u_vals[i]);
    for (int j = 1; j <= jmax; ++j) os << ',' << sig17(table.v_vals[static_cast<std::size_t>(j)][i]);
    os << '\n';
  }
}

/// Reads a table written by write_table_csv. F is not part of the export.
inline RenewalTable read_table_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), Errc::table_range, "empty renewal table CSV");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  require(header.size() >= 2 && header[0] == "t" && header[1] == "U", Errc::table_range,
          "renewal table CSV must start with columns t,U");
  for (std::size_t c = 2; c < header.size(); ++c)
    require(header[c] == "V" + std::to_string(c - 1), Errc::table_range, "unexpected column " + header[c]);

  RenewalTable table;
  table.v_vals.resize(header.size() - 1);
  std::vector<double> times;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      double value = 0.0;
      require(parse_double(cell, value) && c < header.size(), Errc::table_range, "malformed renewal table row");
      if (c == 0) times.push_back(value);
      else if (c == 1) table.u_vals.push_back(value);
      else table.v_vals[c - 1].push_back(value);
      ++c;
    }
    require(c == header.size(), Errc::table_range, "renewal table row has the wrong number of cells");
  }
  require(times.size() >= 2 && times[0] == 0.0, Errc::table_range, "renewal table needs >= 2 rows starting at t = 0");
  table.h = times[1];
  table.t_max = times.back();
  return table;
}

}  // namespace iterlil
