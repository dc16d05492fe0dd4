#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "iterlil/error.hpp"
#include "iterlil/format.hpp"
#include "iterlil/grid.hpp"
#include "iterlil/law.hpp"
#include "iterlil/rng.hpp"

namespace iterlil {

struct PathOptions {
  std::size_t max_steps = 100'000'000;
};

/// One realised perturbed random walk, truncated so that counts on
/// [0, horizon] are exact: every k with S_{k-1} <= horizon is kept, and the
/// walk stops at the first S_k > horizon.
///
/// xi[i], eta[i] and t_birth[i] belong to step k = i + 1; s[0] = 0 and
/// s[k] = S_k, so t_birth[i] = s[i] + eta[i].
struct PrwPath {
  std::vector<double> xi;
  std::vector<double> eta;
  std::vector<double> s;
  std::vector<double> t_birth;
  double horizon = 0.0;

  std::size_t steps() const { return xi.size(); }
};

/// Draws steps while S_{k-1} <= window and reports each one as
/// on_step(k, S_{k-1}, pair). Returns the number of steps drawn. Both
/// simulate_path and the branching simulator go through here, so a stream
/// yields the same first generation in either.
template <class OnStep>
std::size_t walk_steps(const JointStepLaw& law, double window, Stream& stream, std::size_t max_steps,
                       OnStep&& on_step) {
  double s = 0.0;
  std::size_t k = 0;
  while (s <= window) {
    if (k == max_steps)
      fail(Errc::population_cap, "path exceeded " + std::to_string(max_steps) + " steps before passing horizon " +
                                     shortest(window) + " (horizon too large for mu = " + shortest(law.mu) + ")");
    const StepPair step = sample_pair(law, stream);
    ++k;
    on_step(k, s, step);
    s += step.xi;
  }
  return k;
}

inline PrwPath simulate_path(const JointStepLaw& law, double horizon, Stream& stream,
                             const PathOptions& options = {}) {
  require(horizon > 0.0 && std::isfinite(horizon), Errc::invalid_parameter, "simulate_path needs horizon > 0");
  PrwPath path;
  path.horizon = horizon;
  path.s.push_back(0.0);
  walk_steps(law, horizon, stream, options.max_steps, [&](std::size_t, double s_prev, const StepPair& step) {
    path.xi.push_back(step.xi);
    path.eta.push_back(step.eta);
    path.t_birth.push_back(s_prev + step.eta);
    path.s.push_back(s_prev + step.xi);
  });
  return path;
}

namespace detail {

inline void require_within_horizon(const PrwPath& path, std::span<const double> grid, std::string_view what) {
  require_ascending(grid, what);
  require(grid.back() <= path.horizon, Errc::out_of_horizon,
          std::string(what) + ": grid point " + shortest(grid.back()) + " beyond path horizon " +
              shortest(path.horizon));
}

inline void require_within_horizon(const PrwPath& path, double t, std::string_view what) {
  require(t <= path.horizon, Errc::out_of_horizon,
          std::string(what) + ": t = " + shortest(t) + " beyond path horizon " + shortest(path.horizon));
}

}  // namespace detail

/// Y(t) = #{k >= 1 : T_k <= t} on the grid.
inline GridFunction count_y(const PrwPath& path, std::span<const double> grid) {
  detail::require_within_horizon(path, grid, "count_y");
  std::vector<double> births = path.t_birth;
  std::sort(births.begin(), births.end());
  GridFunction out{{grid.begin(), grid.end()}, {}};
  out.values.reserve(grid.size());
  for (double t : grid)
    out.values.push_back(static_cast<double>(std::upper_bound(births.begin(), births.end(), t) - births.begin()));
  return out;
}

/// nu(t) = #{k >= 0 : S_k <= t} on the grid; S_0 = 0 is always counted.
inline GridFunction count_nu(const PrwPath& path, std::span<const double> grid) {
  detail::require_within_horizon(path, grid, "count_nu");
  GridFunction out{{grid.begin(), grid.end()}, {}};
  out.values.reserve(grid.size());
  for (double t : grid)
    out.values.push_back(static_cast<double>(std::upper_bound(path.s.begin(), path.s.end(), t) - path.s.begin()));
  return out;
}

/// Sum over k >= 0 with S_k <= t of 1 - F(t - S_k).
inline double tail_sum(const PrwPath& path, double t, const JointStepLaw& law) {
  detail::require_within_horizon(path, t, "tail_sum");
  require_closed_form_eta(law, "tail_sum");
  double sum = 0.0;
  for (std::size_t k = 0; k < path.s.size() && path.s[k] <= t; ++k) sum += law.eta.survival(t - path.s[k]);
  return sum;
}

/// Centred first-generation count split into its martingale part x and
/// renewal part z:
///   x = Y(t) - sum_{S_k <= t} F(t - S_k)
///   z = sum_{S_k <= t} F(t - S_k) - mu^{-1} * integral_0^t F
struct XzDecomposition {
  double x = 0.0;
  double z = 0.0;
  double y = 0.0;             // Y(t)
  double compensator = 0.0;   // sum_{S_k <= t} F(t - S_k)
  double centering = 0.0;     // mu^{-1} * integral_0^t F
};

inline XzDecomposition decompose_xz(const PrwPath& path, double t, const JointStepLaw& law) {
  detail::require_within_horizon(path, t, "decompose_xz");
  require_closed_form_eta(law, "decompose_xz");
  XzDecomposition d;
  for (double b : path.t_birth)
    if (b <= t) d.y += 1.0;
  for (std::size_t k = 0; k < path.s.size() && path.s[k] <= t; ++k) d.compensator += law.eta.cdf(t - path.s[k]);
  d.centering = mean_centering(law, t);
  d.x = d.y - d.compensator;
  d.z = d.compensator - d.centering;
  return d;
}

struct SupermartingaleValue {
  double value = 0.0;
  double exponent = 0.0;
  bool overflow = false;  // value saturated at DBL_MAX
};

/// exp(u X(t) - (u^2 e^{|u|} / 2) * tail_sum(t)); its mean is at most one for
/// every law of eta.
inline SupermartingaleValue supermartingale_stat(const PrwPath& path, double t, double u, const JointStepLaw& law) {
  require(u != 0.0 && std::isfinite(u), Errc::invalid_parameter, "supermartingale_stat needs finite u != 0");
  const double x = decompose_xz(path, t, law).x;
  const double tail = tail_sum(path, t, law);
  SupermartingaleValue out;
  out.exponent = u * x - 0.5 * u * u * std::exp(std::abs(u)) * tail;
  if (out.exponent > std::log(std::numeric_limits<double>::max())) {
    out.value = std::numeric_limits<double>::max();
    out.overflow = true;
  } else {
    out.value = std::exp(out.exponent);
  }
  return out;
}

/// Diagnostic (log log t)(1 - F(t)); the first-generation LIL for X alone can
/// fail when it diverges.
inline double loglog_tail_diagnostic(const JointStepLaw& law, double t) {
  require(t > std::numbers::e, Errc::domain_error, "loglog diagnostic needs t > e");
  return std::log(std::log(t)) * law.eta.survival(t);
}

/// Debug dump: k, xi, eta, s (= S_k), t_birth (= S_{k-1} + eta_k).
inline void write_path_csv(std::ostream& os, const PrwPath& path) {
  os << "k,xi,eta,s,t_birth\n";
  for (std::size_t i = 0; i < path.steps(); ++i)
    os << (i + 1) << ',' << sig17(path.xi[i]) << ',' << sig17(path.eta[i]) << ',' << sig17(path.s[i + 1]) << ','
       << sig17(path.t_birth[i]) << '\n';
}

}  // namespace iterlil
