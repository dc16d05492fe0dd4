#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iterlil/error.hpp"
#include "iterlil/format.hpp"

namespace iterlil {

/// Values of a function on an ascending time grid.
struct GridFunction {
  std::vector<double> grid;
  std::vector<double> values;

  std::size_t size() const { return grid.size(); }

  /// Linear interpolation between nodes; outside [grid.front(), grid.back()]
  /// is a table-range error.
  double at(double x) const {
    require(!grid.empty(), Errc::table_range, "interpolation on an empty grid function");
    require(x >= grid.front() && x <= grid.back(), Errc::table_range,
            "point " + shortest(x) + " outside tabulated range [" + shortest(grid.front()) + ", " +
                shortest(grid.back()) + "]");
    const auto it = std::lower_bound(grid.begin(), grid.end(), x);
    const auto i = static_cast<std::size_t>(it - grid.begin());
    if (grid[i] == x) return values[i];
    const double w = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
    return values[i - 1] + w * (values[i] - values[i - 1]);
  }

  bool nondecreasing() const { return std::is_sorted(values.begin(), values.end()); }
};

inline void require_ascending(std::span<const double> grid, std::string_view what) {
  require(!grid.empty(), Errc::grid_error, std::string(what) + ": empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(std::isfinite(grid[i]), Errc::grid_error, std::string(what) + ": non-finite grid point");
    if (i) require(grid[i] > grid[i - 1], Errc::grid_error, std::string(what) + ": grid must be strictly ascending");
  }
}

/// step, 2*step, ... up to t_max, with t_max appended if it is not hit.
inline std::vector<double> uniform_grid(double step, double t_max) {
  require(step > 0.0 && t_max > 0.0, Errc::grid_error, "uniform grid needs step > 0 and t_max > 0");
  require(t_max / step <= 1e8, Errc::grid_error, "uniform grid too fine");
  std::vector<double> out;
  for (std::size_t i = 1;; ++i) {
    const double t = static_cast<double>(i) * step;
    if (t >= t_max) break;
    out.push_back(t);
  }
  out.push_back(t_max);
  return out;
}

/// t_min * ratio^i up to t_max; t_max closes the grid.
inline std::vector<double> geometric_grid(double ratio, double t_min, double t_max) {
  require(ratio > 1.0 && t_min > 0.0 && t_max >= t_min, Errc::grid_error,
          "geometric grid needs ratio > 1 and 0 < t_min <= t_max");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double t = t_min * std::pow(ratio, i);
    if (t >= t_max) break;
    out.push_back(t);
  }
  out.push_back(t_max);
  return out;
}

/// t_n = exp(n^{3/4}) restricted to [t_min, t_max].
inline std::vector<double> proof_grid(double t_min, double t_max) {
  require(t_min > 0.0 && t_max >= t_min, Errc::grid_error, "proof grid needs 0 < t_min <= t_max");
  std::vector<double> out;
  for (int n = 1;; ++n) {
    const double t = std::exp(std::pow(static_cast<double>(n), 0.75));
    if (t > t_max) break;
    if (t >= t_min) out.push_back(t);
  }
  require(!out.empty(), Errc::grid_error, "proof grid has no point in [t_min, t_max]");
  return out;
}

/// Textual grid preset: `uniform(step)`, `geometric(ratio)`, `proof`,
/// `points(t1,t2,...)`.
struct GridSpec {
  enum class Kind { uniform, geometric, proof, points };
  Kind kind = Kind::geometric;
  double value = 1.2;
  std::vector<double> points;

  static GridSpec parse(std::string_view text) {
    GridSpec g;
    const auto open = text.find('(');
    const std::string_view name = text.substr(0, open);
    std::vector<double> args;
    if (open != std::string_view::npos) {
      require(text.back() == ')', Errc::config_error, "malformed grid spec '" + std::string(text) + "'");
      std::string_view body = text.substr(open + 1, text.size() - open - 2);
      while (!body.empty()) {
        const auto comma = body.find(',');
        double v = 0.0;
        require(parse_double(body.substr(0, comma), v), Errc::config_error,
                "malformed number in grid spec '" + std::string(text) + "'");
        args.push_back(v);
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
      }
    }
    if (name == "uniform" && args.size() == 1) {
      g.kind = Kind::uniform;
      g.value = args[0];
    } else if (name == "geometric" && args.size() == 1) {
      g.kind = Kind::geometric;
      g.value = args[0];
    } else if (name == "proof" && args.empty()) {
      g.kind = Kind::proof;
    } else if (name == "points" && !args.empty()) {
      g.kind = Kind::points;
      g.points = args;
    } else {
      fail(Errc::config_error, "unknown grid spec '" + std::string(text) + "'");
    }
    return g;
  }

  std::string canonical() const {
    switch (kind) {
      case Kind::uniform: return "uniform(" + shortest(value) + ")";
      case Kind::geometric: return "geometric(" + shortest(value) + ")";
      case Kind::proof: return "proof";
      case Kind::points: {
        std::string s = "points(";
        for (std::size_t i = 0; i < points.size(); ++i) s += (i ? "," : "") + shortest(points[i]);
        return s + ")";
      }
    }
    return "";
  }

  std::vector<double> build(double t_min, double t_max) const {
    switch (kind) {
      case Kind::uniform: return uniform_grid(value, t_max);
      case Kind::geometric: return geometric_grid(value, t_min, t_max);
      case Kind::proof: return proof_grid(t_min, t_max);
      case Kind::points: {
        require_ascending(points, "points grid");
        return points;
      }
    }
    return {};
  }
};

}  // namespace iterlil
