#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iterlil/error.hpp"
#include "iterlil/format.hpp"
#include "iterlil/grid.hpp"
#include "iterlil/law.hpp"

namespace iterlil {

/// Experiment configuration. Unset optionals take per-subcommand defaults.
/// `output_dir` and `workers` do not enter the fingerprint: they must not
/// change any artifact byte.
struct McConfig {
  std::string law_spec = "exp_indep(1,1)";
  std::uint64_t master_seed = 20261018;
  std::optional<std::uint64_t> n_rep;
  std::optional<double> horizon;
  std::optional<std::string> grid;
  std::optional<int> j;
  std::optional<double> h;
  std::optional<double> u;
  std::optional<double> t_min;
  std::string output_dir;
  unsigned workers = 1;

  JointStepLaw law() const { return parse_law(law_spec); }

  /// Canonical `key = value` text; parsing it back yields the same
  /// fingerprint.
  std::string canonical() const {
    std::ostringstream os;
    os << "law = " << law_spec << '\n';
    os << "seed = " << master_seed << '\n';
    if (n_rep) os << "reps = " << *n_rep << '\n';
    if (horizon) os << "horizon = " << shortest(*horizon) << '\n';
    if (grid) os << "grid = " << *grid << '\n';
    if (j) os << "j = " << *j << '\n';
    if (h) os << "step = " << shortest(*h) << '\n';
    if (u) os << "u = " << shortest(*u) << '\n';
    if (t_min) os << "t_min = " << shortest(*t_min) << '\n';
    return os.str();
  }

  std::uint64_t fingerprint() const { return fnv1a64(canonical()); }
  std::string fingerprint_hex() const { return hex64(fingerprint()); }

  /// --out, else $ITERLIL_OUT, else the working directory.
  std::string resolved_output_dir() const {
    if (!output_dir.empty()) return output_dir;
    if (const char* env = std::getenv("ITERLIL_OUT"); env && *env) return env;
    return ".";
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class Int>
Int parse_integer(const std::string& value, const std::string& where) {
  Int out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  require(ec == std::errc() && ptr == value.data() + value.size(), Errc::config_error,
          where + ": expected an integer, got '" + value + "'");
  return out;
}

inline double parse_real(const std::string& value, const std::string& where) {
  double out = 0.0;
  require(parse_double(value, out) && std::isfinite(out), Errc::config_error,
          where + ": expected a real number, got '" + value + "'");
  return out;
}

}  // namespace detail

/// Sets one key. `where` names the origin ("line 3", "--seed") for messages.
inline void apply_config_key(McConfig& cfg, const std::string& key, const std::string& raw, const std::string& where) {
  const std::string value = detail::trim(raw);
  if (key == "law") {
    cfg.law_spec = parse_law(value).spec();
  } else if (key == "seed") {
    cfg.master_seed = detail::parse_integer<std::uint64_t>(value, where);
  } else if (key == "reps") {
    const auto n = detail::parse_integer<std::uint64_t>(value, where);
    require(n >= 1, Errc::config_error, where + ": reps must be >= 1");
    cfg.n_rep = n;
  } else if (key == "horizon" || key == "t_max") {
    const double v = detail::parse_real(value, where);
    require(v > 0.0, Errc::config_error, where + ": horizon must be > 0");
    cfg.horizon = v;
  } else if (key == "grid") {
    cfg.grid = GridSpec::parse(value).canonical();
  } else if (key == "j" || key == "k") {
    const int v = detail::parse_integer<int>(value, where);
    require(v >= 1, Errc::config_error, where + ": j must be >= 1");
    cfg.j = v;
  } else if (key == "step" || key == "h") {
    const double v = detail::parse_real(value, where);
    require(v > 0.0, Errc::config_error, where + ": step must be > 0");
    cfg.h = v;
  } else if (key == "u") {
    cfg.u = detail::parse_real(value, where);
  } else if (key == "t_min") {
    const double v = detail::parse_real(value, where);
    require(v > 0.0, Errc::config_error, where + ": t_min must be > 0");
    cfg.t_min = v;
  } else if (key == "out") {
    cfg.output_dir = value;
  } else if (key == "workers") {
    cfg.workers = detail::parse_integer<unsigned>(value, where);
  } else {
    fail(Errc::config_error, where + ": unknown key '" + key + "'");
  }
}

/// UTF-8 `key = value` lines; `#` starts a comment.
inline void apply_config_text(McConfig& cfg, std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    const std::string where = "line " + std::to_string(number);
    require(eq != std::string::npos, Errc::config_error, where + ": expected 'key = value'");
    try {
      apply_config_key(cfg, detail::trim(stripped.substr(0, eq)), stripped.substr(eq + 1), where);
    } catch (const Error& e) {
      if (e.code() == Errc::config_error) throw;
      throw Error(e.code(), where + ": " + e.message());
    }
  }
}

/// Builds a config from optional file text plus flag overrides (flag name
/// without dashes, value), applied in order after the file.
inline McConfig parse_config(std::string_view file_text,
                             const std::vector<std::pair<std::string, std::string>>& flags = {}) {
  McConfig cfg;
  apply_config_text(cfg, file_text);
  for (const auto& [name, value] : flags) {
    try {
      apply_config_key(cfg, name, value, "--" + name);
    } catch (const Error& e) {
      if (e.code() == Errc::config_error) throw;
      throw Error(e.code(), "--" + name + ": " + e.message());
    }
  }
  return cfg;
}

inline std::string read_config_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::config_error, "cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace iterlil
