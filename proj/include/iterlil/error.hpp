#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iterlil {

enum class Errc {
  invalid_parameter,
  degenerate_law,
  unsupported_query,
  population_cap,
  out_of_horizon,
  grid_error,
  table_range,
  domain_error,
  config_error,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::degenerate_law: return "degenerate-law";
    case Errc::unsupported_query: return "unsupported-query";
    case Errc::population_cap: return "population-cap";
    case Errc::out_of_horizon: return "out-of-horizon";
    case Errc::grid_error: return "grid";
    case Errc::table_range: return "table-range";
    case Errc::domain_error: return "domain";
    case Errc::config_error: return "config";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// CLI maps all of them to exit status 2.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code), message_(what) {}

  Errc code() const noexcept { return code_; }
  /// The message without the "<code> error: " prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace iterlil
