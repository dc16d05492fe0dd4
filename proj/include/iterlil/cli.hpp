#pragma once

#include <exception>
#include <ostream>

#include "iterlil/acceptance.hpp"
#include "iterlil/commands.hpp"
#include "iterlil/config.hpp"
#include "iterlil/error.hpp"

namespace iterlil {

/// Exit status: 0 when every check passes, 1 on a check failure, 2 on any
/// configuration or precondition error.
inline int run_subcommand(Subcommand cmd, const McConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    if (cmd == Subcommand::all) {
      acceptance::AcceptanceOptions options;
      options.workers = cfg.workers;
      options.scratch_dir = std::filesystem::path(cfg.resolved_output_dir()) / "iterlil-acceptance-scratch";
      bool ok = true;
      acceptance::run_all(options, [&](const acceptance::CriterionResult& r) {
        log << acceptance::format_line(r) << '\n' << std::flush;
        ok = ok && r.passed();
      });
      return ok ? 0 : 1;
    }
    CommandOutcome outcome;
    switch (cmd) {
      case Subcommand::simulate: outcome = run_simulate(cfg, log); break;
      case Subcommand::renewal: outcome = run_renewal(cfg, log); break;
      case Subcommand::lil_scan: outcome = run_lil_scan(cfg, log); break;
      case Subcommand::var_scan: outcome = run_var_scan(cfg, log); break;
      case Subcommand::checks: outcome = run_checks(cfg, log); break;
      case Subcommand::all: break;
    }
    outcome.summary["passed"] = outcome.passed;
    detail::write_summary(artifact_dir(cfg), outcome.summary);
    return outcome.passed ? 0 : 1;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace iterlil
