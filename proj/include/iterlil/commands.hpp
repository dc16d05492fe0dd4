#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iterlil/branching.hpp"
#include "iterlil/config.hpp"
#include "iterlil/error.hpp"
#include "iterlil/format.hpp"
#include "iterlil/grid.hpp"
#include "iterlil/law.hpp"
#include "iterlil/lil.hpp"
#include "iterlil/path.hpp"
#include "iterlil/renewal.hpp"
#include "iterlil/stats.hpp"

namespace iterlil {

enum class Subcommand { simulate, renewal, lil_scan, var_scan, checks, all };

inline Subcommand parse_subcommand(std::string_view name) {
  if (name == "simulate") return Subcommand::simulate;
  if (name == "renewal") return Subcommand::renewal;
  if (name == "lil-scan") return Subcommand::lil_scan;
  if (name == "var-scan") return Subcommand::var_scan;
  if (name == "checks") return Subcommand::checks;
  if (name == "all") return Subcommand::all;
  fail(Errc::config_error, "unknown subcommand '" + std::string(name) + "'");
}

inline std::string_view to_string(Subcommand s) {
  switch (s) {
    case Subcommand::simulate: return "simulate";
    case Subcommand::renewal: return "renewal";
    case Subcommand::lil_scan: return "lil-scan";
    case Subcommand::var_scan: return "var-scan";
    case Subcommand::checks: return "checks";
    case Subcommand::all: return "all";
  }
  return "";
}

/// Artifacts of one run live in <out>/iterlil-<fingerprint>/.
inline std::filesystem::path artifact_dir(const McConfig& cfg) {
  auto dir = std::filesystem::path(cfg.resolved_output_dir()) / ("iterlil-" + cfg.fingerprint_hex());
  std::filesystem::create_directories(dir);
  return dir;
}

namespace detail {

inline std::ofstream open_artifact(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::config_error, "cannot write " + path.string());
  return out;
}

inline nlohmann::json summary_header(const McConfig& cfg, Subcommand cmd) {
  return {{"subcommand", std::string(to_string(cmd))},
          {"fingerprint", cfg.fingerprint_hex()},
          {"config", cfg.canonical()}};
}

inline void write_summary(const std::filesystem::path& dir, const nlohmann::json& summary) {
  auto out = open_artifact(dir / "summary.json");
  out << summary.dump(2) << '\n';
}

}  // namespace detail

struct CommandOutcome {
  bool passed = true;
  nlohmann::json summary;
};

/// Founding path of replicate 0, per-replicate generation counts and their
/// mean/variance per grid time.
inline CommandOutcome run_simulate(const McConfig& cfg, std::ostream& log) {
  const JointStepLaw law = cfg.law();
  const double horizon = cfg.horizon.value_or(100.0);
  const int j_max = cfg.j.value_or(1);
  const std::size_t n_rep = cfg.n_rep.value_or(1);
  const auto grid = GridSpec::parse(cfg.grid.value_or("uniform(1)")).build(cfg.t_min.value_or(20.0), horizon);
  const auto dir = artifact_dir(cfg);

  {
    Stream stream = Stream::replicate(cfg.master_seed, 0);
    auto out = detail::open_artifact(dir / "path.csv");
    write_path_csv(out, simulate_path(law, horizon, stream));
  }

  BranchingOptions inner;
  inner.workers = n_rep == 1 ? cfg.workers : 1;
  const auto runs = parallel_map<GenerationRun>(n_rep, n_rep == 1 ? 1 : cfg.workers, [&](std::size_t r) {
    return simulate_generations(law, horizon, j_max, grid, Stream::replicate(cfg.master_seed, r), inner);
  });

  bool monotone = true;
  {
    auto out = detail::open_artifact(dir / "generations.csv");
    write_generation_header(out, j_max);
    for (std::size_t r = 0; r < n_rep; ++r) {
      write_generation_rows(out, r, runs[r]);
      for (const auto& c : runs[r].counts) monotone = monotone && c.nondecreasing();
    }
  }
  {
    auto out = detail::open_artifact(dir / "generations_aggregate.csv");
    out << "t";
    for (int g = 1; g <= j_max; ++g) out << ",mean_Y_" << g << ",var_Y_" << g;
    out << '\n';
    std::vector<double> col(n_rep);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out << sig17(grid[i]);
      for (int g = 1; g <= j_max; ++g) {
        for (std::size_t r = 0; r < n_rep; ++r) col[r] = runs[r].generation(g).values[i];
        out << ',' << sig17(stats::mean(col)) << ',' << sig17(stats::variance(col));
      }
      out << '\n';
    }
  }
  CommandOutcome outcome;
  outcome.passed = monotone;
  outcome.summary = detail::summary_header(cfg, Subcommand::simulate);
  outcome.summary["counts_monotone"] = monotone;
  log << "simulate: " << n_rep << " replicate(s), j_max = " << j_max << ", artifacts in " << dir.string() << '\n';
  return outcome;
}

/// U, V_1..V_j tables; checks monotonicity, V <= U and, for exponential xi,
/// the closed form U(t) = 1 + rate * t.
inline CommandOutcome run_renewal(const McConfig& cfg, std::ostream& log) {
  const JointStepLaw law = cfg.law();
  const double h = cfg.h.value_or(0.01);
  const double t_max = cfg.horizon.value_or(500.0);
  const int j_max = cfg.j.value_or(3);
  const RenewalTable table = build_tables(law, h, t_max, j_max);
  const auto dir = artifact_dir(cfg);
  {
    auto out = detail::open_artifact(dir / "renewal.csv");
    write_table_csv(out, table);
  }
  CommandOutcome outcome;
  outcome.summary = detail::summary_header(cfg, Subcommand::renewal);
  bool monotone = std::is_sorted(table.u_vals.begin(), table.u_vals.end());
  for (int j = 1; j <= j_max; ++j) monotone = monotone && std::is_sorted(table.v_of(j).begin(), table.v_of(j).end());
  bool v_below_u = true;
  for (std::size_t i = 0; i < table.nodes(); ++i)
    v_below_u = v_below_u && table.v_of(1)[i] <= table.u_vals[i] * (1.0 + 1e-12);
  outcome.passed = monotone && v_below_u;
  outcome.summary["monotone"] = monotone;
  outcome.summary["v1_below_u"] = v_below_u;
  outcome.summary["u_at_t_max"] = table.u_vals.back();
  if (law.xi.kind() == Marginal::Kind::exponential) {
    const double rate = law.xi.param_a();
    const double error = std::abs(table.u_vals.back() - (1.0 + rate * table.t_max));
    const double tolerance = 5.0 * h * rate;
    outcome.summary["closed_form_error"] = error;
    outcome.summary["closed_form_tolerance"] = tolerance;
    outcome.passed = outcome.passed && error < tolerance;
  }
  log << "renewal: " << table.nodes() << " nodes, U(" << table.t_max << ") = " << table.u_vals.back() << '\n';
  return outcome;
}

inline CommandOutcome run_lil_scan(const McConfig& cfg, std::ostream& log) {
  const JointStepLaw law = cfg.law();
  const int j = cfg.j.value_or(1);
  HarnessOptions options;
  options.workers = cfg.workers;
  options.table_step = cfg.h.value_or(0.0);
  const LilScanResult scan = lil_scan(law, j, GridSpec::parse(cfg.grid.value_or("geometric(1.2)")),
                                      cfg.t_min.value_or(20.0), cfg.horizon.value_or(1e4), cfg.n_rep.value_or(50),
                                      cfg.master_seed, options);
  const auto dir = artifact_dir(cfg);
  {
    auto out = detail::open_artifact(dir / "lil_scan.csv");
    write_scan_csv(out, scan);
  }
  CommandOutcome outcome;
  outcome.summary = detail::summary_header(cfg, Subcommand::lil_scan);
  outcome.summary["scan_fingerprint"] = scan.fingerprint;
  outcome.summary["envelope_max"] = scan.envelope_max;
  outcome.summary["envelope_min"] = scan.envelope_min;
  outcome.summary["extremes_monotone"] = scan.extremes_monotone();
  std::vector<double> finals;
  for (const auto& row : scan.running_max) finals.push_back(row.back());
  outcome.summary["median_running_max"] = stats::median(finals);
  outcome.summary["loglog_tail_diagnostic"] = loglog_tail_diagnostic(law, scan.scan_times.back());
  outcome.passed = scan.extremes_monotone();
  log << "lil-scan: j = " << j << ", envelope [" << scan.envelope_min << ", " << scan.envelope_max << "]\n";
  return outcome;
}

/// Passes iff the log-log variance slope lies within (2k - 1) +- 0.35.
inline CommandOutcome run_var_scan(const McConfig& cfg, std::ostream& log) {
  const JointStepLaw law = cfg.law();
  const int k = cfg.j.value_or(1);
  const auto points = GridSpec::parse(cfg.grid.value_or("points(25,50,100,200,400)"))
                          .build(cfg.t_min.value_or(20.0), cfg.horizon.value_or(400.0));
  HarnessOptions options;
  options.workers = cfg.workers;
  const VarianceScan scan = variance_scan(law, k, points, cfg.n_rep.value_or(10000), cfg.master_seed, options);
  const auto dir = artifact_dir(cfg);
  {
    auto out = detail::open_artifact(dir / "var_scan.csv");
    out << "t,mean,variance\n";
    for (std::size_t i = 0; i < scan.t_points.size(); ++i)
      out << sig17(scan.t_points[i]) << ',' << sig17(scan.mean[i]) << ',' << sig17(scan.variance[i]) << '\n';
  }
  const double target = 2.0 * k - 1.0;
  CommandOutcome outcome;
  outcome.passed = std::abs(scan.slope - target) <= 0.35;
  outcome.summary = detail::summary_header(cfg, Subcommand::var_scan);
  outcome.summary["slope"] = scan.slope;
  outcome.summary["band"] = {target - 0.35, target + 0.35};
  outcome.summary["passed"] = outcome.passed;
  log << "var-scan: k = " << k << ", slope " << scan.slope << " (target " << target << ")\n";
  return outcome;
}

/// Supermartingale bound, tail-sum decay, renewal CLT, subadditivity of the
/// V_k tables, and nu-increment decay.
inline CommandOutcome run_checks(const McConfig& cfg, std::ostream& log) {
  const JointStepLaw law = cfg.law();
  std::vector<double> us = {-0.2, -0.05, 0.05, 0.2};
  if (cfg.u) {
    require(*cfg.u != 0.0, Errc::invalid_parameter, "supermartingale check needs u != 0");
    us = {*cfg.u};
  }
  require_nondegenerate(law, "checks");
  HarnessOptions options;
  options.workers = cfg.workers;
  const double t = cfg.horizon.value_or(100.0);
  const std::size_t n_sm = cfg.n_rep.value_or(100000);
  const std::vector<double> decade_points = {1e3, 1e4, 1e5};

  CommandOutcome outcome;
  outcome.summary = detail::summary_header(cfg, Subcommand::checks);
  const auto dir = artifact_dir(cfg);
  auto csv = detail::open_artifact(dir / "checks.csv");
  csv << "check,parameter,value,reference,passed\n";
  const auto record = [&](const std::string& name, double parameter, double value, double reference, bool ok) {
    csv << name << ',' << sig17(parameter) << ',' << sig17(value) << ',' << sig17(reference) << ',' << (ok ? 1 : 0)
        << '\n';
    outcome.passed = outcome.passed && ok;
    log << "  " << name << " (" << parameter << "): " << value << " vs " << reference << (ok ? "  pass" : "  FAIL")
        << '\n';
  };

  for (double u : us) {
    const auto sm = supermartingale_check(law, t, u, n_sm, cfg.master_seed, options);
    record("supermartingale", u, sm.mean, 1.0 + 3.0 * sm.se, sm.passed());
  }
  const auto tails = tail_sum_check(law, decade_points, 100, cfg.master_seed, options);
  for (std::size_t i = 0; i < tails.t_points.size(); ++i)
    record("tail_sum_median", tails.t_points[i], tails.medians[i], i ? tails.medians[i - 1] : tails.medians[i],
           tails.passed);
  const auto clt = clt_check(law, 1e4, 2000, cfg.master_seed, options);
  record("clt_ks", 1e4, clt.ks, 0.0364, clt.ks < 0.0364);

  {
    const double t_table = 50.0;
    const RenewalTable table = build_tables(law, cfg.h.value_or(0.01), t_table, 2);
    Stream pairs(cfg.master_seed, mix64(0x5355424144ull));
    for (int k = 1; k <= 2; ++k) {
      double worst = std::numeric_limits<double>::infinity();
      bool ok = true;
      for (int n = 0; n < 1000; ++n) {
        const double x = pairs.uniform() * table.t_max;
        const double hh = pairs.uniform() * (table.t_max - x);
        const auto c = check_subadditivity(table, k, x, hh);
        worst = std::min(worst, c.residual + c.tolerance);
        ok = ok && c.holds();
      }
      record("subadditivity_min_slack", k, worst, 0.0, ok);
    }
  }
  const auto nu = nu_increment_check(law, decade_points, 1.0, 0.5, 100, cfg.master_seed, options);
  for (std::size_t i = 0; i < nu.t_points.size(); ++i)
    record("nu_increment_median", nu.t_points[i], nu.medians[i], i ? nu.medians[i - 1] : nu.medians[i], nu.passed);
  outcome.summary["passed"] = outcome.passed;
  return outcome;
}

}  // namespace iterlil
