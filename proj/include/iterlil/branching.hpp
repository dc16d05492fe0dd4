#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "iterlil/error.hpp"
#include "iterlil/format.hpp"
#include "iterlil/grid.hpp"
#include "iterlil/law.hpp"
#include "iterlil/parallel.hpp"
#include "iterlil/path.hpp"
#include "iterlil/rng.hpp"

namespace iterlil {

struct BranchingOptions {
  std::uint64_t max_births = 100'000'000;
  std::size_t max_steps_per_mother = 100'000'000;
  unsigned workers = 1;
  /// When false, a run that hits max_births returns the generations completed
  /// so far with `capped` set instead of throwing.
  bool throw_on_cap = true;
};

/// Generation counts Y_1..Y_{j_max} of the general branching process whose
/// reproduction point process is the perturbed random walk T.
struct GenerationRun {
  int j_max = 1;
  std::vector<double> grid;
  std::vector<GridFunction> counts;       // counts[g - 1] holds Y_g
  std::vector<double> first_generation;   // sorted gen-1 birth times <= horizon
  std::uint64_t births_processed = 0;
  bool capped = false;

  const GridFunction& generation(int g) const { return counts.at(static_cast<std::size_t>(g - 1)); }
};

namespace detail {

/// Frontier entry. `lineage` identifies the individual's own stream; the
/// ancestor tag is the ordinal of its first-generation ancestor.
struct Individual {
  double birth;
  std::uint64_t lineage;
  std::uint64_t ancestor;
};

}  // namespace detail

/// Breadth-first simulation: every individual born at b <= horizon spawns an
/// independent perturbed random walk truncated at horizon - b; its k-th child
/// draws from the substream keyed by (mother's lineage, k). The founder uses
/// `stream` itself, so counts[0] equals count_y(simulate_path(law, horizon,
/// stream), grid).
///
/// Births are binned into the grid as they occur; only the current frontier
/// is kept, and the last generation is never stored.
inline GenerationRun simulate_generations(const JointStepLaw& law, double horizon, int j_max,
                                          std::span<const double> grid, const Stream& stream,
                                          const BranchingOptions& options = {}) {
  require(j_max >= 1, Errc::invalid_parameter, "simulate_generations needs j_max >= 1");
  require(horizon > 0.0 && std::isfinite(horizon), Errc::invalid_parameter, "simulate_generations needs horizon > 0");
  require_ascending(grid, "simulate_generations");
  require(grid.back() <= horizon, Errc::out_of_horizon,
          "grid point " + shortest(grid.back()) + " beyond horizon " + shortest(horizon));

  using detail::Individual;
  GenerationRun run;
  run.j_max = j_max;
  run.grid.assign(grid.begin(), grid.end());

  const std::size_t bins = grid.size() + 1;
  const auto bin_of = [&](double b) {
    return static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), b) - grid.begin());
  };

  std::vector<Individual> frontier{{0.0, stream.id(), 0}};
  for (int g = 1; g <= j_max; ++g) {
    const bool keep_children = g < j_max || g == 1;
    const unsigned workers = resolve_workers(options.workers);
    const std::size_t blocks = std::max<std::size_t>(1, std::min<std::size_t>(workers, frontier.size()));
    std::vector<std::vector<std::uint64_t>> hist(blocks, std::vector<std::uint64_t>(bins, 0));
    std::vector<std::vector<Individual>> next(blocks);
    std::vector<std::uint64_t> births(blocks, 0);
    const std::uint64_t budget = options.max_births - std::min(options.max_births, run.births_processed);

    const auto pass = [&](std::size_t begin, std::size_t end, unsigned b) {
      auto& h = hist[b];
      auto& out = next[b];
      auto& count = births[b];
      for (std::size_t i = begin; i < end; ++i) {
        const Individual mother = frontier[i];
        Stream own(stream.seed(), mother.lineage);
        walk_steps(law, horizon - mother.birth, own, options.max_steps_per_mother,
                   [&](std::size_t k, double s_prev, const StepPair& step) {
                     const double born = mother.birth + (s_prev + step.eta);
                     if (!(born <= horizon)) return;
                     if (++count > budget)
                       fail(Errc::population_cap, "births exceeded " + std::to_string(options.max_births) +
                                                      " in generation " + std::to_string(g));
                     ++h[bin_of(born)];
                     if (keep_children)
                       out.push_back({born, Stream::child_id(mother.lineage, k), g == 1 ? k : mother.ancestor});
                   });
      }
    };
    try {
      parallel_blocks(frontier.size(), static_cast<unsigned>(blocks), pass);
    } catch (const Error& e) {
      if (options.throw_on_cap || e.code() != Errc::population_cap) throw;
      run.capped = true;
      return run;
    }

    std::uint64_t total = 0;
    for (auto c : births) total += c;
    run.births_processed += total;
    if (run.births_processed > options.max_births) {
      if (options.throw_on_cap)
        fail(Errc::population_cap,
             "births exceeded " + std::to_string(options.max_births) + " in generation " + std::to_string(g));
      run.capped = true;
      return run;
    }

    GridFunction counts{run.grid, std::vector<double>(grid.size(), 0.0)};
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (const auto& h : hist) running += h[i];
      counts.values[i] = static_cast<double>(running);
    }
    run.counts.push_back(std::move(counts));

    std::vector<Individual> merged;
    std::size_t n = 0;
    for (const auto& part : next) n += part.size();
    merged.reserve(n);
    for (auto& part : next) merged.insert(merged.end(), part.begin(), part.end());
    if (g == 1) {
      run.first_generation.reserve(merged.size());
      for (const auto& ind : merged) run.first_generation.push_back(ind.birth);
      std::sort(run.first_generation.begin(), run.first_generation.end());
    }
    frontier = std::move(merged);
  }
  return run;
}

/// Z_j(t) = sum over first-generation births T_k <= t of
/// (Y_{j-1}^{(k)}(t - T_k) - V_{j-1}(t - T_k)). The descendants of all
/// ancestors together make up Y_j(t), so this is Y_j(t) minus the
/// interpolated V_{j-1} mass of the first generation.
inline GridFunction zj_from_run(const GenerationRun& run, int j, const GridFunction& vj_minus_1) {
  require(j >= 2 && j <= run.j_max, Errc::invalid_parameter, "zj_from_run needs 2 <= j <= j_max");
  require(static_cast<int>(run.counts.size()) >= j, Errc::population_cap, "run was capped before generation j");
  const auto& yj = run.generation(j);
  GridFunction out{run.grid, std::vector<double>(run.grid.size(), 0.0)};
  for (std::size_t i = 0; i < run.grid.size(); ++i) {
    const double t = run.grid[i];
    double expected = 0.0;
    for (double b : run.first_generation) {
      if (b > t) break;
      expected += vj_minus_1.at(t - b);
    }
    out.values[i] = yj.values[i] - expected;
  }
  return out;
}

inline GridFunction zj_term(const JointStepLaw& law, double horizon, int j, std::span<const double> grid,
                            const Stream& stream, const GridFunction& vj_minus_1,
                            const BranchingOptions& options = {}) {
  require(j >= 2, Errc::invalid_parameter, "zj_term needs j >= 2");
  return zj_from_run(simulate_generations(law, horizon, j, grid, stream, options), j, vj_minus_1);
}

/// Per-replicate generation counts: t, Y_1, ..., Y_{j_max}, prefixed by the
/// replicate index.
inline void write_generation_header(std::ostream& os, int j_max) {
  os << "replicate,t";
  for (int g = 1; g <= j_max; ++g) os << ",Y_" << g;
  os << '\n';
}

inline void write_generation_rows(std::ostream& os, std::size_t replicate, const GenerationRun& run) {
  for (std::size_t i = 0; i < run.grid.size(); ++i) {
    os << replicate << ',' << sig17(run.grid[i]);
    for (const auto& c : run.counts) os << ',' << sig17(c.values[i]);
    os << '\n';
  }
}

}  // namespace iterlil
