#pragma once

#include <cmath>
#include <limits>

#include "gridsettle/lp.hpp"
#include "gridsettle/market.hpp"

namespace gridsettle::testing {

/// Whether a status sequence honours minimum up and down times, starting from
/// a unit that has been off long enough to start.
inline bool respects_min_times(const std::vector<int>& status, int min_up, int min_down) {
  const int n = static_cast<int>(status.size());
  int prev = 0;
  for (int t = 0; t < n; ++t) {
    if (status[t] != prev) {
      const int hold = status[t] ? min_up : min_down;
      for (int s = t; s < std::min(n, t + hold); ++s) {
        if (status[s] != status[t]) return false;
      }
    }
    prev = status[t];
  }
  return true;
}

/// Cheapest commitment found by solving the dispatch LP for every feasible
/// on/off pattern of the committable units.
inline double brute_force_uc(const grid::PowerSystem& system, const market::OfferMap& offers,
                             const market::UcOptions& options, std::size_t hours) {
  const std::size_t G = system.generators.size();
  const std::size_t bits = G * hours;
  lp::BranchAndBoundSolver solver;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < (std::size_t{1} << bits); ++mask) {
    market::FixedStatus fixed(G, std::vector<std::int8_t>(hours, 0));
    bool ok = true;
    for (std::size_t g = 0; g < G && ok; ++g) {
      std::vector<int> seq(hours);
      for (std::size_t t = 0; t < hours; ++t) {
        seq[t] = static_cast<int>((mask >> (g * hours + t)) & 1);
        fixed[g][t] = static_cast<std::int8_t>(seq[t]);
      }
      const auto& gen = system.generators[g];
      ok = respects_min_times(seq, gen.min_up, gen.min_down);
    }
    if (!ok) continue;
    market::UcInput in;
    in.system = &system;
    in.offers = &offers;
    in.hours = hours;
    in.initial = market::default_initial_state(system);
    in.fixed = fixed;
    in.options = options;
    const auto problem = market::build_uc_problem(in);
    const auto sol = solver.solve_lp(problem.lp);
    if (sol.status == lp::Status::optimal) best = std::min(best, sol.objective);
  }
  return best;
}

}  // namespace gridsettle::testing
