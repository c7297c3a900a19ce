#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridsettle/grid_model.hpp"
#include "gridsettle/lp.hpp"
#include "gridsettle/scenario.hpp"

namespace gridsettle::market {

/// One hour of a quadratic offer: cost(p) = c + b p + a p^2 on [q_min, q_max].
struct OfferHour {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double q_max = 0.0;
  double q_min = 0.0;
};

struct OfferCurve {
  std::string generator;
  std::vector<OfferHour> hours;  // indexed by system hour

  /// Hours past the end reuse the last entry.
  const OfferHour& at(std::size_t hour) const;
};

using OfferMap = std::map<std::string, OfferCurve>;

/// The generator's own cost curve and limits, repeated for `hours` hours.
OfferCurve static_offer(const grid::Generator& gen, std::size_t hours);
OfferMap static_offers(const grid::PowerSystem& system);

/// Copy of `offers` with each listed generator's q_max replaced by its trace.
OfferMap with_caps(const OfferMap& offers, const std::vector<scenario::TruthTrace>& caps);

struct UnitState {
  bool on = false;
  int hours_in_state = 0;
  std::optional<double> dispatch;  // output in the hour before the horizon, if known
};

/// One entry per generator, in system order.
using InitialState = std::vector<UnitState>;

/// Committable units off with their minimum down time already elapsed and no
/// known prior output; non-committable units on.
InitialState default_initial_state(const grid::PowerSystem& system);

struct CommitmentSchedule {
  std::vector<std::vector<std::uint8_t>> status;  // [generator][hour]
  std::vector<std::vector<std::uint8_t>> startup;
  std::vector<std::vector<std::uint8_t>> shutdown;
};

enum class Stage { day_ahead, real_time };
std::string_view to_string(Stage stage);

/// Result of one clearing. Hour h of every table is system hour first_hour + h.
struct MarketResult {
  Stage stage = Stage::day_ahead;
  std::size_t first_hour = 0;
  std::size_t hours = 0;
  std::vector<std::vector<double>> dispatch;  // [generator][hour] MW
  CommitmentSchedule commitments;
  std::vector<std::vector<double>> flows;   // [branch][hour] MW
  std::vector<std::vector<double>> angles;  // [bus][hour] rad
  std::vector<std::vector<double>> lmps;    // [bus][hour] $/MWh, empty until priced
  std::vector<std::vector<double>> shed;    // [bus][hour] MW of unserved load
  double objective = 0.0;
};

struct UcOptions {
  int pwl_segments = 10;
  double shed_cost = 10000.0;  // $/MWh
  double base_mva = 100.0;
  std::size_t da_horizon = 26;
  std::size_t rt_horizon = 3;
  std::size_t rt_step = 1;
};

/// Commitment decisions imposed on a horizon: -1 free, 0 off, 1 on. Empty means all free.
using FixedStatus = std::vector<std::vector<std::int8_t>>;  // [generator][horizon hour]

struct UcInput {
  const grid::PowerSystem* system = nullptr;
  const OfferMap* offers = nullptr;
  std::size_t first_hour = 0;
  std::size_t hours = 0;  // may run past the system clock; data is clamped to the last hour
  InitialState initial;
  FixedStatus fixed;
  Stage stage = Stage::day_ahead;
  UcOptions options;
};

inline constexpr std::size_t kNone = static_cast<std::size_t>(-1);

/// The MILP plus the column and row positions needed to read a solution back.
struct UcProblem {
  lp::Problem lp;
  Stage stage = Stage::day_ahead;
  std::size_t first_hour = 0;
  std::size_t hours = 0;
  std::size_t generators = 0;
  std::size_t buses = 0;
  std::size_t branches = 0;
  std::vector<std::uint8_t> initial_on;  // per generator

  // [generator][hour]
  std::vector<std::vector<std::size_t>> u, v, w;  // kNone for non-committable units
  std::vector<std::vector<std::size_t>> seg_first;
  std::vector<std::vector<std::size_t>> seg_count;
  std::vector<std::vector<double>> q_min;
  // [bus][hour]
  std::vector<std::vector<std::size_t>> theta, shed, balance_row;
  std::vector<std::vector<double>> load;
  // [branch][hour]
  std::vector<std::vector<std::size_t>> flow_row;
  std::vector<double> flow_factor;  // base_mva / reactance per branch
  std::vector<std::size_t> branch_from, branch_to;  // bus positions
};

/// Secant slopes of a quadratic over K equal-width segments of [q_min, q_max];
/// a single segment at slope b when a == 0.
std::vector<double> segment_slopes(const OfferHour& offer, int segments);

UcProblem build_uc_problem(const UcInput& input);

/// Optimal commitment and dispatch; lmps are left empty.
MarketResult solve_uc(const UcProblem& problem, lp::SolverContract& solver);

/// Re-solves the problem as an LP with the commitments fixed and returns that
/// dispatch with LMPs taken from the nodal balance duals.
MarketResult extract_lmps(const UcProblem& problem, const CommitmentSchedule& commitments,
                          lp::SolverContract& solver);

/// State entering the hour after `hour` of `result`, given the state that
/// entered the result's first hour.
InitialState state_after(const MarketResult& result, std::size_t hour, const InitialState& before);

struct DayAheadRun {
  std::vector<MarketResult> days;  // full horizon per day, lookahead included
  MarketResult binding;            // the first 24 h of each day, concatenated
  InitialState initial;
};

/// Clears one day-ahead market of `options.da_horizon` hours starting at day * 24.
MarketResult run_day_ahead(const grid::PowerSystem& system, const OfferMap& offers, std::size_t day,
                           const InitialState& initial, const UcOptions& options,
                           lp::SolverContract& solver);

/// Clears every day of the system clock in order, chaining the state at hour 24.
DayAheadRun run_day_ahead_all(const grid::PowerSystem& system, const OfferMap& offers,
                              const UcOptions& options, lp::SolverContract& solver);

/// Day-ahead commitment in force at a system hour; past the last day the
/// final lookahead hours apply.
std::uint8_t scheduled_status(const DayAheadRun& da, std::size_t generator, std::size_t hour);

/// Rolling real-time clearing over every hour of the day-ahead run. `offers`
/// carry the realised availability as q_max. Non-fast-start commitments follow
/// the day-ahead schedule; only the first hour of each window is binding.
MarketResult run_real_time(const grid::PowerSystem& system, const OfferMap& offers,
                           const DayAheadRun& da, const UcOptions& options,
                           lp::SolverContract& solver);

struct SimulationRun {
  std::string strategy;
  std::string truth;
  OfferMap offers;
  MarketResult day_ahead;
  MarketResult real_time;
};

/// Real-time stage for one truth scenario on top of an existing day-ahead run.
SimulationRun simulate_real_time(const grid::PowerSystem& system, const OfferMap& offers,
                                 const DayAheadRun& da, const scenario::ScenarioMap& scenarios,
                                 std::string_view truth, const UcOptions& options,
                                 lp::SolverContract& solver);

/// Both stages for one strategy's offers and one truth scenario.
SimulationRun simulate_two_settlement(const grid::PowerSystem& system, const OfferMap& offers,
                                      const scenario::ScenarioMap& scenarios,
                                      std::string_view truth, const UcOptions& options,
                                      lp::SolverContract& solver);

struct InvariantCheck {
  double balance = 0.0;  // worst nodal balance residual, MW
  double flow = 0.0;     // worst |flow - base * angle difference / x|, MW
};

InvariantCheck check_invariants(const grid::PowerSystem& system, const MarketResult& result,
                                const UcOptions& options);

}  // namespace gridsettle::market
