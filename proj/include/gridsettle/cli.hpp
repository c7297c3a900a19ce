#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gridsettle/grid_model.hpp"
#include "gridsettle/market.hpp"
#include "gridsettle/risk.hpp"
#include "gridsettle/scenario.hpp"
#include "gridsettle/settlement.hpp"

namespace gridsettle::cli {

enum class Mode { centralized, risk_aware };

/// Flat key = value file. Relative paths resolve against the file's directory.
///
///   system_path      directory holding buses/branches/generators/loads csv
///   scenarios_path   default <system_path>/scenarios.csv
///   mode             centralized | risk_aware
///   percentile       comma list of percents (centralized)
///   beta             comma list in [0, 1) (risk_aware)
///   da_horizon_h     26
///   rt_horizon_h     3
///   rt_step_h        1
///   n_price_samples  100
///   pwl_segments     10
///   rng_seed         0
///   output_dir       required
///   truth_scenarios  all | comma list of scenario ids
///   plot_generator   generator for the CVaR profile plot data; default first variable unit
///   plot_hour        system hour for it; default the hour of widest scenario spread
struct ExperimentConfig {
  std::filesystem::path system_path;
  std::filesystem::path scenarios_path;
  Mode mode = Mode::centralized;
  std::vector<double> percentile;
  std::vector<double> beta;
  std::size_t da_horizon_h = 26;
  std::size_t rt_horizon_h = 3;
  std::size_t rt_step_h = 1;
  std::size_t n_price_samples = 100;
  int pwl_segments = 10;
  std::uint64_t rng_seed = 0;
  std::filesystem::path output_dir;
  std::vector<std::string> truth_scenarios;  // empty means all
  std::string plot_generator;
  std::optional<std::size_t> plot_hour;
};

/// Throws ConfigError on unknown keys, bad values or a failed validate().
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& config);

struct Strategy {
  Mode mode = Mode::centralized;
  double value = 0.0;  // percentile or beta

  /// "centralized_p25", "risk_aware_b0.25"
  std::string name() const;
};

/// Parses a name produced by Strategy::name().
std::optional<Strategy> parse_strategy(const std::string& name);

/// Report order: centralized before risk-aware, then by value.
bool strategy_less(const Strategy& lhs, const Strategy& rhs);

std::vector<Strategy> strategies(const ExperimentConfig& config);

struct Inputs {
  grid::PowerSystem system;
  scenario::ScenarioMap scenarios;
  std::vector<std::string> truths;
  market::UcOptions options;
};

Inputs load_inputs(const ExperimentConfig& config);

/// GRIDSETTLE_THREADS when set, else the hardware concurrency.
std::size_t worker_count();

struct StrategyResult {
  Strategy strategy;
  market::OfferMap offers;
  std::vector<risk::OfferRecord> records;  // empty for centralized strategies
  market::DayAheadRun day_ahead;
  std::vector<market::SimulationRun> runs;  // truth order
  std::vector<std::vector<settlement::SettlementRecord>> settlements;
  std::vector<settlement::CategorySummary> summary;
};

/// Median-capped runs across every truth, reduced to per-bus price moments.
risk::PriceDistributions estimate_prices(const Inputs& inputs, std::size_t threads);

risk::RiskConfig risk_config(const ExperimentConfig& config, double beta);

/// Offers of one strategy. Risk-aware strategies need `prices`.
risk::RiskOffers strategy_offers(const Inputs& inputs, const ExperimentConfig& config,
                                 const Strategy& strategy, const risk::PriceDistributions* prices);

/// Day-ahead once, then real time for every truth on the worker pool.
StrategyResult run_strategy(const Inputs& inputs, const Strategy& strategy, risk::RiskOffers offers,
                            std::size_t threads);

void write_price_distribution(const std::filesystem::path& path, const risk::PriceDistributions& prices,
                              const grid::PowerSystem& system);
risk::PriceDistributions read_price_distribution(const std::filesystem::path& path,
                                                 const grid::PowerSystem& system);

int cmd_run(const ExperimentConfig& config);
int cmd_estimate_prices(const ExperimentConfig& config);
int cmd_offers(const ExperimentConfig& config);
int cmd_report(const std::filesystem::path& output_dir, std::ostream& out);

/// Parses arguments and dispatches; returns the process exit code
/// (0 success, 1 runtime error, 2 configuration error).
int main(int argc, char** argv);

}  // namespace gridsettle::cli
