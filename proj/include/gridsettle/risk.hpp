#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridsettle/grid_model.hpp"
#include "gridsettle/market.hpp"
#include "gridsettle/scenario.hpp"

namespace gridsettle::risk {

struct RiskConfig {
  double beta = 0.5;
  std::size_t n_price_samples = 100;
  std::uint64_t rng_seed = 0;
  std::size_t a_points = 40;  // coarse grid, including a = 0
  std::size_t b_points = 40;
  double min_quantity = 1.0;  // MW; steepest grid slope dispatches this much at the top price
  double a_span = 100.0;      // flattest nonzero slope dispatches a_span * q_max at the top price
  int refinement_rounds = 3;
  std::size_t refinement_points = 11;
};

/// Throws ConfigError unless beta is in [0, 1) and the grid is usable.
void validate(const RiskConfig& config);

struct PriceHour {
  double mean_da = 0.0;
  double mean_rt = 0.0;
  double var_da = 0.0;
  double var_rt = 0.0;
  double cov_da_rt = 0.0;
};

/// Hourly joint Gaussian of (day-ahead, real-time) prices at one generator's bus.
struct PriceDistribution {
  std::string generator;
  std::vector<PriceHour> hours;
};

using PriceDistributions = std::map<std::string, PriceDistribution>;

struct PriceSample {
  double da = 0.0;
  double rt = 0.0;
  double probability = 0.0;
};

struct ProfitSample {
  double probability = 0.0;
  double da_price = 0.0;
  double rt_price = 0.0;
  double wind_available = 0.0;
  double dispatched = 0.0;
  double shortfall = 0.0;
  double profit = 0.0;
};

/// Cartesian product of price samples and wind values with product weights.
std::vector<ProfitSample> profit_samples(double a, double b, double q_max,
                                         std::span<const PriceSample> prices,
                                         std::span<const double> wind,
                                         std::span<const double> wind_probability);

struct TailStats {
  double var = 0.0;   // profit at cumulative probability 1 - beta
  double cvar = 0.0;  // mean profit over the lowest 1 - beta of probability mass
};

/// Sorts ascending and averages the lowest (1 - beta) mass, splitting the boundary atom.
TailStats tail_stats(std::span<const double> profit, std::span<const double> probability, double beta);
double cvar(std::span<const double> profit, std::span<const double> probability, double beta);
double cvar(std::span<const ProfitSample> samples, double beta);

struct OfferChoice {
  double a = 0.0;
  double b = 0.0;
  double q_max = 0.0;
  double cvar = 0.0;
  double var = 0.0;
};

/// Grid search with local refinement for the (a, b) maximising CVaR of profit.
/// q_max is the largest wind value. When every day-ahead price sample is the
/// same, only the dispatched quantity matters and the offer is rewritten to a
/// canonical form: b = 0 and a = price / (2 * quantity).
OfferChoice optimize_offer(std::span<const PriceSample> prices, std::span<const double> wind,
                           std::span<const double> wind_probability, const RiskConfig& config);

/// Eigenvalues clipped at zero, then x = mean + V sqrt(L) z with z standard normal.
std::vector<PriceSample> sample_prices(const PriceHour& hour, std::size_t n, std::uint64_t seed);

std::uint64_t fnv1a64(std::string_view text);
/// Per-(generator, hour) stream: root ^ fnv1a64(generator + ":" + hour).
std::uint64_t cell_seed(std::uint64_t root, std::string_view generator, std::size_t hour);

/// One entry per variable generator: moments of its bus prices across runs.
PriceDistributions estimate_price_distribution(const std::vector<market::SimulationRun>& runs,
                                               const grid::PowerSystem& system);

struct OfferRecord {
  std::string generator;
  std::size_t hour = 0;
  OfferChoice choice;
};

struct RiskOffers {
  market::OfferMap offers;
  std::vector<OfferRecord> records;  // generator order, then hour
};

/// Static offers for every unit, with each scenario generator's curve replaced
/// hour by hour with its CVaR-optimal offer.
RiskOffers build_risk_offers(const grid::PowerSystem& system, const scenario::ScenarioMap& scenarios,
                             const PriceDistributions& prices, const RiskConfig& config);

/// Zero-price offer capped at the q-th percentile of the scenarios.
market::OfferCurve percentile_offer(const scenario::ScenarioSet& set, double q);

/// Static offers with every scenario generator replaced by its percentile offer.
market::OfferMap centralized_offers(const grid::PowerSystem& system,
                                    const scenario::ScenarioMap& scenarios, double q);

}  // namespace gridsettle::risk
