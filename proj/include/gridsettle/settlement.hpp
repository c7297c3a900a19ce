#pragma once

#include <string>
#include <vector>

#include "gridsettle/grid_model.hpp"
#include "gridsettle/market.hpp"

namespace gridsettle::settlement {

struct SettlementRecord {
  std::string generator;
  std::size_t hour = 0;
  double da_dispatch = 0.0;
  double rt_dispatch = 0.0;
  double da_lmp = 0.0;
  double rt_lmp = 0.0;
  double revenue = 0.0;
};

/// lambda_da * p_da + lambda_rt * (p_rt - p_da), evaluated in that order.
double two_settlement_revenue(double da_lmp, double da_mw, double rt_lmp, double rt_mw);

/// One record per generator-hour, priced at the generator's bus.
std::vector<SettlementRecord> settle(const grid::PowerSystem& system, const market::SimulationRun& run);

struct CategorySummary {
  grid::Category category = grid::Category::coal;
  double redispatch_gwh = 0.0;  // mean over runs of sum(rt - da)
  double payment_mean = 0.0;    // $
  double payment_std = 0.0;     // $, population
};

/// Per category, in report order, over every run of one strategy. Categories
/// without generators report zeros.
std::vector<CategorySummary> aggregate(const std::vector<std::vector<SettlementRecord>>& runs,
                                       const grid::PowerSystem& system);

}  // namespace gridsettle::settlement
