#include "gridsettle/settlement.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "gridsettle/error.hpp"

namespace gridsettle::settlement {

double two_settlement_revenue(double da_lmp, double da_mw, double rt_lmp, double rt_mw) {
  return da_lmp * da_mw + rt_lmp * (rt_mw - da_mw);
}

std::vector<SettlementRecord> settle(const grid::PowerSystem& system, const market::SimulationRun& run) {
  const auto& da = run.day_ahead;
  const auto& rt = run.real_time;
  if (da.first_hour != rt.first_hour || da.hours != rt.hours) {
    throw Error(fmt::format("day-ahead covers {} hours from {} but real time covers {} from {}", da.hours,
                            da.first_hour, rt.hours, rt.first_hour));
  }
  std::vector<SettlementRecord> out;
  out.reserve(system.generators.size() * da.hours);
  for (std::size_t g = 0; g < system.generators.size(); ++g) {
    const auto& gen = system.generators[g];
    const auto bus = *system.bus_position(gen.bus);
    for (std::size_t h = 0; h < da.hours; ++h) {
      SettlementRecord r;
      r.generator = gen.id;
      r.hour = da.first_hour + h;
      r.da_dispatch = da.dispatch[g][h];
      r.rt_dispatch = rt.dispatch[g][h];
      r.da_lmp = da.lmps[bus][h];
      r.rt_lmp = rt.lmps[bus][h];
      r.revenue = two_settlement_revenue(r.da_lmp, r.da_dispatch, r.rt_lmp, r.rt_dispatch);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<CategorySummary> aggregate(const std::vector<std::vector<SettlementRecord>>& runs,
                                       const grid::PowerSystem& system) {
  std::map<std::string, grid::Category, std::less<>> category_of;
  for (const auto& g : system.generators) category_of[g.id] = g.category;

  std::vector<CategorySummary> out;
  for (auto category : grid::kAllCategories) out.push_back({category, 0.0, 0.0, 0.0});
  if (runs.empty()) return out;
  auto slot = [&](grid::Category c) {
    return static_cast<std::size_t>(std::find(std::begin(grid::kAllCategories), std::end(grid::kAllCategories), c) -
                                    std::begin(grid::kAllCategories));
  };

  const double n = static_cast<double>(runs.size());
  std::vector<std::vector<double>> payments(out.size());
  std::vector<std::vector<double>> energy(out.size());
  for (const auto& run : runs) {
    std::vector<double> pay(out.size(), 0.0);
    std::vector<double> mwh(out.size(), 0.0);
    for (const auto& r : run) {
      auto it = category_of.find(r.generator);
      if (it == category_of.end()) throw Error(fmt::format("settlement for unknown generator {}", r.generator));
      const auto k = slot(it->second);
      pay[k] += r.revenue;
      mwh[k] += r.rt_dispatch - r.da_dispatch;
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
      payments[k].push_back(pay[k]);
      energy[k].push_back(mwh[k]);
    }
  }
  // Sorted summation keeps the statistics invariant under run permutation.
  auto sorted_sum = [](std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum;
  };
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double mean = sorted_sum(payments[k]) / n;
    std::vector<double> squares;
    for (double v : payments[k]) squares.push_back((v - mean) * (v - mean));
    out[k].payment_mean = mean;
    out[k].payment_std = std::sqrt(sorted_sum(squares) / n);
    out[k].redispatch_gwh = sorted_sum(energy[k]) / n / 1000.0;
  }
  return out;
}

}  // namespace gridsettle::settlement
