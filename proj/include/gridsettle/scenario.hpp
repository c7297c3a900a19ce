#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridsettle/grid_model.hpp"

namespace gridsettle::scenario {

struct Scenario {
  std::string id;
  double probability = 0.0;
  std::vector<double> trace;  // MW available, one per system hour
};

/// Weighted availability traces for one variable generator.
struct ScenarioSet {
  std::string generator;
  std::vector<Scenario> scenarios;

  std::size_t hours() const { return scenarios.empty() ? 0 : scenarios.front().trace.size(); }
  const Scenario& find(std::string_view scenario_id) const;
  std::vector<std::string> ids() const;

  /// Values and probabilities of every scenario at one hour.
  std::vector<double> values_at(std::size_t hour) const;
  std::vector<double> probabilities() const;
};

using ScenarioMap = std::map<std::string, ScenarioSet>;

struct TruthTrace {
  std::string generator;
  std::vector<double> trace;
};

/// Reads scenarios.csv (gen_id,scenario_id,timestamp,available_mw[,probability]).
/// Every generator must be a variable unit of `system`, every trace must cover
/// the system clock exactly, and all sets must share the same scenario ids.
ScenarioMap load_scenarios(const std::filesystem::path& path, const grid::PowerSystem& system);

/// Throws ValidationError when probabilities do not sum to one or values leave [0, nameplate].
void validate_set(const ScenarioSet& set, double nameplate);

/// Weighted empirical inverse CDF with linear interpolation. Node k of the
/// sorted values sits at cumulative position (C_k - w_k/2 - w_1/2) / (1 - w_1/2 - w_n/2),
/// which reduces to (k-1)/(n-1) for equal weights; q = 0 and q = 100 return
/// the minimum and maximum exactly.
double weighted_percentile(std::span<const double> values, std::span<const double> weights,
                           double q);

std::vector<double> percentile_trace(const ScenarioSet& set, double q);
std::vector<double> max_trace(const ScenarioSet& set);
TruthTrace truth_trace(const ScenarioSet& set, std::string_view scenario_id);

struct Moments {
  std::size_t dim = 0;
  std::vector<double> mean;
  std::vector<double> covariance;  // row-major dim x dim

  double cov(std::size_t i, std::size_t j) const { return covariance[i * dim + j]; }
};

/// Weighted mean and covariance normalised by the total weight.
Moments empirical_moments(const std::vector<std::vector<double>>& samples,
                          std::span<const double> weights);

}  // namespace gridsettle::scenario
