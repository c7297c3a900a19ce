#include "gridsettle/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "gridsettle/csv.hpp"
#include "gridsettle/error.hpp"

namespace gridsettle::scenario {

const Scenario& ScenarioSet::find(std::string_view scenario_id) const {
  for (const auto& s : scenarios) {
    if (s.id == scenario_id) return s;
  }
  throw Error(fmt::format("generator {} has no scenario '{}'", generator, scenario_id));
}

std::vector<std::string> ScenarioSet::ids() const {
  std::vector<std::string> out;
  for (const auto& s : scenarios) out.push_back(s.id);
  return out;
}

std::vector<double> ScenarioSet::values_at(std::size_t hour) const {
  std::vector<double> out;
  out.reserve(scenarios.size());
  for (const auto& s : scenarios) out.push_back(s.trace.at(hour));
  return out;
}

std::vector<double> ScenarioSet::probabilities() const {
  std::vector<double> out;
  for (const auto& s : scenarios) out.push_back(s.probability);
  return out;
}

void validate_set(const ScenarioSet& set, double nameplate) {
  if (set.scenarios.empty()) throw ValidationError(fmt::format("generator {} has no scenarios", set.generator));
  double total = 0.0;
  for (const auto& s : set.scenarios) {
    if (!(s.probability > 0.0)) {
      throw ValidationError(fmt::format("scenario {} of {} has non-positive probability", s.id,
                                        set.generator));
    }
    total += s.probability;
    if (s.trace.size() != set.hours()) {
      throw ValidationError(fmt::format("scenario {} of {} has a trace of different length", s.id,
                                        set.generator));
    }
    for (double v : s.trace) {
      if (!(v >= 0.0) || v > nameplate) {
        throw ValidationError(fmt::format("scenario {} of {} has value {} outside [0, {}]", s.id,
                                          set.generator, v, nameplate));
      }
    }
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError(
        fmt::format("probabilities of {} sum to {} instead of 1", set.generator, total));
  }
}

ScenarioMap load_scenarios(const std::filesystem::path& path, const grid::PowerSystem& system) {
  auto table = csv::read(path, {"gen_id", "scenario_id", "timestamp", "available_mw"},
                         {"probability"});
  const bool has_probability = table.header.size() == 5;
  const std::size_t hours = system.hours.size();

  ScenarioMap out;
  std::map<std::pair<std::string, std::string>, std::vector<bool>> seen;
  for (const auto& row : table.rows) {
    const auto& gen_id = row.fields[0];
    const auto& scen_id = row.fields[1];
    auto gpos = system.generator_position(gen_id);
    if (!gpos) throw ParseError(table.file, row.line, 1, fmt::format("unknown generator {}", gen_id));
    const auto& gen = system.generators[*gpos];
    if (!gen.variable) {
      throw ParseError(table.file, row.line, 1,
                       fmt::format("generator {} is not a variable unit", gen_id));
    }
    auto t = parse_timestamp(row.fields[2]);
    if (!t) throw ParseError(table.file, row.line, 3, fmt::format("bad timestamp '{}'", row.fields[2]));
    auto h = system.hours.find(*t);
    if (!h) {
      throw ParseError(table.file, row.line, 3,
                       fmt::format("timestamp {} is not on the system clock", row.fields[2]));
    }
    double mw = csv::parse_double(table, row, 3);
    if (!(mw >= 0.0) || mw > gen.p_max) {
      throw ParseError(table.file, row.line, 4,
                       fmt::format("available_mw {} outside [0, {}] for {}", row.fields[3],
                                   gen.p_max, gen_id));
    }

    auto& set = out[gen_id];
    set.generator = gen_id;
    auto it = std::find_if(set.scenarios.begin(), set.scenarios.end(),
                           [&](const Scenario& s) { return s.id == scen_id; });
    if (it == set.scenarios.end()) {
      set.scenarios.push_back(Scenario{scen_id, 0.0, std::vector<double>(hours, 0.0)});
      it = std::prev(set.scenarios.end());
      if (has_probability) it->probability = csv::parse_double(table, row, 4);
    } else if (has_probability && csv::parse_double(table, row, 4) != it->probability) {
      throw ParseError(table.file, row.line, 5,
                       fmt::format("probability of scenario {} changes between rows", scen_id));
    }
    auto& mask = seen[{gen_id, scen_id}];
    if (mask.empty()) mask.assign(hours, false);
    if (mask[*h]) {
      throw ParseError(table.file, row.line, 3,
                       fmt::format("duplicate row for {} scenario {} at {}", gen_id, scen_id,
                                   row.fields[2]));
    }
    mask[*h] = true;
    it->trace[*h] = mw;
  }

  for (const auto& [key, mask] : seen) {
    auto missing = std::find(mask.begin(), mask.end(), false);
    if (missing != mask.end()) {
      throw ValidationError(fmt::format("scenario {} of {} is missing hour {}", key.second,
                                        key.first,
                                        system.hours.label(std::distance(mask.begin(), missing))));
    }
  }

  std::vector<std::string> reference_ids;
  for (auto& [gen_id, set] : out) {
    if (!has_probability) {
      for (auto& s : set.scenarios) s.probability = 1.0 / static_cast<double>(set.scenarios.size());
    }
    validate_set(set, system.generators[*system.generator_position(gen_id)].p_max);
    auto ids = set.ids();
    std::sort(ids.begin(), ids.end());
    if (reference_ids.empty()) {
      reference_ids = ids;
    } else if (ids != reference_ids) {
      throw ValidationError(fmt::format("generator {} does not share the scenario ids of the others",
                                        gen_id));
    }
  }
  return out;
}

double weighted_percentile(std::span<const double> values, std::span<const double> weights,
                           double q) {
  const std::size_t n = values.size();
  if (n == 0) throw Error("percentile of an empty sample");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  if (n == 1 || q <= 0.0) return values[order.front()];
  if (q >= 100.0) return values[order.back()];

  double total = 0.0;
  for (double w : weights) total += w;
  const double first = weights[order.front()] / total;
  const double last = weights[order.back()] / total;
  const double span = 1.0 - 0.5 * first - 0.5 * last;
  const double p = q / 100.0;

  double cumulative = 0.0;
  double prev_pos = 0.0;
  double prev_val = values[order.front()];
  for (std::size_t k = 0; k < n; ++k) {
    const double w = weights[order[k]] / total;
    cumulative += w;
    const double pos = k + 1 == n ? 1.0 : (cumulative - 0.5 * w - 0.5 * first) / span;
    const double val = values[order[k]];
    if (p <= pos) {
      if (k == 0 || pos <= prev_pos) return val;
      return prev_val + (val - prev_val) * (p - prev_pos) / (pos - prev_pos);
    }
    prev_pos = pos;
    prev_val = val;
  }
  return values[order.back()];
}

std::vector<double> percentile_trace(const ScenarioSet& set, double q) {
  auto weights = set.probabilities();
  std::vector<double> out(set.hours());
  for (std::size_t h = 0; h < out.size(); ++h) {
    auto v = set.values_at(h);
    out[h] = weighted_percentile(v, weights, q);
  }
  return out;
}

std::vector<double> max_trace(const ScenarioSet& set) { return percentile_trace(set, 100.0); }

TruthTrace truth_trace(const ScenarioSet& set, std::string_view scenario_id) {
  return TruthTrace{set.generator, set.find(scenario_id).trace};
}

Moments empirical_moments(const std::vector<std::vector<double>>& samples,
                          std::span<const double> weights) {
  if (samples.empty()) throw Error("empirical moments of an empty sample");
  if (weights.size() != samples.size()) throw Error("one weight per sample is required");
  const std::size_t dim = samples.front().size();
  for (const auto& s : samples) {
    if (s.size() != dim) throw Error("samples have different dimensions");
  }
  double total = 0.0;
  for (double w : weights) total += w;

  Moments m;
  m.dim = dim;
  m.mean.assign(dim, 0.0);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    for (std::size_t i = 0; i < dim; ++i) m.mean[i] += weights[k] * samples[k][i];
  }
  for (double& v : m.mean) v /= total;

  m.covariance.assign(dim * dim, 0.0);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double di = samples[k][i] - m.mean[i];
      for (std::size_t j = i; j < dim; ++j) {
        m.covariance[i * dim + j] += weights[k] * di * (samples[k][j] - m.mean[j]);
      }
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j) {
      m.covariance[i * dim + j] /= total;
      m.covariance[j * dim + i] = m.covariance[i * dim + j];
    }
  }
  return m;
}

}  // namespace gridsettle::scenario
