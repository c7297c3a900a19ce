#include "gridsettle/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "gridsettle/error.hpp"
#include "gridsettle/kernels.hpp"

namespace gridsettle::risk {
namespace {

// Joint (price, wind) samples laid out once per cell; only (a, b) vary.
struct Joint {
  std::vector<double> da, rt, wind, probability;
  std::vector<double> dispatched, profit;

  Joint(std::span<const PriceSample> prices, std::span<const double> values,
        std::span<const double> weights) {
    const std::size_t n = prices.size() * values.size();
    da.reserve(n);
    rt.reserve(n);
    wind.reserve(n);
    probability.reserve(n);
    for (const auto& p : prices) {
      for (std::size_t j = 0; j < values.size(); ++j) {
        da.push_back(p.da);
        rt.push_back(p.rt);
        wind.push_back(values[j]);
        probability.push_back(p.probability * weights[j]);
      }
    }
    dispatched.resize(n);
    profit.resize(n);
  }

  TailStats evaluate(double a, double b, double q_max, double beta) {
    kernels::active().offer_profits(da.data(), rt.data(), wind.data(), da.size(), a, b, q_max,
                                    dispatched.data(), profit.data());
    return tail_stats(profit, probability, beta);
  }
};

double dispatch_at(double price, double a, double b, double q_max) {
  if (a > 0.0) return std::clamp((price - b) / (2.0 * a), 0.0, q_max);
  return price >= b ? q_max : 0.0;
}

}  // namespace

void validate(const RiskConfig& c) {
  if (!(c.beta >= 0.0 && c.beta < 1.0)) throw ConfigError(fmt::format("beta {} is outside [0, 1)", c.beta));
  if (c.n_price_samples < 1) throw ConfigError("n_price_samples must be at least 1");
  if (c.a_points < 2 || c.b_points < 2) throw ConfigError("offer grid needs at least two points per axis");
  if (!(c.min_quantity > 0.0) || !(c.a_span > 0.0)) throw ConfigError("offer grid bounds must be positive");
  if (c.refinement_rounds < 0 || c.refinement_points < 2) throw ConfigError("invalid refinement settings");
}

std::vector<ProfitSample> profit_samples(double a, double b, double q_max,
                                         std::span<const PriceSample> prices,
                                         std::span<const double> wind,
                                         std::span<const double> wind_probability) {
  Joint joint(prices, wind, wind_probability);
  kernels::active().offer_profits(joint.da.data(), joint.rt.data(), joint.wind.data(),
                                  joint.da.size(), a, b, q_max, joint.dispatched.data(),
                                  joint.profit.data());
  std::vector<ProfitSample> out(joint.da.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& s = out[i];
    s.probability = joint.probability[i];
    s.da_price = joint.da[i];
    s.rt_price = joint.rt[i];
    s.wind_available = joint.wind[i];
    s.dispatched = joint.dispatched[i];
    s.shortfall = std::max(0.0, s.dispatched - s.wind_available);
    s.profit = joint.profit[i];
  }
  return out;
}

TailStats tail_stats(std::span<const double> profit, std::span<const double> probability, double beta) {
  if (profit.empty()) throw Error("CVaR of an empty sample set");
  if (profit.size() != probability.size()) throw Error("profit and probability lengths differ");
  if (!(beta >= 0.0 && beta < 1.0)) throw Error(fmt::format("beta {} is outside [0, 1)", beta));
  std::vector<std::size_t> order(profit.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return profit[x] < profit[y] || (profit[x] == profit[y] && x < y);
  });
  const double tail = 1.0 - beta;
  double mass = 0.0;
  double sum = 0.0;
  TailStats out;
  for (std::size_t i : order) {
    const double take = std::min(probability[i], tail - mass);
    if (take <= 0.0) break;
    sum += take * profit[i];
    mass += take;
    out.var = profit[i];
  }
  out.cvar = mass > 0.0 ? sum / mass : 0.0;
  return out;
}

double cvar(std::span<const double> profit, std::span<const double> probability, double beta) {
  return tail_stats(profit, probability, beta).cvar;
}

double cvar(std::span<const ProfitSample> samples, double beta) {
  std::vector<double> profit, probability;
  for (const auto& s : samples) {
    profit.push_back(s.profit);
    probability.push_back(s.probability);
  }
  return cvar(profit, probability, beta);
}

OfferChoice optimize_offer(std::span<const PriceSample> prices, std::span<const double> wind,
                           std::span<const double> wind_probability, const RiskConfig& config) {
  validate(config);
  if (prices.empty() || wind.empty()) throw Error("offer optimisation needs price and wind samples");
  if (wind.size() != wind_probability.size()) throw Error("wind values and probabilities differ in length");
  Joint joint(prices, wind, wind_probability);
  const double q_max = *std::max_element(wind.begin(), wind.end());
  double top = 0.0;
  for (const auto& p : prices) top = std::max(top, p.da);
  if (!(top > 0.0)) top = 1.0;

  OfferChoice best;
  best.q_max = q_max;
  bool have = false;
  auto consider = [&](double a, double b) {
    const auto stats = joint.evaluate(a, b, q_max, config.beta);
    if (!have || stats.cvar > best.cvar) {
      have = true;
      best.a = a;
      best.b = b;
      best.cvar = stats.cvar;
      best.var = stats.var;
    }
  };

  std::vector<double> a_grid{0.0};
  if (q_max > 0.0) {
    const double lo = top / (2.0 * config.a_span * q_max);
    const double hi = top / (2.0 * config.min_quantity);
    const std::size_t steps = config.a_points - 1;
    for (std::size_t i = 0; i < steps; ++i) {
      const double f = steps > 1 ? static_cast<double>(i) / static_cast<double>(steps - 1) : 0.0;
      a_grid.push_back(lo * std::pow(hi / lo, f));
    }
  }
  const double b_step = top / static_cast<double>(config.b_points - 1);
  std::size_t best_ia = 0;
  for (std::size_t ia = 0; ia < a_grid.size(); ++ia) {
    for (std::size_t ib = 0; ib < config.b_points; ++ib) {
      const double before = best.cvar;
      const bool first = !have;
      consider(a_grid[ia], b_step * static_cast<double>(ib));
      if (first || best.cvar > before) best_ia = ia;
    }
  }

  double a_lo = best_ia > 0 ? a_grid[best_ia - 1] : 0.0;
  double a_hi = best_ia + 1 < a_grid.size() ? a_grid[best_ia + 1] : a_grid[best_ia];
  double b_lo = std::max(0.0, best.b - b_step);
  double b_hi = std::min(top, best.b + b_step);
  const auto last = static_cast<double>(config.refinement_points - 1);
  for (int round = 0; round < config.refinement_rounds; ++round) {
    for (std::size_t i = 0; i < config.refinement_points; ++i) {
      const double a = a_lo + (a_hi - a_lo) * (static_cast<double>(i) / last);
      for (std::size_t j = 0; j < config.refinement_points; ++j) {
        consider(a, b_lo + (b_hi - b_lo) * (static_cast<double>(j) / last));
      }
    }
    const double a_step = (a_hi - a_lo) / last;
    const double b_width = (b_hi - b_lo) / last;
    a_lo = std::max(0.0, best.a - a_step);
    a_hi = best.a + a_step;
    b_lo = std::max(0.0, best.b - b_width);
    b_hi = std::min(top, best.b + b_width);
  }

  const double price = prices.front().da;
  const bool single_price = std::all_of(prices.begin(), prices.end(),
                                        [&](const PriceSample& p) { return p.da == price; });
  if (single_price && price > 0.0 && q_max > 0.0) {
    const double d = dispatch_at(price, best.a, best.b, q_max);
    if (d <= 0.0) {
      best.a = price / (2.0 * config.min_quantity);
      best.b = price;
    } else if (d >= q_max) {
      best.a = price / (2.0 * q_max);
      best.b = 0.0;
    } else {
      best.a = price / (2.0 * d);
      best.b = 0.0;
    }
    const auto stats = joint.evaluate(best.a, best.b, q_max, config.beta);
    best.cvar = stats.cvar;
    best.var = stats.var;
  }
  return best;
}

std::vector<PriceSample> sample_prices(const PriceHour& hour, std::size_t n, std::uint64_t seed) {
  const double p = hour.var_da;
  const double q = hour.var_rt;
  const double r = hour.cov_da_rt;
  double l1 = p, l2 = q;
  double v1x = 1.0, v1y = 0.0;
  if (r != 0.0) {
    const double mid = 0.5 * (p + q);
    const double disc = std::hypot(0.5 * (p - q), r);
    l1 = mid + disc;
    l2 = mid - disc;
    const double ex = l1 - q;
    const double norm = std::hypot(ex, r);
    v1x = ex / norm;
    v1y = r / norm;
  }
  const double v2x = -v1y;
  const double v2y = v1x;
  const double s1 = std::sqrt(std::max(l1, 0.0));
  const double s2 = std::sqrt(std::max(l2, 0.0));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<PriceSample> out;
  out.reserve(n);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const double x1 = s1 * z1;
    const double x2 = s2 * z2;
    out.push_back({hour.mean_da + (v1x * x1 + v2x * x2), hour.mean_rt + (v1y * x1 + v2y * x2), w});
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t cell_seed(std::uint64_t root, std::string_view generator, std::size_t hour) {
  return root ^ fnv1a64(fmt::format("{}:{}", generator, hour));
}

PriceDistributions estimate_price_distribution(const std::vector<market::SimulationRun>& runs,
                                               const grid::PowerSystem& system) {
  if (runs.empty()) throw Error("price estimation needs at least one run");
  const std::size_t hours = runs.front().day_ahead.hours;
  for (const auto& run : runs) {
    if (run.day_ahead.hours != hours || run.real_time.hours != hours) {
      throw Error("runs used for price estimation cover different hours");
    }
  }
  const std::vector<double> weights(runs.size(), 1.0);
  PriceDistributions out;
  for (const auto& gen : system.generators) {
    if (!gen.variable) continue;
    const auto bus = *system.bus_position(gen.bus);
    PriceDistribution dist{gen.id, {}};
    for (std::size_t h = 0; h < hours; ++h) {
      std::vector<std::vector<double>> samples;
      for (const auto& run : runs) samples.push_back({run.day_ahead.lmps[bus][h], run.real_time.lmps[bus][h]});
      const auto m = scenario::empirical_moments(samples, weights);
      dist.hours.push_back({m.mean[0], m.mean[1], m.cov(0, 0), m.cov(1, 1), m.cov(0, 1)});
    }
    out[gen.id] = std::move(dist);
  }
  return out;
}

RiskOffers build_risk_offers(const grid::PowerSystem& system, const scenario::ScenarioMap& scenarios,
                             const PriceDistributions& prices, const RiskConfig& config) {
  validate(config);
  RiskOffers out;
  out.offers = market::static_offers(system);
  for (const auto& gen : system.generators) {
    auto it = scenarios.find(gen.id);
    if (it == scenarios.end()) continue;
    const auto& set = it->second;
    auto dist = prices.find(gen.id);
    if (dist == prices.end()) throw Error(fmt::format("no price distribution for generator {}", gen.id));
    if (dist->second.hours.size() < set.hours()) {
      throw Error(fmt::format("price distribution of {} covers {} of {} hours", gen.id,
                              dist->second.hours.size(), set.hours()));
    }
    auto& curve = out.offers[gen.id];
    curve.hours.resize(set.hours());
    const auto weights = set.probabilities();
    for (std::size_t h = 0; h < set.hours(); ++h) {
      const auto samples = sample_prices(dist->second.hours[h], config.n_price_samples,
                                         cell_seed(config.rng_seed, gen.id, h));
      const auto values = set.values_at(h);
      const auto choice = optimize_offer(samples, values, weights, config);
      curve.hours[h] = market::OfferHour{choice.a, choice.b, 0.0, choice.q_max, 0.0};
      out.records.push_back({gen.id, h, choice});
    }
  }
  return out;
}

market::OfferCurve percentile_offer(const scenario::ScenarioSet& set, double q) {
  market::OfferCurve curve{set.generator, {}};
  for (double cap : scenario::percentile_trace(set, q)) curve.hours.push_back({0.0, 0.0, 0.0, cap, 0.0});
  return curve;
}

market::OfferMap centralized_offers(const grid::PowerSystem& system,
                                    const scenario::ScenarioMap& scenarios, double q) {
  auto offers = market::static_offers(system);
  for (const auto& [gen, set] : scenarios) offers[gen] = percentile_offer(set, q);
  return offers;
}

}  // namespace gridsettle::risk
