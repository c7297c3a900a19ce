#include "gridsettle/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gridsettle/csv.hpp"
#include "gridsettle/error.hpp"

namespace fs = std::filesystem;

namespace gridsettle::cli {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    auto item = trim(text.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, text));
  }
  return value;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, text));
  }
  return value;
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_double(key, item));
  return out;
}

/// Shortest form: 25, 0.25.
std::string value_text(double v) { return fmt::format("{:g}", v); }

class OutFile {
 public:
  explicit OutFile(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(fmt::format("cannot write {}", path.string()));
  }
  void row(const std::vector<std::string>& fields) { csv::write_line(out_, fields); }
  std::ostream& stream() { return out_; }
  void close() {
    out_.close();
    if (!out_) throw Error(fmt::format("error writing {}", path_.string()));
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

/// Runs fn(0..n-1) on up to `threads` workers; the first failure by index is rethrown.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void check_path_component(const std::string& name) {
  if (name.empty() || name == "." || name == ".." || name.find_first_of("/\\") != std::string::npos) {
    throw ValidationError(fmt::format("'{}' cannot be used as a directory name", name));
  }
}

// ---- per-run files ----------------------------------------------------------

void write_dispatch(const fs::path& path, const grid::PowerSystem& system, const market::MarketResult& r) {
  OutFile f(path);
  f.row({"gen_id", "timestamp", "mw"});
  for (std::size_t g = 0; g < system.generators.size(); ++g) {
    for (std::size_t h = 0; h < r.hours; ++h) {
      f.row({system.generators[g].id, system.hours.label(r.first_hour + h), csv::fixed6(r.dispatch[g][h])});
    }
  }
  f.close();
}

void write_lmps(const fs::path& path, const grid::PowerSystem& system, const market::MarketResult& r) {
  OutFile f(path);
  f.row({"bus_id", "timestamp", "usd_per_mwh"});
  for (std::size_t b = 0; b < system.buses.size(); ++b) {
    for (std::size_t h = 0; h < r.hours; ++h) {
      f.row({system.buses[b].id, system.hours.label(r.first_hour + h), csv::fixed6(r.lmps[b][h])});
    }
  }
  f.close();
}

void write_commitments(const fs::path& path, const grid::PowerSystem& system, const market::MarketResult& r) {
  OutFile f(path);
  f.row({"gen_id", "timestamp", "status", "startup", "shutdown"});
  const auto& c = r.commitments;
  for (std::size_t g = 0; g < system.generators.size(); ++g) {
    for (std::size_t h = 0; h < r.hours; ++h) {
      f.row({system.generators[g].id, system.hours.label(r.first_hour + h), std::to_string(c.status[g][h]),
             std::to_string(c.startup[g][h]), std::to_string(c.shutdown[g][h])});
    }
  }
  f.close();
}

void write_settlement(const fs::path& path, const grid::PowerSystem& system,
                      const std::vector<settlement::SettlementRecord>& records) {
  OutFile f(path);
  f.row({"gen_id", "timestamp", "da_mw", "rt_mw", "da_lmp", "rt_lmp", "revenue_usd"});
  for (const auto& r : records) {
    f.row({r.generator, system.hours.label(r.hour), csv::fixed6(r.da_dispatch), csv::fixed6(r.rt_dispatch),
           csv::fixed6(r.da_lmp), csv::fixed6(r.rt_lmp), csv::fixed6(r.revenue)});
  }
  f.close();
}

void write_offers(const fs::path& path, const Inputs& inputs, const Strategy& strategy,
                  const risk::RiskOffers& offers) {
  OutFile f(path);
  f.row({"gen_id", "timestamp", "a", "b", "q_max_mw", "beta", "cvar_value"});
  const auto& labels = inputs.system.hours;
  if (strategy.mode == Mode::risk_aware) {
    for (const auto& rec : offers.records) {
      f.row({rec.generator, labels.label(rec.hour), csv::fixed6(rec.choice.a), csv::fixed6(rec.choice.b),
             csv::fixed6(rec.choice.q_max), value_text(strategy.value), csv::fixed6(rec.choice.cvar)});
    }
  } else {
    for (const auto& [gen, set] : inputs.scenarios) {
      const auto& curve = offers.offers.at(gen);
      for (std::size_t h = 0; h < set.hours(); ++h) {
        const auto& o = curve.at(h);
        f.row({gen, labels.label(h), csv::fixed6(o.a), csv::fixed6(o.b), csv::fixed6(o.q_max), "", ""});
      }
    }
  }
  f.close();
}

// ---- merged top-level tables -------------------------------------------------

struct MergedRow {
  Strategy strategy;
  std::vector<std::string> fields;
};

/// Rows of `path` whose strategy is not being replaced, followed by `fresh`,
/// stably ordered by strategy.
void merge_by_strategy(const fs::path& path, const std::vector<std::string>& header,
                       std::size_t strategy_column, const std::vector<Strategy>& replaced,
                       std::vector<MergedRow> fresh) {
  std::vector<MergedRow> rows;
  if (fs::exists(path)) {
    const auto table = csv::read(path, header);
    std::set<std::string> drop;
    for (const auto& s : replaced) drop.insert(s.name());
    for (const auto& row : table.rows) {
      const auto& name = csv::field(table, row, strategy_column);
      auto s = parse_strategy(name);
      if (!s) throw Error(fmt::format("{}:{}: unknown strategy '{}'", path.string(), row.line, name));
      if (drop.count(name)) continue;
      std::vector<std::string> fields(row.fields.begin(), row.fields.begin() + header.size());
      rows.push_back({*s, std::move(fields)});
    }
  }
  for (auto& r : fresh) rows.push_back(std::move(r));
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MergedRow& a, const MergedRow& b) { return strategy_less(a.strategy, b.strategy); });
  OutFile f(path);
  f.row(header);
  for (const auto& r : rows) f.row(r.fields);
  f.close();
}

const std::vector<std::string> kSummaryHeader = {"category", "strategy", "redispatch_gwh_mean",
                                                 "payment_mean_kusd", "payment_std_kusd"};
const std::vector<std::string> kManifestHeader = {"strategy", "truth", "directory"};

void write_results(const fs::path& out, const Inputs& inputs, const std::vector<StrategyResult>& results) {
  std::vector<Strategy> replaced;
  std::vector<MergedRow> summary, manifest;
  for (const auto& res : results) {
    const auto name = res.strategy.name();
    replaced.push_back(res.strategy);
    const fs::path dir = out / name;
    fs::create_directories(dir);
    write_offers(dir / "offers.csv", inputs, res.strategy, risk::RiskOffers{res.offers, res.records});
    for (std::size_t i = 0; i < res.runs.size(); ++i) {
      const auto& run = res.runs[i];
      const fs::path run_dir = dir / run.truth;
      fs::create_directories(run_dir);
      write_dispatch(run_dir / "dispatch_da.csv", inputs.system, run.day_ahead);
      write_dispatch(run_dir / "dispatch_rt.csv", inputs.system, run.real_time);
      write_lmps(run_dir / "lmps_da.csv", inputs.system, run.day_ahead);
      write_lmps(run_dir / "lmps_rt.csv", inputs.system, run.real_time);
      write_commitments(run_dir / "commitments.csv", inputs.system, run.real_time);
      write_settlement(run_dir / "settlement.csv", inputs.system, res.settlements[i]);
      manifest.push_back({res.strategy, {name, run.truth, name + "/" + run.truth}});
    }
    for (const auto& c : res.summary) {
      summary.push_back({res.strategy,
                         {std::string(grid::to_string(c.category)), name, csv::fixed6(c.redispatch_gwh),
                          csv::fixed6(c.payment_mean / 1000.0), csv::fixed6(c.payment_std / 1000.0)}});
    }
  }
  merge_by_strategy(out / "manifest.csv", kManifestHeader, 0, replaced, std::move(manifest));
  merge_by_strategy(out / "summary.csv", kSummaryHeader, 1, replaced, std::move(summary));
}

// ---- plot data ----------------------------------------------------------------

std::size_t widest_spread_hour(const scenario::ScenarioSet& set) {
  const auto w = set.probabilities();
  std::size_t best = 0;
  double best_var = -1.0;
  for (std::size_t h = 0; h < set.hours(); ++h) {
    const auto v = set.values_at(h);
    std::vector<std::vector<double>> samples;
    for (double x : v) samples.push_back({x});
    const double var = scenario::empirical_moments(samples, w).cov(0, 0);
    if (var > best_var) {
      best_var = var;
      best = h;
    }
  }
  return best;
}

void write_scenario_fans(const fs::path& path, const Inputs& inputs) {
  static constexpr double kLevels[] = {0, 10, 25, 50, 75, 90, 100};
  OutFile f(path);
  f.row({"gen_id", "timestamp", "min_mw", "p10_mw", "p25_mw", "p50_mw", "p75_mw", "p90_mw", "max_mw"});
  for (const auto& [gen, set] : inputs.scenarios) {
    const auto w = set.probabilities();
    for (std::size_t h = 0; h < set.hours(); ++h) {
      const auto v = set.values_at(h);
      std::vector<std::string> row{gen, inputs.system.hours.label(h)};
      for (double q : kLevels) row.push_back(csv::fixed6(scenario::weighted_percentile(v, w, q)));
      f.row(row);
    }
  }
  f.close();
}

void write_offer_curves(const fs::path& path, const Inputs& inputs, const Strategy& strategy,
                        const market::OfferMap& offers) {
  constexpr int kPoints = 11;
  OutFile f(path);
  f.row({"strategy", "gen_id", "timestamp", "point", "quantity_mw", "marginal_usd_per_mwh"});
  for (const auto& [gen, set] : inputs.scenarios) {
    const auto& curve = offers.at(gen);
    for (std::size_t h = 0; h < set.hours(); ++h) {
      const auto& o = curve.at(h);
      for (int k = 0; k < kPoints; ++k) {
        const double q = o.q_max * k / (kPoints - 1);
        f.row({strategy.name(), gen, inputs.system.hours.label(h), std::to_string(k), csv::fixed6(q),
               csv::fixed6(o.b + 2.0 * o.a * q)});
      }
    }
  }
  f.close();
}

/// Sorted profit distribution of the chosen offer at one generator-hour, with
/// its VaR and CVaR markers.
void write_cvar_profile(const fs::path& path, const Inputs& inputs, const ExperimentConfig& config,
                        const Strategy& strategy, const risk::PriceDistributions& prices,
                        const risk::RiskOffers& offers) {
  std::string gen = config.plot_generator;
  if (gen.empty()) gen = inputs.scenarios.begin()->first;
  const auto set_it = inputs.scenarios.find(gen);
  if (set_it == inputs.scenarios.end()) throw ConfigError(fmt::format("plot_generator {} has no scenarios", gen));
  const auto& set = set_it->second;
  const std::size_t hour = config.plot_hour.value_or(widest_spread_hour(set));
  if (hour >= set.hours()) throw ConfigError(fmt::format("plot_hour {} is past the last hour", hour));

  const auto rc = risk_config(config, strategy.value);
  const auto samples = risk::sample_prices(prices.at(gen).hours[hour], rc.n_price_samples,
                                           risk::cell_seed(rc.rng_seed, gen, hour));
  const auto& o = offers.offers.at(gen).at(hour);
  const auto values = set.values_at(hour);
  const auto weights = set.probabilities();
  const auto profit = risk::profit_samples(o.a, o.b, o.q_max, samples, values, weights);
  std::vector<double> p, w;
  for (const auto& s : profit) {
    p.push_back(s.profit);
    w.push_back(s.probability);
  }
  const auto tail = risk::tail_stats(p, w, strategy.value);
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  double total = 0.0;
  for (double x : w) total += x;
  OutFile f(path);
  f.row({"strategy", "gen_id", "timestamp", "rank", "profit_usd", "cumulative_probability", "var_usd", "cvar_usd"});
  double cumulative = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    cumulative += w[order[k]] / total;
    f.row({strategy.name(), gen, inputs.system.hours.label(hour), std::to_string(k), csv::fixed6(p[order[k]]),
           csv::fixed6(cumulative), csv::fixed6(tail.var), csv::fixed6(tail.cvar)});
  }
  f.close();
}

// ---- report -------------------------------------------------------------------

struct SummaryCell {
  std::string redispatch, mean, std;
};

std::string render_table(const std::string& title, const std::vector<std::string>& strategies,
                         const std::map<std::string, std::map<std::string, std::string>>& cells) {
  std::string out = title + "\n";
  out += fmt::format("{:<10}", "category");
  for (const auto& s : strategies) out += fmt::format(" {:>18}", s);
  out += "\n";
  for (auto category : grid::kAllCategories) {
    const std::string name(grid::to_string(category));
    out += fmt::format("{:<10}", name);
    for (const auto& s : strategies) {
      const double v = std::strtod(cells.at(name).at(s).c_str(), nullptr);
      out += fmt::format(" {:>18}", std::llround(v));
    }
    out += "\n";
  }
  return out;
}

ExperimentConfig with_output(ExperimentConfig config, const std::string& override_dir) {
  if (!override_dir.empty()) config.output_dir = fs::absolute(override_dir);
  if (config.output_dir.empty()) throw ConfigError("output_dir is not set");
  return config;
}

}  // namespace

// ---- config -----------------------------------------------------------------

ExperimentConfig parse_config(std::istream& in, const fs::path& base_dir) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::string line;
  std::size_t number = 0;
  auto resolve = [&](const std::string& text) {
    fs::path p(text);
    return p.is_absolute() ? p : (base_dir / p).lexically_normal();
  };
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", number));
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(fmt::format("line {}: {} given twice", number, key));

    if (key == "system_path") {
      c.system_path = resolve(value);
    } else if (key == "scenarios_path") {
      c.scenarios_path = resolve(value);
    } else if (key == "output_dir") {
      c.output_dir = resolve(value);
    } else if (key == "mode") {
      if (value == "centralized") {
        c.mode = Mode::centralized;
      } else if (value == "risk_aware") {
        c.mode = Mode::risk_aware;
      } else {
        throw ConfigError(fmt::format("line {}: mode must be centralized or risk_aware", number));
      }
    } else if (key == "percentile") {
      c.percentile = to_doubles(key, value);
    } else if (key == "beta") {
      c.beta = to_doubles(key, value);
    } else if (key == "da_horizon_h") {
      c.da_horizon_h = to_unsigned(key, value);
    } else if (key == "rt_horizon_h") {
      c.rt_horizon_h = to_unsigned(key, value);
    } else if (key == "rt_step_h") {
      c.rt_step_h = to_unsigned(key, value);
    } else if (key == "n_price_samples") {
      c.n_price_samples = to_unsigned(key, value);
    } else if (key == "pwl_segments") {
      const auto k = to_unsigned(key, value);
      if (k > 1000) throw ConfigError("pwl_segments must be at most 1000");
      c.pwl_segments = static_cast<int>(k);
    } else if (key == "rng_seed") {
      c.rng_seed = to_unsigned(key, value);
    } else if (key == "truth_scenarios") {
      c.truth_scenarios.clear();
      if (value != "all") c.truth_scenarios = split_list(value);
      if (value != "all" && c.truth_scenarios.empty()) {
        throw ConfigError(fmt::format("line {}: truth_scenarios is empty", number));
      }
    } else if (key == "plot_generator") {
      c.plot_generator = value;
    } else if (key == "plot_hour") {
      c.plot_hour = to_unsigned(key, value);
    } else {
      throw ConfigError(fmt::format("line {}: unknown key '{}'", number, key));
    }
  }
  if (c.scenarios_path.empty() && !c.system_path.empty()) c.scenarios_path = c.system_path / "scenarios.csv";
  validate(c);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  return parse_config(in, fs::absolute(path).parent_path());
}

void validate(const ExperimentConfig& c) {
  if (c.system_path.empty()) throw ConfigError("system_path is not set");
  if (c.mode == Mode::centralized && c.percentile.empty()) {
    throw ConfigError("centralized mode needs at least one percentile");
  }
  if (c.mode == Mode::risk_aware && c.beta.empty()) throw ConfigError("risk_aware mode needs at least one beta");
  for (double q : c.percentile) {
    if (q < 0.0 || q > 100.0) throw ConfigError(fmt::format("percentile {} is outside [0, 100]", q));
  }
  for (double b : c.beta) {
    if (b < 0.0 || b >= 1.0) throw ConfigError(fmt::format("beta {} is outside [0, 1)", b));
  }
  if (c.da_horizon_h < 24) throw ConfigError("da_horizon_h must cover at least one day");
  if (c.rt_horizon_h == 0 || c.rt_step_h == 0) throw ConfigError("real-time horizon and step must be positive");
  if (c.rt_step_h > c.rt_horizon_h) throw ConfigError("rt_step_h cannot exceed rt_horizon_h");
  if (c.n_price_samples == 0) throw ConfigError("n_price_samples must be positive");
  if (c.pwl_segments <= 0) throw ConfigError("pwl_segments must be positive");
  std::set<std::string> names;
  for (const auto& s : strategies(c)) {
    if (!names.insert(s.name()).second) throw ConfigError(fmt::format("strategy {} listed twice", s.name()));
  }
}

// ---- strategies -------------------------------------------------------------

std::string Strategy::name() const {
  return mode == Mode::centralized ? "centralized_p" + value_text(value) : "risk_aware_b" + value_text(value);
}

std::optional<Strategy> parse_strategy(const std::string& name) {
  Strategy s;
  std::string number;
  if (name.rfind("centralized_p", 0) == 0) {
    s.mode = Mode::centralized;
    number = name.substr(13);
  } else if (name.rfind("risk_aware_b", 0) == 0) {
    s.mode = Mode::risk_aware;
    number = name.substr(12);
  } else {
    return std::nullopt;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), v);
  if (ec != std::errc() || ptr != number.data() + number.size()) return std::nullopt;
  s.value = v;
  return s;
}

bool strategy_less(const Strategy& lhs, const Strategy& rhs) {
  if (lhs.mode != rhs.mode) return lhs.mode == Mode::centralized;
  return lhs.value < rhs.value;
}

std::vector<Strategy> strategies(const ExperimentConfig& config) {
  std::vector<Strategy> out;
  if (config.mode == Mode::centralized) {
    for (double q : config.percentile) out.push_back({Mode::centralized, q});
  } else {
    for (double b : config.beta) out.push_back({Mode::risk_aware, b});
  }
  return out;
}

// ---- pipeline -----------------------------------------------------------------

Inputs load_inputs(const ExperimentConfig& config) {
  Inputs in;
  in.system = grid::load_system(config.system_path);
  in.scenarios = scenario::load_scenarios(config.scenarios_path, in.system);
  if (in.scenarios.empty()) throw ValidationError("no scenarios for any variable generator");
  const auto available = in.scenarios.begin()->second.ids();
  if (config.truth_scenarios.empty()) {
    in.truths = available;
  } else {
    for (const auto& id : config.truth_scenarios) {
      if (std::find(available.begin(), available.end(), id) == available.end()) {
        throw ConfigError(fmt::format("truth scenario {} is not in {}", id, config.scenarios_path.string()));
      }
      in.truths.push_back(id);
    }
  }
  for (const auto& id : in.truths) check_path_component(id);
  in.options.pwl_segments = config.pwl_segments;
  in.options.da_horizon = config.da_horizon_h;
  in.options.rt_horizon = config.rt_horizon_h;
  in.options.rt_step = config.rt_step_h;
  return in;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("GRIDSETTLE_THREADS"); env && *env) {
    const std::string text(env);
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    if (ec != std::errc() || ptr != text.data() + text.size() || n == 0) {
      throw ConfigError(fmt::format("GRIDSETTLE_THREADS='{}' is not a positive integer", text));
    }
    return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

risk::RiskConfig risk_config(const ExperimentConfig& config, double beta) {
  risk::RiskConfig rc;
  rc.beta = beta;
  rc.n_price_samples = config.n_price_samples;
  rc.rng_seed = config.rng_seed;
  return rc;
}

risk::PriceDistributions estimate_prices(const Inputs& inputs, std::size_t threads) {
  const auto result = run_strategy(
      inputs, {Mode::centralized, 50.0},
      risk::RiskOffers{risk::centralized_offers(inputs.system, inputs.scenarios, 50.0), {}}, threads);
  return risk::estimate_price_distribution(result.runs, inputs.system);
}

risk::RiskOffers strategy_offers(const Inputs& inputs, const ExperimentConfig& config,
                                 const Strategy& strategy, const risk::PriceDistributions* prices) {
  if (strategy.mode == Mode::centralized) {
    return {risk::centralized_offers(inputs.system, inputs.scenarios, strategy.value), {}};
  }
  if (!prices) throw Error("risk-aware offers need a price distribution");
  return risk::build_risk_offers(inputs.system, inputs.scenarios, *prices, risk_config(config, strategy.value));
}

StrategyResult run_strategy(const Inputs& inputs, const Strategy& strategy, risk::RiskOffers offers,
                            std::size_t threads) {
  StrategyResult res;
  res.strategy = strategy;
  res.offers = std::move(offers.offers);
  res.records = std::move(offers.records);
  {
    lp::BranchAndBoundSolver solver;
    res.day_ahead = market::run_day_ahead_all(inputs.system, res.offers, inputs.options, solver);
  }
  res.runs.resize(inputs.truths.size());
  res.settlements.resize(inputs.truths.size());
  parallel_for(inputs.truths.size(), threads, [&](std::size_t i) {
    lp::BranchAndBoundSolver solver;
    auto run = market::simulate_real_time(inputs.system, res.offers, res.day_ahead, inputs.scenarios,
                                          inputs.truths[i], inputs.options, solver);
    run.strategy = strategy.name();
    res.settlements[i] = settlement::settle(inputs.system, run);
    res.runs[i] = std::move(run);
  });
  res.summary = settlement::aggregate(res.settlements, inputs.system);
  return res;
}

void write_price_distribution(const fs::path& path, const risk::PriceDistributions& prices,
                              const grid::PowerSystem& system) {
  OutFile f(path);
  f.row({"gen_id", "timestamp", "mean_da", "mean_rt", "var_da", "var_rt", "cov_da_rt"});
  for (const auto& [gen, dist] : prices) {
    for (std::size_t h = 0; h < dist.hours.size(); ++h) {
      const auto& p = dist.hours[h];
      f.row({gen, system.hours.label(h), csv::fixed6(p.mean_da), csv::fixed6(p.mean_rt), csv::fixed6(p.var_da),
             csv::fixed6(p.var_rt), csv::fixed6(p.cov_da_rt)});
    }
  }
  f.close();
}

risk::PriceDistributions read_price_distribution(const fs::path& path, const grid::PowerSystem& system) {
  if (!fs::exists(path)) {
    throw Error(fmt::format("missing price distribution {}; run estimate-prices first", path.string()));
  }
  const auto table = csv::read(path, {"gen_id", "timestamp", "mean_da", "mean_rt", "var_da", "var_rt", "cov_da_rt"});
  risk::PriceDistributions out;
  std::map<std::string, std::vector<std::uint8_t>> filled;
  for (const auto& row : table.rows) {
    const auto& gen = csv::field(table, row, 0);
    const auto pos = system.generator_position(gen);
    if (!pos || !system.generators[*pos].variable) {
      throw ParseError(table.file, row.line, 1, fmt::format("{} is not a variable generator", gen));
    }
    const auto t = parse_timestamp(csv::field(table, row, 1));
    const auto hour = t ? system.hours.find(*t) : std::nullopt;
    if (!hour) throw ParseError(table.file, row.line, 2, "timestamp is not on the system clock");
    auto& dist = out[gen];
    dist.generator = gen;
    dist.hours.resize(system.hours.size());
    auto& mark = filled[gen];
    mark.resize(system.hours.size(), 0);
    if (mark[*hour]) throw ParseError(table.file, row.line, 2, "duplicate hour");
    mark[*hour] = 1;
    dist.hours[*hour] = {csv::parse_double(table, row, 2), csv::parse_double(table, row, 3),
                         csv::parse_double(table, row, 4), csv::parse_double(table, row, 5),
                         csv::parse_double(table, row, 6)};
  }
  for (const auto& [gen, mark] : filled) {
    if (std::find(mark.begin(), mark.end(), 0) != mark.end()) {
      throw ValidationError(fmt::format("{}: price distribution of {} misses hours", path.string(), gen));
    }
  }
  return out;
}

// ---- commands -----------------------------------------------------------------

int cmd_estimate_prices(const ExperimentConfig& config) {
  const auto inputs = load_inputs(config);
  fs::create_directories(config.output_dir);
  write_price_distribution(config.output_dir / "price_dist.csv", estimate_prices(inputs, worker_count()),
                           inputs.system);
  return 0;
}

int cmd_run(const ExperimentConfig& config) {
  const auto inputs = load_inputs(config);
  const auto threads = worker_count();
  fs::create_directories(config.output_dir);

  std::optional<risk::PriceDistributions> prices;
  if (config.mode == Mode::risk_aware) {
    // Round-trip through the file so run and offers see the same numbers.
    const auto path = config.output_dir / "price_dist.csv";
    write_price_distribution(path, estimate_prices(inputs, threads), inputs.system);
    prices = read_price_distribution(path, inputs.system);
  }
  const auto list = strategies(config);
  std::vector<risk::RiskOffers> offers(list.size());
  parallel_for(list.size(), threads, [&](std::size_t i) {
    offers[i] = strategy_offers(inputs, config, list[i], prices ? &*prices : nullptr);
  });
  std::vector<StrategyResult> results;
  for (std::size_t i = 0; i < list.size(); ++i) {
    results.push_back(run_strategy(inputs, list[i], std::move(offers[i]), threads));
  }
  write_results(config.output_dir, inputs, results);
  return 0;
}

int cmd_offers(const ExperimentConfig& config) {
  const auto inputs = load_inputs(config);
  std::optional<risk::PriceDistributions> prices;
  if (config.mode == Mode::risk_aware) prices = read_price_distribution(config.output_dir / "price_dist.csv", inputs.system);
  fs::create_directories(config.output_dir);
  write_scenario_fans(config.output_dir / "scenario_fans_plotdata.csv", inputs);

  const auto list = strategies(config);
  std::vector<risk::RiskOffers> offers(list.size());
  parallel_for(list.size(), worker_count(), [&](std::size_t i) {
    offers[i] = strategy_offers(inputs, config, list[i], prices ? &*prices : nullptr);
  });
  for (std::size_t i = 0; i < list.size(); ++i) {
    const fs::path dir = config.output_dir / list[i].name();
    fs::create_directories(dir);
    write_offers(dir / "offers.csv", inputs, list[i], offers[i]);
    write_offer_curves(dir / "offer_curves_plotdata.csv", inputs, list[i], offers[i].offers);
    if (list[i].mode == Mode::risk_aware) {
      write_cvar_profile(dir / "cvar_profile_plotdata.csv", inputs, config, list[i], *prices, offers[i]);
    }
  }
  return 0;
}

int cmd_report(const fs::path& output_dir, std::ostream& out) {
  const auto summary_path = output_dir / "summary.csv";
  const auto manifest_path = output_dir / "manifest.csv";
  if (!fs::exists(summary_path) || !fs::exists(manifest_path)) {
    throw Error(fmt::format("{} holds no completed runs", output_dir.string()));
  }
  const auto manifest = csv::read(manifest_path, kManifestHeader);
  std::set<std::string> run_strategies;
  for (const auto& row : manifest.rows) {
    const auto dir = output_dir / csv::field(manifest, row, 2);
    if (!fs::exists(dir / "settlement.csv")) {
      throw Error(fmt::format("run {} is incomplete: no settlement.csv", dir.string()));
    }
    run_strategies.insert(csv::field(manifest, row, 0));
  }

  const auto summary = csv::read(summary_path, kSummaryHeader);
  std::vector<Strategy> order;
  std::map<std::string, std::map<std::string, SummaryCell>> cells;  // category -> strategy
  for (const auto& row : summary.rows) {
    const auto& name = csv::field(summary, row, 1);
    const auto s = parse_strategy(name);
    if (!s) throw ParseError(summary.file, row.line, 2, fmt::format("unknown strategy '{}'", name));
    if (!run_strategies.count(name)) throw Error(fmt::format("summary lists {} but no runs exist for it", name));
    if (std::none_of(order.begin(), order.end(), [&](const Strategy& o) { return o.name() == name; })) {
      order.push_back(*s);
    }
    cells[csv::field(summary, row, 0)][name] = {csv::field(summary, row, 2), csv::field(summary, row, 3),
                                                csv::field(summary, row, 4)};
  }
  if (order.empty()) throw Error(fmt::format("{} is empty", summary_path.string()));
  for (const auto& name : run_strategies) {
    if (std::none_of(order.begin(), order.end(), [&](const Strategy& o) { return o.name() == name; })) {
      throw Error(fmt::format("runs of {} have no summary rows", name));
    }
  }
  std::stable_sort(order.begin(), order.end(), strategy_less);
  std::vector<std::string> names;
  for (const auto& s : order) names.push_back(s.name());
  for (auto category : grid::kAllCategories) {
    const std::string c(grid::to_string(category));
    for (const auto& n : names) {
      if (!cells[c].count(n)) throw Error(fmt::format("summary misses {} for {}", c, n));
    }
  }

  struct Metric {
    std::string file, title;
    std::string SummaryCell::*field;
  };
  const Metric metrics[] = {
      {"report_redispatch_gwh.csv", "Mean redispatch, real time minus day ahead (GWh)", &SummaryCell::redispatch},
      {"report_payment_mean_kusd.csv", "Mean total payment (k$)", &SummaryCell::mean},
      {"report_payment_std_kusd.csv", "Standard deviation of total payment (k$)", &SummaryCell::std},
  };
  std::string text;
  for (const auto& m : metrics) {
    std::map<std::string, std::map<std::string, std::string>> values;
    OutFile f(output_dir / m.file);
    std::vector<std::string> header{"category"};
    header.insert(header.end(), names.begin(), names.end());
    f.row(header);
    for (auto category : grid::kAllCategories) {
      const std::string c(grid::to_string(category));
      std::vector<std::string> row{c};
      for (const auto& n : names) {
        row.push_back(cells[c][n].*m.field);
        values[c][n] = cells[c][n].*m.field;
      }
      f.row(row);
    }
    f.close();
    if (!text.empty()) text += "\n";
    text += render_table(m.title, names, values);
  }
  OutFile report(output_dir / "report.txt");
  report.stream() << text;
  report.close();
  out << text;
  return 0;
}

int main(int argc, char** argv) {
  CLI::App app{"Two-settlement electricity market simulator"};
  app.require_subcommand(1);
  std::string config_path, output_override, report_dir;

  auto* run = app.add_subcommand("run", "Simulate every strategy and truth scenario, then settle");
  run->add_option("-c,--config", config_path, "Experiment config file")->required();
  run->add_option("-o,--output", output_override, "Override output_dir");
  auto* est = app.add_subcommand("estimate-prices", "Write price_dist.csv from median-capped runs");
  est->add_option("-c,--config", config_path, "Experiment config file")->required();
  est->add_option("-o,--output", output_override, "Override output_dir");
  auto* off = app.add_subcommand("offers", "Write offers and plot data for each strategy");
  off->add_option("-c,--config", config_path, "Experiment config file")->required();
  off->add_option("-o,--output", output_override, "Override output_dir");
  auto* rep = app.add_subcommand("report", "Render category by strategy tables from a finished output tree");
  rep->add_option("-o,--output", report_dir, "Output directory of earlier runs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (rep->parsed()) return cmd_report(report_dir, std::cout);
    const auto config = with_output(load_config(config_path), output_override);
    if (run->parsed()) return cmd_run(config);
    if (est->parsed()) return cmd_estimate_prices(config);
    return cmd_offers(config);
  } catch (const ConfigError& e) {
    std::cerr << "gridsettle: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gridsettle: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gridsettle::cli
