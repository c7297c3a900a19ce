#include "gridsettle/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "gridsettle/csv.hpp"
#include "gridsettle/error.hpp"

namespace gridsettle::grid {
namespace {

const std::vector<std::string> kBusHeader = {"bus_id", "name"};
const std::vector<std::string> kBranchHeader = {"branch_id", "from_bus", "to_bus", "reactance_pu",
                                                "capacity_mw"};
const std::vector<std::string> kGeneratorHeader = {
    "gen_id", "bus_id",        "category",      "pmin_mw",   "pmax_mw",    "ramp_mw_per_h",
    "c2",     "c1",            "c0",            "startup_cost", "shutdown_cost", "min_up_h",
    "min_down_h", "committable", "fast_start", "variable"};
const std::vector<std::string> kLoadHeader = {"bus_id", "timestamp", "load_mw"};

int parse_hours(const csv::Table& t, const csv::Row& row, std::size_t col) {
  long v = csv::parse_int(t, row, col);
  if (v < 0 || v > 10000) {
    throw ParseError(t.file, row.line, col + 1, fmt::format("{} out of range", t.header[col]));
  }
  return static_cast<int>(v);
}

}  // namespace

std::string_view to_string(Category category) {
  switch (category) {
    case Category::coal: return "coal";
    case Category::gas_cc: return "gas_cc";
    case Category::gas_ct: return "gas_ct";
    case Category::hydro: return "hydro";
    case Category::nuclear: return "nuclear";
    case Category::oil_ct: return "oil_ct";
    case Category::oil_steam: return "oil_steam";
    case Category::wind: return "wind";
  }
  return "unknown";
}

std::optional<Category> parse_category(std::string_view text) {
  for (auto c : kAllCategories) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::optional<std::size_t> PowerSystem::bus_position(std::string_view id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> PowerSystem::generator_position(std::string_view id) const {
  for (std::size_t i = 0; i < generators.size(); ++i) {
    if (generators[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<std::vector<double>> PowerSystem::load_matrix() const {
  std::vector<std::vector<double>> out(buses.size(), std::vector<double>(hours.size(), 0.0));
  for (const auto& profile : loads) {
    if (auto pos = bus_position(profile.bus)) {
      for (std::size_t h = 0; h < std::min(profile.values.size(), hours.size()); ++h) {
        out[*pos][h] += profile.values[h];
      }
    }
  }
  return out;
}

PowerSystem load_system(const std::filesystem::path& root) {
  PowerSystem system;

  auto buses = csv::read(root / "buses.csv", kBusHeader);
  for (const auto& row : buses.rows) {
    system.buses.push_back(Bus{row.fields[0], row.fields[1]});
  }

  auto branches = csv::read(root / "branches.csv", kBranchHeader);
  for (const auto& row : branches.rows) {
    Branch br;
    br.id = row.fields[0];
    br.from_bus = row.fields[1];
    br.to_bus = row.fields[2];
    br.reactance_pu = csv::parse_double(branches, row, 3);
    br.capacity_mw = csv::parse_double(branches, row, 4);
    system.branches.push_back(std::move(br));
  }

  auto gens = csv::read(root / "generators.csv", kGeneratorHeader);
  for (const auto& row : gens.rows) {
    Generator g;
    g.id = row.fields[0];
    g.bus = row.fields[1];
    auto category = parse_category(row.fields[2]);
    if (!category) {
      throw ParseError(gens.file, row.line, 3, fmt::format("unknown category '{}'", row.fields[2]));
    }
    g.category = *category;
    g.p_min = csv::parse_double(gens, row, 3);
    g.p_max = csv::parse_double(gens, row, 4);
    g.ramp = csv::parse_double(gens, row, 5);
    g.cost_quadratic = csv::parse_double(gens, row, 6);
    g.cost_linear = csv::parse_double(gens, row, 7);
    g.cost_constant = csv::parse_double(gens, row, 8);
    g.startup_cost = csv::parse_double(gens, row, 9);
    g.shutdown_cost = csv::parse_double(gens, row, 10);
    g.min_up = parse_hours(gens, row, 11);
    g.min_down = parse_hours(gens, row, 12);
    g.committable = csv::parse_bool(gens, row, 13);
    g.fast_start = csv::parse_bool(gens, row, 14);
    g.variable = csv::parse_bool(gens, row, 15);
    system.generators.push_back(std::move(g));
  }

  auto loads = csv::read(root / "loads.csv", kLoadHeader);
  // Long format: collect the distinct instants first, then place values.
  std::map<TimePoint, std::string> instants;
  std::vector<std::pair<TimePoint, const csv::Row*>> parsed;
  parsed.reserve(loads.rows.size());
  for (const auto& row : loads.rows) {
    auto t = parse_timestamp(row.fields[1]);
    if (!t) {
      throw ParseError(loads.file, row.line, 2,
                       fmt::format("'{}' is not an ISO-8601 timestamp", row.fields[1]));
    }
    instants.emplace(*t, row.fields[1]);
    parsed.emplace_back(*t, &row);
  }
  std::vector<std::string> labels;
  std::vector<TimePoint> times;
  for (const auto& [t, label] : instants) {
    times.push_back(t);
    labels.push_back(label);
  }
  system.hours = HourIndex(std::move(labels), std::move(times));

  std::map<std::string, std::size_t> profile_of;
  std::vector<std::vector<bool>> seen;
  for (const auto& [t, row] : parsed) {
    const auto& bus = row->fields[0];
    auto [it, inserted] = profile_of.emplace(bus, system.loads.size());
    if (inserted) {
      system.loads.push_back(
          LoadProfile{bus, std::vector<double>(system.hours.size(), std::nan(""))});
      seen.emplace_back(system.hours.size(), false);
    }
    std::size_t h = *system.hours.find(t);
    if (seen[it->second][h]) {
      throw ParseError(loads.file, row->line, 2,
                       fmt::format("duplicate load for bus {} at {}", bus, row->fields[1]));
    }
    seen[it->second][h] = true;
    system.loads[it->second].values[h] = csv::parse_double(loads, *row, 2);
  }

  auto report = validate_system(system);
  if (!report.ok()) {
    throw ValidationError(fmt::format("{}: {}", root.string(), fmt::join(report.violations, "; ")));
  }
  return system;
}

void save_system(const PowerSystem& system, const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  auto open = [&](const char* name) {
    std::ofstream out(root / name);
    if (!out) throw Error(fmt::format("cannot write {}", (root / name).string()));
    return out;
  };
  {
    auto out = open("buses.csv");
    csv::write_line(out, kBusHeader);
    for (const auto& b : system.buses) csv::write_line(out, {b.id, b.name});
  }
  {
    auto out = open("branches.csv");
    csv::write_line(out, kBranchHeader);
    for (const auto& b : system.branches) {
      csv::write_line(out, {b.id, b.from_bus, b.to_bus, csv::shortest(b.reactance_pu),
                            csv::shortest(b.capacity_mw)});
    }
  }
  {
    auto out = open("generators.csv");
    csv::write_line(out, kGeneratorHeader);
    for (const auto& g : system.generators) {
      csv::write_line(
          out, {g.id, g.bus, std::string(to_string(g.category)), csv::shortest(g.p_min),
                csv::shortest(g.p_max), csv::shortest(g.ramp), csv::shortest(g.cost_quadratic),
                csv::shortest(g.cost_linear), csv::shortest(g.cost_constant),
                csv::shortest(g.startup_cost), csv::shortest(g.shutdown_cost),
                std::to_string(g.min_up), std::to_string(g.min_down), g.committable ? "1" : "0",
                g.fast_start ? "1" : "0", g.variable ? "1" : "0"});
    }
  }
  {
    auto out = open("loads.csv");
    csv::write_line(out, kLoadHeader);
    for (const auto& p : system.loads) {
      for (std::size_t h = 0; h < system.hours.size(); ++h) {
        csv::write_line(out, {p.bus, system.hours.label(h), csv::shortest(p.values[h])});
      }
    }
  }
}

ValidationReport validate_system(const PowerSystem& system) {
  ValidationReport report;
  auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

  std::set<std::string> bus_ids;
  for (const auto& b : system.buses) {
    if (!bus_ids.insert(b.id).second) fail(fmt::format("duplicate bus id {}", b.id));
  }
  if (system.buses.empty()) fail("no buses");

  std::set<std::string> branch_ids;
  for (const auto& br : system.branches) {
    if (!branch_ids.insert(br.id).second) fail(fmt::format("duplicate branch id {}", br.id));
    if (!bus_ids.count(br.from_bus))
      fail(fmt::format("branch {} references unknown bus {}", br.id, br.from_bus));
    if (!bus_ids.count(br.to_bus))
      fail(fmt::format("branch {} references unknown bus {}", br.id, br.to_bus));
    if (br.from_bus == br.to_bus) fail(fmt::format("branch {} connects bus {} to itself", br.id, br.from_bus));
    if (!(br.reactance_pu > 0.0)) fail(fmt::format("branch {} reactance must be positive", br.id));
    if (!(br.capacity_mw >= 0.0)) fail(fmt::format("branch {} capacity must be non-negative", br.id));
  }

  if (system.generators.empty()) fail("no generators");
  std::set<std::string> gen_ids;
  for (const auto& g : system.generators) {
    auto bad = [&](std::string_view what) { fail(fmt::format("generator {}: {}", g.id, what)); };
    if (!gen_ids.insert(g.id).second) bad("duplicate generator id");
    if (!bus_ids.count(g.bus)) bad(fmt::format("references unknown bus {}", g.bus));
    if (!(g.p_min >= 0.0)) bad("p_min must be non-negative");
    if (!(g.p_max >= g.p_min)) bad("p_max must be at least p_min");
    if (!(g.ramp >= 0.0)) bad("ramp must be non-negative");
    if (!(g.cost_quadratic >= 0.0)) bad("non-convex cost (c2 < 0)");
    if (!std::isfinite(g.cost_linear)) bad("c1 must be finite");
    if (!(g.cost_constant >= 0.0)) bad("c0 must be non-negative");
    if (!(g.startup_cost >= 0.0) || !(g.shutdown_cost >= 0.0))
      bad("startup and shutdown costs must be non-negative");
    if (!g.committable) {
      if (g.startup_cost != 0.0 || g.shutdown_cost != 0.0)
        bad("non-committable unit must have zero startup and shutdown cost");
      if (g.min_up != 0 || g.min_down != 0)
        bad("non-committable unit must have zero minimum up and down time");
      if (g.fast_start) bad("fast-start unit must be committable");
    }
    if (g.variable && g.p_min != 0.0) bad("variable unit must have zero p_min");
  }

  if (system.hours.empty()) fail("no hours in loads.csv");
  if (!system.hours.hourly()) fail("load timestamps are not consecutive hours");
  std::set<std::string> load_buses;
  for (const auto& p : system.loads) {
    if (!bus_ids.count(p.bus)) fail(fmt::format("load references unknown bus {}", p.bus));
    if (!load_buses.insert(p.bus).second) fail(fmt::format("duplicate load profile for bus {}", p.bus));
    if (p.values.size() != system.hours.size()) {
      fail(fmt::format("load profile for bus {} has {} values for {} hours", p.bus,
                       p.values.size(), system.hours.size()));
      continue;
    }
    for (std::size_t h = 0; h < p.values.size(); ++h) {
      if (std::isnan(p.values[h])) {
        fail(fmt::format("load profile for bus {} missing hour {}", p.bus, system.hours.label(h)));
      } else if (!(p.values[h] >= 0.0) || !std::isfinite(p.values[h])) {
        fail(fmt::format("load for bus {} at {} must be non-negative", p.bus, system.hours.label(h)));
      }
    }
  }
  return report;
}

}  // namespace gridsettle::grid
