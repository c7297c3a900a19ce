#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridsettle/hours.hpp"

namespace gridsettle::grid {

enum class Category { coal, gas_cc, gas_ct, hydro, nuclear, oil_ct, oil_steam, wind };

inline constexpr Category kAllCategories[] = {Category::coal,    Category::hydro,
                                              Category::gas_cc,  Category::gas_ct,
                                              Category::nuclear, Category::oil_ct,
                                              Category::oil_steam, Category::wind};

std::string_view to_string(Category category);
std::optional<Category> parse_category(std::string_view text);

struct Bus {
  std::string id;
  std::string name;
};

struct Branch {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  double reactance_pu = 0.0;
  double capacity_mw = 0.0;
};

struct Generator {
  std::string id;
  std::string bus;
  Category category = Category::coal;
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp = 0.0;             // MW/h
  double cost_quadratic = 0.0;   // $/MW^2h
  double cost_linear = 0.0;      // $/MWh
  double cost_constant = 0.0;    // $/h while committed
  double startup_cost = 0.0;
  double shutdown_cost = 0.0;
  int min_up = 0;
  int min_down = 0;
  bool committable = false;
  bool fast_start = false;
  bool variable = false;
};

struct LoadProfile {
  std::string bus;
  std::vector<double> values;  // MW, one per hour of the system clock
};

struct PowerSystem {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<LoadProfile> loads;
  HourIndex hours;

  std::optional<std::size_t> bus_position(std::string_view id) const;
  std::optional<std::size_t> generator_position(std::string_view id) const;

  /// Load per bus (in bus order) per hour; buses without a profile are zero.
  std::vector<std::vector<double>> load_matrix() const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Reads buses.csv, branches.csv, generators.csv and loads.csv from `root`.
/// Throws ParseError for malformed rows and ValidationError when the
/// assembled system violates an invariant.
PowerSystem load_system(const std::filesystem::path& root);

/// Writes the four CSV files; load_system(save_system(s)) reproduces `s`.
void save_system(const PowerSystem& system, const std::filesystem::path& root);

ValidationReport validate_system(const PowerSystem& system);

}  // namespace gridsettle::grid
