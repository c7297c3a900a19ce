#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "gridsettle/csv.hpp"
#include "gridsettle/error.hpp"
#include "gridsettle/grid_model.hpp"
#include "gridsettle/hours.hpp"
#include "gridsettle/scenario.hpp"
#include "support/builders.hpp"

namespace fs = std::filesystem;
using namespace gridsettle;

namespace {

const fs::path kData = GRIDSETTLE_DATA_DIR;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("gridsettle_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  void write(const std::string& file, const std::string& text) const { std::ofstream(path / file) << text; }
};

void copy_system(const fs::path& from, const fs::path& to) {
  for (const char* f : {"buses.csv", "branches.csv", "generators.csv", "loads.csv", "scenarios.csv"}) {
    fs::copy_file(from / f, to / f, fs::copy_options::overwrite_existing);
  }
}

}  // namespace

TEST_CASE("csv rows, header check and error positions") {
  TempDir dir("csv");
  dir.write("a.csv", "\xEF\xBB\xBFx,y,extra\n1,2.5,k\n\n3,-4,z\n");
  const auto t = csv::read(dir.path / "a.csv", {"x", "y"}, {"extra"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1].line == 4);
  CHECK(csv::parse_int(t, t.rows[1], 0) == 3);
  CHECK(csv::parse_double(t, t.rows[0], 1) == 2.5);
  CHECK(t.column("extra") == 2);

  dir.write("b.csv", "x,y\n1,abc\n");
  const auto b = csv::read(dir.path / "b.csv", {"x", "y"});
  try {
    csv::parse_double(b, b.rows[0], 1);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 2);
  }
  dir.write("c.csv", "y,x\n1,2\n");
  CHECK_THROWS_AS(csv::read(dir.path / "c.csv", {"x", "y"}), ParseError);
  CHECK_THROWS_AS(csv::read(dir.path / "missing.csv", {"x"}), Error);
}

TEST_CASE("number formatting") {
  CHECK(csv::fixed6(1.0 / 3.0) == "0.333333");
  CHECK(csv::fixed6(-1e-9) == "0.000000");
  for (double v : {0.1, 1.0 / 3.0, 123456.789, -2.5e-7}) CHECK(std::stod(csv::shortest(v)) == v);
}

TEST_CASE("timestamps match by instant") {
  const auto a = parse_timestamp("2020-07-17T05:00");
  const auto b = parse_timestamp("2020-07-17 05:00:00Z");
  REQUIRE(a);
  REQUIRE(b);
  CHECK(*a == *b);
  CHECK_FALSE(parse_timestamp("2020-13-01T00:00"));
  CHECK_FALSE(parse_timestamp("yesterday"));
  const auto clock = testing::make_clock(30);
  CHECK(clock.hourly());
  CHECK(clock.days() == 1);
  CHECK(clock.find(*a) == std::optional<std::size_t>(5));
}

TEST_CASE("five-bus fixture loads and validates") {
  const auto s = grid::load_system(kData / "five_bus");
  CHECK(s.generators.size() == 4);
  CHECK(s.branches.size() == 6);
  CHECK(s.buses.size() == 5);
  CHECK(s.hours.size() == 48);
  CHECK(grid::validate_system(s).ok());
  std::size_t variable = 0;
  for (const auto& g : s.generators) variable += g.variable;
  CHECK(variable == 1);
}

TEST_CASE("rts-like fixture keeps the retained generation mix") {
  const auto s = grid::load_system(kData / "rts_like");
  CHECK(s.generators.size() == 96);
  std::map<grid::Category, std::pair<double, int>> totals;
  for (const auto& g : s.generators) {
    totals[g.category].first += g.p_max;
    totals[g.category].second += 1;
  }
  const std::map<grid::Category, std::pair<double, int>> expected = {
      {grid::Category::gas_cc, {3550, 10}}, {grid::Category::wind, {2508, 4}},
      {grid::Category::coal, {2317, 16}},   {grid::Category::gas_ct, {1485, 27}},
      {grid::Category::hydro, {950, 19}},   {grid::Category::nuclear, {400, 1}},
      {grid::Category::oil_ct, {240, 12}},  {grid::Category::oil_steam, {84, 7}}};
  for (const auto& [cat, want] : expected) {
    CAPTURE(grid::to_string(cat));
    CHECK(totals[cat].first == doctest::Approx(want.first).epsilon(1e-12));
    CHECK(totals[cat].second == want.second);
  }
}

TEST_CASE("save then load reproduces the system") {
  const auto s = grid::load_system(kData / "five_bus");
  TempDir dir("roundtrip");
  grid::save_system(s, dir.path);
  const auto r = grid::load_system(dir.path);
  REQUIRE(r.generators.size() == s.generators.size());
  for (std::size_t i = 0; i < s.generators.size(); ++i) {
    const auto& a = s.generators[i];
    const auto& b = r.generators[i];
    CHECK(a.id == b.id);
    CHECK(a.bus == b.bus);
    CHECK(a.category == b.category);
    CHECK(a.p_min == b.p_min);
    CHECK(a.p_max == b.p_max);
    CHECK(a.ramp == b.ramp);
    CHECK(a.cost_quadratic == b.cost_quadratic);
    CHECK(a.cost_linear == b.cost_linear);
    CHECK(a.cost_constant == b.cost_constant);
    CHECK(a.startup_cost == b.startup_cost);
    CHECK(a.min_up == b.min_up);
    CHECK(a.min_down == b.min_down);
    CHECK(a.committable == b.committable);
    CHECK(a.fast_start == b.fast_start);
    CHECK(a.variable == b.variable);
  }
  REQUIRE(r.branches.size() == s.branches.size());
  for (std::size_t i = 0; i < s.branches.size(); ++i) {
    CHECK(r.branches[i].id == s.branches[i].id);
    CHECK(r.branches[i].reactance_pu == s.branches[i].reactance_pu);
    CHECK(r.branches[i].capacity_mw == s.branches[i].capacity_mw);
  }
  CHECK(r.hours == s.hours);
  CHECK(r.hours.labels() == s.hours.labels());
  CHECK(r.load_matrix() == s.load_matrix());
}

TEST_CASE("validation reports each broken invariant") {
  auto s = grid::load_system(kData / "five_bus");
  SUBCASE("branch to a missing bus") {
    s.branches[0].to_bus = "99";
    const auto rep = grid::validate_system(s);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].find(s.branches[0].id) != std::string::npos);
  }
  SUBCASE("wind with a minimum output") {
    for (auto& g : s.generators) {
      if (g.variable) g.p_min = 10;
    }
    const auto rep = grid::validate_system(s);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].find("variable unit must have zero p_min") != std::string::npos);
  }
  SUBCASE("concave cost") {
    s.generators[1].cost_quadratic = -0.1;
    CHECK_FALSE(grid::validate_system(s).ok());
  }
  SUBCASE("no generators") {
    s.generators.clear();
    const auto rep = grid::validate_system(s);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0] == "no generators");
  }
}

TEST_CASE("malformed system files name the offending row") {
  TempDir dir("badsys");
  copy_system(kData / "five_bus", dir.path);
  SUBCASE("empty generators") {
    dir.write("generators.csv",
              "gen_id,bus_id,category,pmin_mw,pmax_mw,ramp_mw_per_h,c2,c1,c0,startup_cost,shutdown_cost,"
              "min_up_h,min_down_h,committable,fast_start,variable\n");
    try {
      grid::load_system(dir.path);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("no generators") != std::string::npos);
    }
  }
  SUBCASE("unknown category") {
    dir.write("generators.csv",
              "gen_id,bus_id,category,pmin_mw,pmax_mw,ramp_mw_per_h,c2,c1,c0,startup_cost,shutdown_cost,"
              "min_up_h,min_down_h,committable,fast_start,variable\n"
              "G1,1,solar,0,10,10,0,1,0,0,0,0,0,0,0,0\n");
    try {
      grid::load_system(dir.path);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(e.column() == 3);
    }
  }
}

TEST_CASE("scenario loading and checks") {
  const auto s = grid::load_system(kData / "five_bus");
  const auto sets = scenario::load_scenarios(kData / "five_bus" / "scenarios.csv", s);
  REQUIRE(sets.size() == 1);
  const auto& set = sets.begin()->second;
  CHECK(set.scenarios.size() == 10);
  CHECK(set.hours() == 48);
  for (const auto& sc : set.scenarios) CHECK(sc.probability == doctest::Approx(0.1).epsilon(1e-15));

  TempDir dir("scen");
  SUBCASE("single scenario has probability one") {
    std::string text = "gen_id,scenario_id,timestamp,available_mw\n";
    for (std::size_t h = 0; h < s.hours.size(); ++h) text += "W1,only," + s.hours.label(h) + ",100\n";
    dir.write("s.csv", text);
    const auto one = scenario::load_scenarios(dir.path / "s.csv", s);
    CHECK(one.at("W1").scenarios.at(0).probability == 1.0);
  }
  SUBCASE("value above nameplate names the row") {
    std::string text = "gen_id,scenario_id,timestamp,available_mw\n";
    for (std::size_t h = 0; h < s.hours.size(); ++h) {
      text += "W1,only," + s.hours.label(h) + (h == 3 ? ",450\n" : ",100\n");
    }
    dir.write("s.csv", text);
    try {
      scenario::load_scenarios(dir.path / "s.csv", s);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 5);
    }
  }
  SUBCASE("unknown generator") {
    dir.write("s.csv", "gen_id,scenario_id,timestamp,available_mw\nG9,a,2020-07-17T00:00,1\n");
    CHECK_THROWS_AS(scenario::load_scenarios(dir.path / "s.csv", s), ParseError);
  }
  SUBCASE("missing hour") {
    dir.write("s.csv", "gen_id,scenario_id,timestamp,available_mw\nW1,a,2020-07-17T00:00,1\n");
    CHECK_THROWS_AS(scenario::load_scenarios(dir.path / "s.csv", s), ValidationError);
  }
}

TEST_CASE("weighted percentile conventions") {
  const std::vector<double> v = {30, 10, 40, 20};
  const std::vector<double> w(4, 0.25);
  CHECK(scenario::weighted_percentile(v, w, 0) == 10);
  CHECK(scenario::weighted_percentile(v, w, 100) == 40);
  CHECK(scenario::weighted_percentile(v, w, 50) == doctest::Approx(25));
  // Equal weights reduce to interpolation at (k - 1) / (n - 1).
  CHECK(scenario::weighted_percentile(v, w, 100.0 / 3.0) == doctest::Approx(20));

  scenario::ScenarioSet set{"W", {}};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int k = 0; k < 7; ++k) {
    scenario::Scenario sc{std::to_string(k), 0.05 + 0.1 * k, {}};
    for (int h = 0; h < 12; ++h) sc.trace.push_back(u(rng));
    set.scenarios.push_back(sc);
  }
  double total = 0.0;
  for (const auto& sc : set.scenarios) total += sc.probability;
  for (auto& sc : set.scenarios) sc.probability /= total;

  const auto lo = scenario::percentile_trace(set, 0);
  const auto hi = scenario::percentile_trace(set, 100);
  CHECK(hi == scenario::max_trace(set));
  for (std::size_t h = 0; h < 12; ++h) {
    double prev = -1.0;
    for (int q = 0; q <= 100; q += 5) {
      const double p = scenario::percentile_trace(set, q)[h];
      CHECK(p >= prev);
      prev = p;
    }
    for (const auto& sc : set.scenarios) {
      CHECK(lo[h] <= sc.trace[h]);
      CHECK(sc.trace[h] <= hi[h]);
    }
  }
}

TEST_CASE("empirical moments") {
  const auto one = scenario::empirical_moments({{10, 20}}, std::vector<double>{1.0});
  CHECK(one.mean == std::vector<double>{10, 20});
  CHECK(one.covariance == std::vector<double>(4, 0.0));

  const auto two = scenario::empirical_moments({{0, 0}, {2, 2}}, std::vector<double>{0.5, 0.5});
  CHECK(two.mean == std::vector<double>{1, 1});
  for (double c : two.covariance) CHECK(c == doctest::Approx(1.0));

  const auto prices = scenario::empirical_moments({{10, 10}, {30, 50}}, std::vector<double>{1, 1});
  CHECK(prices.mean[0] == doctest::Approx(20));
  CHECK(prices.mean[1] == doctest::Approx(30));
  CHECK(prices.cov(0, 0) == doctest::Approx(100));
  CHECK(prices.cov(0, 1) == doctest::Approx(200));
  CHECK(prices.cov(1, 0) == prices.cov(0, 1));
  CHECK(prices.cov(1, 1) == doctest::Approx(400));

  CHECK_THROWS(scenario::empirical_moments({{1, 2}, {3}}, std::vector<double>{1, 1}));
}
