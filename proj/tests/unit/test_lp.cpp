#include <cmath>
#include <random>

#include "doctest.h"
#include "gridsettle/lp.hpp"

using namespace gridsettle::lp;

namespace {

// Brute-force optimum of a two-variable LP by enumerating every pairwise
// intersection of constraint lines (rows and column bounds).
double vertex_optimum(const Problem& p, bool& feasible) {
  struct Line {
    double a, b, c;  // a x + b y = c
  };
  std::vector<Line> lines;
  for (std::size_t j = 0; j < 2; ++j) {
    double a = j == 0 ? 1 : 0, b = j == 0 ? 0 : 1;
    lines.push_back({a, b, p.column_lower(j)});
    lines.push_back({a, b, p.column_upper(j)});
  }
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    double a = 0, b = 0;
    for (std::size_t j = 0; j < 2; ++j)
      for (auto e : p.column(j))
        if (e.index == i) (j == 0 ? a : b) = e.value;
    if (std::isfinite(p.row_lower(i))) lines.push_back({a, b, p.row_lower(i)});
    if (std::isfinite(p.row_upper(i))) lines.push_back({a, b, p.row_upper(i)});
  }
  feasible = false;
  double best = INFINITY;
  for (std::size_t u = 0; u < lines.size(); ++u) {
    for (std::size_t v = u + 1; v < lines.size(); ++v) {
      const auto& l1 = lines[u];
      const auto& l2 = lines[v];
      double det = l1.a * l2.b - l1.b * l2.a;
      if (std::abs(det) < 1e-12) continue;
      double x = (l1.c * l2.b - l1.b * l2.c) / det;
      double y = (l1.a * l2.c - l1.c * l2.a) / det;
      if (x < p.column_lower(0) - 1e-7 || x > p.column_upper(0) + 1e-7) continue;
      if (y < p.column_lower(1) - 1e-7 || y > p.column_upper(1) + 1e-7) continue;
      bool ok = true;
      for (std::size_t i = 0; i < p.num_rows() && ok; ++i) {
        double act = 0;
        for (std::size_t j = 0; j < 2; ++j)
          for (auto e : p.column(j))
            if (e.index == i) act += e.value * (j == 0 ? x : y);
        ok = act >= p.row_lower(i) - 1e-7 && act <= p.row_upper(i) + 1e-7;
      }
      if (!ok) continue;
      feasible = true;
      best = std::min(best, p.cost(0) * x + p.cost(1) * y);
    }
  }
  return best;
}

struct TwoBus {
  Problem p;
  std::size_t g1, g2, flow, bus1, bus2;
};

TwoBus two_bus(double load, double limit) {
  TwoBus t;
  t.g1 = t.p.add_column(10.0, 0.0, 100.0);
  t.g2 = t.p.add_column(50.0, 0.0, 100.0);
  t.flow = t.p.add_column(0.0, -limit, limit);
  t.bus1 = t.p.add_row(0.0, 0.0, {{t.g1, 1.0}, {t.flow, -1.0}});
  t.bus2 = t.p.add_row(load, load, {{t.g2, 1.0}, {t.flow, 1.0}});
  return t;
}

}  // namespace

TEST_CASE("simple bounded lp") {
  Problem p;
  auto x = p.add_column(-1.0, 0.0, 3.0);
  auto y = p.add_column(-2.0, 0.0, 3.0);
  p.add_row(-kInfinity, 4.0, {{x, 1.0}, {y, 1.0}});
  BranchAndBoundSolver solver;
  auto s = solver.solve_lp(p);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.objective == doctest::Approx(-7.0));
  CHECK(s.x[0] == doctest::Approx(1.0));
  CHECK(s.x[1] == doctest::Approx(3.0));
  CHECK(s.row_duals[0] == doctest::Approx(-1.0));
}

TEST_CASE("congested two-bus prices") {
  auto t = two_bus(80.0, 50.0);
  BranchAndBoundSolver solver;
  auto s = solver.solve_lp(t.p);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.x[t.g1] == doctest::Approx(50.0));
  CHECK(s.x[t.g2] == doctest::Approx(30.0));
  CHECK(s.row_duals[t.bus1] == doctest::Approx(10.0));
  CHECK(s.row_duals[t.bus2] == doctest::Approx(50.0));
  CHECK(s.objective == doctest::Approx(50.0 * 10 + 30.0 * 50));
}

TEST_CASE("uncongested two-bus prices are uniform") {
  auto t = two_bus(40.0, 50.0);
  BranchAndBoundSolver solver;
  auto s = solver.solve_lp(t.p);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.row_duals[t.bus1] == doctest::Approx(10.0));
  CHECK(s.row_duals[t.bus2] == doctest::Approx(10.0));
}

TEST_CASE("zero load reports the marginal cost of the next increment") {
  Problem p;
  auto cheap = p.add_column(10.0, 0.0, 100.0);
  auto dear = p.add_column(50.0, 0.0, 100.0);
  p.add_row(0.0, 0.0, {{cheap, 1.0}, {dear, 1.0}});
  BranchAndBoundSolver solver;
  auto s = solver.solve_lp(p);
  REQUIRE(s.status == Status::optimal);
  CHECK(s.objective == doctest::Approx(0.0));
  CHECK(s.row_duals[0] == doctest::Approx(10.0));
}

TEST_CASE("infeasible and unbounded detection") {
  BranchAndBoundSolver solver;
  {
    Problem p;
    auto x = p.add_column(1.0, 0.0, 5.0);
    p.add_row(10.0, kInfinity, {{x, 1.0}});
    CHECK(solver.solve_lp(p).status == Status::infeasible);
  }
  {
    Problem p;
    auto x = p.add_column(-1.0, 0.0, kInfinity);
    auto y = p.add_column(0.0, 0.0, 1.0);
    p.add_row(-kInfinity, 1.0, {{x, -1.0}, {y, 1.0}});
    CHECK(solver.solve_lp(p).status == Status::unbounded);
  }
}

TEST_CASE("random two-variable lps match vertex enumeration") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  std::uniform_real_distribution<double> rhs(1.0, 10.0);
  BranchAndBoundSolver solver;
  int solved = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Problem p;
    p.add_column(coef(rng), -rhs(rng), rhs(rng));
    p.add_column(coef(rng), -rhs(rng), rhs(rng));
    const int rows = 1 + trial % 4;
    for (int i = 0; i < rows; ++i) {
      double lo = trial % 3 == 0 ? -rhs(rng) : -kInfinity;
      p.add_row(lo, rhs(rng), {{0, coef(rng)}, {1, coef(rng)}});
    }
    bool feasible = false;
    double oracle = vertex_optimum(p, feasible);
    auto s = solver.solve_lp(p);
    if (!feasible) {
      CHECK(s.status == Status::infeasible);
      continue;
    }
    REQUIRE(s.status == Status::optimal);
    CHECK(s.objective == doctest::Approx(oracle).epsilon(1e-7));
    ++solved;
  }
  CHECK(solved > 200);
}

TEST_CASE("row duals match finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  BranchAndBoundSolver solver;
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    // Transport-like network: 4 sources, 3 sinks with fixed demand.
    Problem p;
    std::vector<std::size_t> cols;
    for (int s = 0; s < 4; ++s)
      for (int k = 0; k < 3; ++k) cols.push_back(p.add_column(u(rng) * 10, 0.0, u(rng) * 20));
    for (int s = 0; s < 4; ++s) {
      std::vector<Entry> e;
      for (int k = 0; k < 3; ++k) e.push_back({cols[s * 3 + k], 1.0});
      p.add_row(-kInfinity, 25.0, e);
    }
    std::vector<std::size_t> demand_rows;
    for (int k = 0; k < 3; ++k) {
      std::vector<Entry> e;
      for (int s = 0; s < 4; ++s) e.push_back({cols[s * 3 + k], 1.0});
      double d = 10.0 + 5.0 * u(rng);
      demand_rows.push_back(p.add_row(d, d, e));
    }
    auto base = solver.solve_lp(p);
    if (base.status != Status::optimal) continue;
    for (auto r : demand_rows) {
      const double h = 1e-4;
      // Rebuild with the bumped demand.
      Problem bumped;
      for (std::size_t j = 0; j < p.num_columns(); ++j)
        bumped.add_column(p.cost(j), p.column_lower(j), p.column_upper(j));
      for (std::size_t i = 0; i < p.num_rows(); ++i) {
        std::vector<Entry> e;
        for (std::size_t j = 0; j < p.num_columns(); ++j)
          for (auto x : p.column(j))
            if (x.index == i) e.push_back({j, x.value});
        double lo = p.row_lower(i), hi = p.row_upper(i);
        if (i == r) lo += h, hi += h;
        bumped.add_row(lo, hi, e);
      }
      auto s = solver.solve_lp(bumped);
      if (s.status != Status::optimal) continue;
      CHECK((s.objective - base.objective) / h == doctest::Approx(base.row_duals[r]).epsilon(1e-4));
      ++checked;
    }
  }
  CHECK(checked > 60);
}

TEST_CASE("warm re-solve after bound changes matches a cold solve") {
  auto t = two_bus(80.0, 50.0);
  DualSimplex lp(t.p);
  REQUIRE(lp.solve() == Status::optimal);
  lp.set_bounds(t.flow, -20.0, 20.0);
  REQUIRE(lp.solve() == Status::optimal);
  CHECK(lp.objective() == doctest::Approx(20.0 * 10 + 60.0 * 50));
  lp.reset_bounds();
  REQUIRE(lp.solve() == Status::optimal);
  CHECK(lp.objective() == doctest::Approx(50.0 * 10 + 30.0 * 50));
}

TEST_CASE("knapsack milp matches enumeration") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1.0, 10.0);
  BranchAndBoundSolver solver;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 8;
    std::vector<double> value(n), weight(n);
    for (int j = 0; j < n; ++j) value[j] = u(rng), weight[j] = u(rng);
    const double cap = 20.0;
    Problem p;
    std::vector<Entry> row;
    for (int j = 0; j < n; ++j) row.push_back({p.add_column(-value[j], 0.0, 1.0, true), weight[j]});
    p.add_row(-kInfinity, cap, row);
    double best = 0.0;
    for (int mask = 0; mask < (1 << n); ++mask) {
      double w = 0, v = 0;
      for (int j = 0; j < n; ++j)
        if (mask >> j & 1) w += weight[j], v += value[j];
      if (w <= cap) best = std::max(best, v);
    }
    auto s = solver.solve_milp(p);
    REQUIRE(s.status == Status::optimal);
    CHECK(-s.objective == doctest::Approx(best).epsilon(1e-6));
  }
}

TEST_CASE("mixed-integer facility problem matches enumeration") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.0, 10.0);
  BranchAndBoundSolver solver;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5;
    std::vector<double> fixed(n), marginal(n), cap(n);
    for (int j = 0; j < n; ++j) fixed[j] = 20 * u(rng), marginal[j] = u(rng), cap[j] = 5 * u(rng);
    const double demand = 40.0;
    auto build = [&](int mask, bool relax_mask) {
      Problem p;
      std::vector<Entry> bal;
      for (int j = 0; j < n; ++j) {
        double lo = relax_mask ? 0.0 : (mask >> j & 1);
        double hi = relax_mask ? 1.0 : (mask >> j & 1);
        auto on = p.add_column(fixed[j], lo, hi, true, 1);
        auto q = p.add_column(marginal[j], 0.0, kInfinity);
        p.add_row(-kInfinity, 0.0, {{q, 1.0}, {on, -cap[j]}});
        bal.push_back({q, 1.0});
      }
      p.add_row(demand, demand, bal);
      return p;
    };
    double best = INFINITY;
    for (int mask = 0; mask < (1 << n); ++mask) {
      auto s = solver.solve_lp(build(mask, false));
      if (s.status == Status::optimal) best = std::min(best, s.objective);
    }
    auto s = solver.solve_milp(build(0, true));
    if (!std::isfinite(best)) {
      CHECK(s.status == Status::infeasible);
      continue;
    }
    REQUIRE(s.status == Status::optimal);
    CHECK(s.objective == doctest::Approx(best).epsilon(1e-6));
  }
}

TEST_CASE("frequent refactorisation does not change the optimum") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  MilpOptions frequent;
  frequent.simplex.refactor_interval = 2;
  BranchAndBoundSolver a, b(frequent);
  for (int trial = 0; trial < 20; ++trial) {
    Problem p;
    const int n = 12, m = 8;
    for (int j = 0; j < n; ++j) p.add_column(u(rng) - 1.5, -u(rng) * 4, u(rng) * 4);
    for (int i = 0; i < m; ++i) {
      std::vector<Entry> e;
      for (int j = 0; j < n; ++j)
        if ((i + j) % 3 != 0) e.push_back({static_cast<std::size_t>(j), u(rng) - 1.7});
      p.add_row(-5.0 * u(rng), 5.0 * u(rng), e);
    }
    auto s1 = a.solve_lp(p);
    auto s2 = b.solve_lp(p);
    REQUIRE(s1.status == s2.status);
    if (s1.status == Status::optimal) CHECK(s1.objective == doctest::Approx(s2.objective).epsilon(1e-8));
  }
}
