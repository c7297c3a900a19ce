#include <algorithm>
#include <cmath>
#include <queue>

#include <fmt/format.h>

#include "gridsettle/error.hpp"
#include "gridsettle/lp.hpp"

namespace gridsettle::lp {
namespace {

struct BoundChange {
  std::size_t col;
  double lower;
  double upper;
};

struct Node {
  double bound;
  std::size_t id;
  std::vector<BoundChange> changes;
  DualSimplex::Basis basis;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

std::vector<double> activity(const Problem& problem, const std::vector<double>& x) {
  std::vector<double> out(problem.num_rows(), 0.0);
  for (std::size_t j = 0; j < problem.num_columns(); ++j) {
    if (x[j] == 0.0) continue;
    for (const auto& e : problem.column(j)) out[e.index] += e.value * x[j];
  }
  return out;
}

}  // namespace

Solution BranchAndBoundSolver::solve_lp(const Problem& problem) {
  DualSimplex lp(problem, options_.simplex);
  Solution out;
  out.status = lp.solve();
  if (out.status == Status::optimal) {
    lp.price_out_equality_rows();
    out.objective = lp.objective();
    out.x = lp.primal();
    out.row_activity = lp.row_activity();
    out.row_duals = lp.duals();
  }
  out.iterations = lp.iterations();
  return out;
}

Solution BranchAndBoundSolver::solve_milp(const Problem& problem) {
  std::vector<std::size_t> integers;
  for (std::size_t j = 0; j < problem.num_columns(); ++j) {
    if (problem.is_integer(j)) integers.push_back(j);
  }
  if (integers.empty()) return solve_lp(problem);

  const double int_tol = options_.integrality_tolerance;
  DualSimplex lp(problem, options_.simplex);

  bool have_incumbent = false;
  double incumbent = kInfinity;
  std::vector<double> incumbent_x;
  auto cutoff = [&] {
    if (!have_incumbent) return kInfinity;
    return incumbent - std::max(options_.absolute_gap, options_.relative_gap * std::abs(incumbent));
  };
  auto fractional = [&](double v) { return std::abs(v - std::round(v)) > int_tol; };
  auto accept = [&](double obj, std::vector<double> x) {
    if (have_incumbent && obj >= incumbent) return;
    for (std::size_t j : integers) x[j] = std::round(x[j]);
    have_incumbent = true;
    incumbent = obj;
    incumbent_x = std::move(x);
  };
  auto bounds_of = [&](const std::vector<BoundChange>& changes, std::size_t col) {
    double lo = problem.column_lower(col);
    double hi = problem.column_upper(col);
    for (const auto& c : changes) {
      if (c.col == col) {
        lo = c.lower;
        hi = c.upper;
      }
    }
    return std::pair{lo, hi};
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::vector<BoundChange> current;
  bool have_current = true;
  bool at_root = true;
  std::size_t next_id = 0;
  std::size_t nodes = 0;
  Status root_status = Status::optimal;

  while (true) {
    if (!have_current) {
      while (!open.empty() && open.top().bound >= cutoff()) open.pop();
      if (open.empty()) break;
      Node node = open.top();
      open.pop();
      current = std::move(node.changes);
      lp.reset_bounds();
      for (const auto& c : current) lp.set_bounds(c.col, c.lower, c.upper);
      lp.load_basis(node.basis);
      have_current = true;
    }
    if (++nodes > options_.max_nodes) {
      throw SolverError(fmt::format("branch and bound exceeded {} nodes", options_.max_nodes));
    }

    const Status status = lp.solve();
    if (status == Status::iteration_limit) throw SolverError("simplex iteration limit reached");
    if (status != Status::optimal) {
      if (at_root) {
        root_status = status;
        break;
      }
      have_current = false;
      continue;
    }
    const double obj = lp.objective();
    if (obj >= cutoff()) {
      have_current = false;
      continue;
    }
    std::vector<double> x = lp.primal();

    if (at_root) {
      at_root = false;
      // Round priority columns up and everything else to nearest, then re-solve.
      const auto saved = lp.basis();
      bool any = false;
      for (std::size_t j : integers) {
        double v = problem.branch_priority(j) > 0 ? std::ceil(x[j] - int_tol) : std::round(x[j]);
        v = std::clamp(v, problem.column_lower(j), problem.column_upper(j));
        lp.set_bounds(j, v, v);
        any = true;
      }
      if (any && lp.solve() == Status::optimal) {
        auto hx = lp.primal();
        if (std::none_of(integers.begin(), integers.end(), [&](std::size_t j) { return fractional(hx[j]); })) {
          accept(lp.objective(), std::move(hx));
        }
      }
      lp.reset_bounds();
      lp.load_basis(saved);
      if (obj >= cutoff()) break;
    }

    std::size_t branch = problem.num_columns();
    int best_priority = 0;
    double best_frac = 0.0;
    for (std::size_t j : integers) {
      if (!fractional(x[j])) continue;
      const double frac = x[j] - std::floor(x[j]);
      const double dist = std::min(frac, 1.0 - frac);
      const int priority = problem.branch_priority(j);
      if (branch == problem.num_columns() || priority > best_priority ||
          (priority == best_priority && dist > best_frac)) {
        branch = j;
        best_priority = priority;
        best_frac = dist;
      }
    }
    if (branch == problem.num_columns()) {
      accept(obj, std::move(x));
      have_current = false;
      continue;
    }

    const auto [lo, hi] = bounds_of(current, branch);
    const double frac = x[branch] - std::floor(x[branch]);
    const BoundChange down{branch, lo, std::floor(x[branch])};
    const BoundChange up{branch, std::ceil(x[branch]), hi};
    const bool prefer_up = frac >= 0.5;
    auto other = current;
    other.push_back(prefer_up ? down : up);
    open.push(Node{obj, next_id++, std::move(other), lp.basis()});
    const BoundChange& dive = prefer_up ? up : down;
    current.push_back(dive);
    lp.set_bounds(dive.col, dive.lower, dive.upper);
  }

  Solution out;
  out.nodes = nodes;
  out.iterations = lp.iterations();
  if (!have_incumbent) {
    out.status = root_status == Status::unbounded ? Status::unbounded : Status::infeasible;
    return out;
  }
  out.status = Status::optimal;
  out.objective = incumbent;
  out.x = std::move(incumbent_x);
  out.row_activity = activity(problem, out.x);
  return out;
}

}  // namespace gridsettle::lp
