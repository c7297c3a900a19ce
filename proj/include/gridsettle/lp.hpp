#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace gridsettle::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Entry {
  std::size_t index;
  double value;
};

/// Sparse problem  min c'x + offset  s.t.  row_lower <= A x <= row_upper,
/// col_lower <= x <= col_upper, x_j integer for flagged columns.
class Problem {
 public:
  std::size_t add_column(double cost, double lower, double upper, bool integer = false,
                         int branch_priority = 0);
  /// Duplicate column indices within one row are summed.
  std::size_t add_row(double lower, double upper, std::span<const Entry> entries);
  std::size_t add_row(double lower, double upper, std::initializer_list<Entry> entries) {
    return add_row(lower, upper, std::span<const Entry>(entries.begin(), entries.size()));
  }

  void set_column_bounds(std::size_t col, double lower, double upper);
  void set_cost(std::size_t col, double cost) { cost_[col] = cost; }

  std::size_t num_columns() const { return cost_.size(); }
  std::size_t num_rows() const { return row_lower_.size(); }
  std::size_t num_nonzeros() const;

  double cost(std::size_t col) const { return cost_[col]; }
  double column_lower(std::size_t col) const { return col_lower_[col]; }
  double column_upper(std::size_t col) const { return col_upper_[col]; }
  bool is_integer(std::size_t col) const { return integer_[col]; }
  int branch_priority(std::size_t col) const { return priority_[col]; }
  double row_lower(std::size_t row) const { return row_lower_[row]; }
  double row_upper(std::size_t row) const { return row_upper_[row]; }
  std::span<const Entry> column(std::size_t col) const { return columns_[col]; }

  double objective_offset = 0.0;

 private:
  std::vector<double> cost_, col_lower_, col_upper_;
  std::vector<bool> integer_;
  std::vector<int> priority_;
  std::vector<double> row_lower_, row_upper_;
  std::vector<std::vector<Entry>> columns_;  // (row, value) per column
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };
std::string_view to_string(Status status);

struct Solution {
  Status status = Status::infeasible;
  double objective = 0.0;
  std::vector<double> x;             // structural values
  std::vector<double> row_activity;  // A x
  /// d objective / d (row bound) at the optimum, one per row. For a
  /// degenerate equality row the right-hand derivative is reported.
  std::vector<double> row_duals;
  std::size_t iterations = 0;
  std::size_t nodes = 0;
};

struct SimplexOptions {
  double primal_tolerance = 1e-9;
  double dual_tolerance = 1e-9;
  double pivot_tolerance = 1e-9;
  std::size_t max_iterations = 500000;
  std::size_t refactor_interval = 150;
};

/// Bounded dual simplex over [A  -I] (one logical per row) with a dense
/// explicit basis inverse and dual steepest-edge pricing. Keeps its basis
/// between solves so bound changes can be re-optimised warm.
class DualSimplex {
 public:
  struct Basis {
    std::vector<std::int32_t> head;
    std::vector<std::uint8_t> state;
    bool operator==(const Basis&) const = default;
  };

  explicit DualSimplex(const Problem& problem, SimplexOptions options = {});

  Status solve();

  /// Changes the bounds of a structural column; takes effect at the next solve.
  void set_bounds(std::size_t col, double lower, double upper);
  void reset_bounds();

  Basis basis() const;
  void load_basis(const Basis& basis);

  /// Pivots degenerate basic logicals of equality rows out of the basis with
  /// a dual ratio test in the direction of an increasing row bound, so their
  /// duals become right-hand derivatives. Call after an optimal solve.
  void price_out_equality_rows();

  double objective() const;
  std::vector<double> primal() const;
  std::vector<double> row_activity() const;
  std::vector<double> duals() const;
  std::size_t iterations() const { return iterations_; }

 private:
  enum State : std::uint8_t { kBasic, kAtLower, kAtUpper, kAtZero };

  template <class F>
  void for_column(std::size_t j, F&& f) const;

  void cold_start();
  bool refactor();
  void recompute_primal();
  void recompute_duals();
  void place_nonbasic(std::size_t j);
  bool restore_dual_feasibility();
  void pivot(std::size_t r, std::size_t q, int direction, double target, const std::vector<double>& column);
  bool dual_iteration(std::size_t r, int direction, double target, bool degenerate_only);
  void compute_pivot_row(std::size_t r);
  void ftran(std::size_t q, std::vector<double>& out) const;
  double* binv_row(std::size_t r) { return binv_.data() + r * m_; }
  const double* binv_row(std::size_t r) const { return binv_.data() + r * m_; }

  const Problem& problem_;
  SimplexOptions options_;
  std::size_t n_ = 0;  // structural columns
  std::size_t m_ = 0;  // rows (= logical columns)

  std::vector<double> lower_, upper_, cost_, x_, d_;
  std::vector<std::uint8_t> state_;
  std::vector<bool> artificial_;
  std::vector<std::int32_t> head_;
  std::vector<std::int32_t> position_;
  std::vector<double> binv_;
  std::vector<double> weights_;
  std::vector<double> pivot_row_;
  std::vector<double> column_;
  bool factored_ = false;
  bool primal_dirty_ = true;
  std::size_t iterations_ = 0;
  std::size_t since_refactor_ = 0;
};

/// Behavioural solver interface used by the market builder. Implementations
/// hold no shared mutable state; use one instance per thread.
class SolverContract {
 public:
  virtual ~SolverContract() = default;
  /// Continuous relaxation; returns primal values and row duals.
  virtual Solution solve_lp(const Problem& problem) = 0;
  /// Optimal integer solution within the configured gap.
  virtual Solution solve_milp(const Problem& problem) = 0;
};

struct MilpOptions {
  double relative_gap = 1e-6;
  double absolute_gap = 1e-9;
  double integrality_tolerance = 1e-6;
  std::size_t max_nodes = 200000;
  SimplexOptions simplex;
};

/// Best-first branch-and-bound with plunging over warm-started dual simplex
/// relaxations, plus a round-up heuristic on priority columns at the root.
class BranchAndBoundSolver final : public SolverContract {
 public:
  explicit BranchAndBoundSolver(MilpOptions options = {}) : options_(options) {}
  Solution solve_lp(const Problem& problem) override;
  Solution solve_milp(const Problem& problem) override;

 private:
  MilpOptions options_;
};

}  // namespace gridsettle::lp
