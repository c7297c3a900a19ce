#include "gridsettle/lp.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gridsettle/error.hpp"
#include "gridsettle/kernels.hpp"

namespace gridsettle::lp {
namespace {

// Stand-in value for a nonbasic variable whose needed bound is infinite.
// A final basis that still uses one is reported as unbounded.
constexpr double kArtificialBound = 1e9;
constexpr double kSingularPivot = 1e-11;

}  // namespace

std::string_view to_string(Status status) {
  switch (status) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration limit";
  }
  return "unknown";
}

std::size_t Problem::add_column(double cost, double lower, double upper, bool integer,
                                int branch_priority) {
  cost_.push_back(cost);
  col_lower_.push_back(lower);
  col_upper_.push_back(upper);
  integer_.push_back(integer);
  priority_.push_back(branch_priority);
  columns_.emplace_back();
  return cost_.size() - 1;
}

std::size_t Problem::add_row(double lower, double upper, std::span<const Entry> entries) {
  const std::size_t row = row_lower_.size();
  row_lower_.push_back(lower);
  row_upper_.push_back(upper);
  std::vector<Entry> merged(entries.begin(), entries.end());
  std::stable_sort(merged.begin(), merged.end(),
                   [](const Entry& a, const Entry& b) { return a.index < b.index; });
  for (std::size_t k = 0; k < merged.size();) {
    std::size_t col = merged[k].index;
    double value = 0.0;
    for (; k < merged.size() && merged[k].index == col; ++k) value += merged[k].value;
    if (col >= columns_.size()) throw Error(fmt::format("row {} references column {}", row, col));
    if (value != 0.0) columns_[col].push_back(Entry{row, value});
  }
  return row;
}

void Problem::set_column_bounds(std::size_t col, double lower, double upper) {
  col_lower_[col] = lower;
  col_upper_[col] = upper;
}

std::size_t Problem::num_nonzeros() const {
  std::size_t nnz = 0;
  for (const auto& c : columns_) nnz += c.size();
  return nnz;
}

// ---------------------------------------------------------------------------

DualSimplex::DualSimplex(const Problem& problem, SimplexOptions options)
    : problem_(problem), options_(options), n_(problem.num_columns()), m_(problem.num_rows()) {
  const std::size_t total = n_ + m_;
  lower_.resize(total);
  upper_.resize(total);
  cost_.assign(total, 0.0);
  x_.assign(total, 0.0);
  d_.assign(total, 0.0);
  state_.assign(total, kAtLower);
  artificial_.assign(total, false);
  position_.assign(total, -1);
  head_.assign(m_, 0);
  pivot_row_.assign(total, 0.0);
  column_.assign(m_, 0.0);
  weights_.assign(m_, 1.0);
  reset_bounds();
  for (std::size_t j = 0; j < n_; ++j) cost_[j] = problem.cost(j);
}

template <class F>
void DualSimplex::for_column(std::size_t j, F&& f) const {
  if (j < n_) {
    for (const auto& e : problem_.column(j)) f(e.index, e.value);
  } else {
    f(j - n_, -1.0);
  }
}

void DualSimplex::reset_bounds() {
  for (std::size_t j = 0; j < n_; ++j) {
    lower_[j] = problem_.column_lower(j);
    upper_[j] = problem_.column_upper(j);
  }
  for (std::size_t i = 0; i < m_; ++i) {
    lower_[n_ + i] = problem_.row_lower(i);
    upper_[n_ + i] = problem_.row_upper(i);
  }
  if (factored_) {
    for (std::size_t j = 0; j < n_ + m_; ++j) {
      if (state_[j] != kBasic) place_nonbasic(j);
    }
  }
  primal_dirty_ = true;
}

void DualSimplex::set_bounds(std::size_t col, double lower, double upper) {
  lower_[col] = lower;
  upper_[col] = upper;
  if (factored_ && state_[col] != kBasic) place_nonbasic(col);
  primal_dirty_ = true;
}

void DualSimplex::place_nonbasic(std::size_t j) {
  const double lo = lower_[j];
  const double hi = upper_[j];
  const double tol = options_.dual_tolerance;
  artificial_[j] = false;
  if (lo == hi) {
    state_[j] = kAtLower;
    x_[j] = lo;
    return;
  }
  const bool lo_finite = std::isfinite(lo);
  const bool hi_finite = std::isfinite(hi);
  if (d_[j] > tol) {
    state_[j] = kAtLower;
    x_[j] = lo_finite ? lo : -kArtificialBound;
    artificial_[j] = !lo_finite;
  } else if (d_[j] < -tol) {
    state_[j] = kAtUpper;
    x_[j] = hi_finite ? hi : kArtificialBound;
    artificial_[j] = !hi_finite;
  } else if (state_[j] == kAtUpper && hi_finite) {
    x_[j] = hi;
  } else if (lo_finite) {
    state_[j] = kAtLower;
    x_[j] = lo;
  } else if (hi_finite) {
    state_[j] = kAtUpper;
    x_[j] = hi;
  } else {
    state_[j] = kAtZero;
    x_[j] = 0.0;
  }
}

bool DualSimplex::restore_dual_feasibility() {
  const double tol = options_.dual_tolerance;
  bool changed = false;
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (state_[j] == kBasic || lower_[j] == upper_[j]) continue;
    const bool wrong = (state_[j] == kAtLower && d_[j] < -tol) ||
                       (state_[j] == kAtUpper && d_[j] > tol) ||
                       (state_[j] == kAtZero && std::abs(d_[j]) > tol) ||
                       (artificial_[j] && std::abs(d_[j]) <= tol);
    if (wrong) {
      place_nonbasic(j);
      changed = true;
    }
  }
  return changed;
}

void DualSimplex::cold_start() {
  std::fill(position_.begin(), position_.end(), -1);
  binv_.assign(m_ * m_, 0.0);
  for (std::size_t r = 0; r < m_; ++r) {
    head_[r] = static_cast<std::int32_t>(n_ + r);
    position_[n_ + r] = static_cast<std::int32_t>(r);
    state_[n_ + r] = kBasic;
    binv_[r * m_ + r] = -1.0;
    weights_[r] = 1.0;
    d_[n_ + r] = 0.0;
  }
  for (std::size_t j = 0; j < n_; ++j) {
    d_[j] = cost_[j];
    state_[j] = kAtLower;
    place_nonbasic(j);
  }
  factored_ = true;
  since_refactor_ = 0;
  primal_dirty_ = true;
}

bool DualSimplex::refactor() {
  const auto& k = kernels::active();
  std::vector<std::int32_t> covered(m_, -1);
  std::vector<std::size_t> structural;  // basis positions holding structural columns
  for (std::size_t r = 0; r < m_; ++r) {
    const auto j = static_cast<std::size_t>(head_[r]);
    if (j >= n_) {
      covered[j - n_] = static_cast<std::int32_t>(r);
    } else {
      structural.push_back(r);
    }
  }
  std::vector<std::size_t> open_rows;
  std::vector<std::int32_t> open_index(m_, -1);
  for (std::size_t i = 0; i < m_; ++i) {
    if (covered[i] < 0) {
      open_index[i] = static_cast<std::int32_t>(open_rows.size());
      open_rows.push_back(i);
    }
  }
  const std::size_t dim = structural.size();
  if (open_rows.size() != dim) return false;

  // Invert the kernel K = A[open rows, structural basics] by Gauss-Jordan on [K | I].
  const std::size_t width = 2 * dim;
  std::vector<double> aug(dim * width, 0.0);
  for (std::size_t b = 0; b < dim; ++b) {
    for_column(static_cast<std::size_t>(head_[structural[b]]), [&](std::size_t i, double v) {
      if (open_index[i] >= 0) aug[static_cast<std::size_t>(open_index[i]) * width + b] += v;
    });
    aug[b * width + dim + b] = 1.0;
  }
  for (std::size_t c = 0; c < dim; ++c) {
    std::size_t p = c;
    double best = std::abs(aug[c * width + c]);
    for (std::size_t a = c + 1; a < dim; ++a) {
      const double v = std::abs(aug[a * width + c]);
      if (v > best) {
        best = v;
        p = a;
      }
    }
    if (best < kSingularPivot) return false;
    if (p != c) {
      std::swap_ranges(aug.begin() + static_cast<std::ptrdiff_t>(p * width),
                       aug.begin() + static_cast<std::ptrdiff_t>((p + 1) * width),
                       aug.begin() + static_cast<std::ptrdiff_t>(c * width));
    }
    double* pivot_row = aug.data() + c * width;
    k.divide(pivot_row, pivot_row[c], width);
    for (std::size_t a = 0; a < dim; ++a) {
      if (a == c) continue;
      const double f = aug[a * width + c];
      if (f != 0.0) k.axpy(aug.data() + a * width, pivot_row, -f, width);
    }
  }

  binv_.assign(m_ * m_, 0.0);
  for (std::size_t b = 0; b < dim; ++b) {
    double* row = binv_row(structural[b]);
    const double* kinv = aug.data() + b * width + dim;
    for (std::size_t a = 0; a < dim; ++a) row[open_rows[a]] = kinv[a];
  }
  for (std::size_t i = 0; i < m_; ++i) {
    if (covered[i] >= 0) binv_row(static_cast<std::size_t>(covered[i]))[i] = -1.0;
  }
  for (std::size_t b = 0; b < dim; ++b) {
    const double* kinv = aug.data() + b * width + dim;
    for_column(static_cast<std::size_t>(head_[structural[b]]), [&](std::size_t i, double v) {
      if (covered[i] < 0) return;
      double* row = binv_row(static_cast<std::size_t>(covered[i]));
      for (std::size_t a = 0; a < dim; ++a) row[open_rows[a]] += v * kinv[a];
    });
  }
  for (std::size_t r = 0; r < m_; ++r) weights_[r] = k.dot(binv_row(r), binv_row(r), m_);
  factored_ = true;
  since_refactor_ = 0;
  primal_dirty_ = true;
  return true;
}

void DualSimplex::recompute_primal() {
  const auto& k = kernels::active();
  std::vector<double> rhs(m_, 0.0);
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (state_[j] == kBasic || x_[j] == 0.0) continue;
    const double xj = x_[j];
    for_column(j, [&](std::size_t i, double v) { rhs[i] += v * xj; });
  }
  for (std::size_t r = 0; r < m_; ++r) {
    x_[static_cast<std::size_t>(head_[r])] = -k.dot(binv_row(r), rhs.data(), m_);
  }
  primal_dirty_ = false;
}

void DualSimplex::recompute_duals() {
  auto y = duals();
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (state_[j] == kBasic) {
      d_[j] = 0.0;
      continue;
    }
    double dj = cost_[j];
    for_column(j, [&](std::size_t i, double v) { dj -= y[i] * v; });
    d_[j] = dj;
  }
}

void DualSimplex::compute_pivot_row(std::size_t r) {
  const double* rho = binv_row(r);
  for (std::size_t j = 0; j < n_; ++j) {
    if (state_[j] == kBasic) {
      pivot_row_[j] = 0.0;
      continue;
    }
    double a = 0.0;
    for (const auto& e : problem_.column(j)) a += rho[e.index] * e.value;
    pivot_row_[j] = a;
  }
  for (std::size_t i = 0; i < m_; ++i) {
    pivot_row_[n_ + i] = state_[n_ + i] == kBasic ? 0.0 : -rho[i];
  }
}

void DualSimplex::ftran(std::size_t q, std::vector<double>& out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for_column(q, [&](std::size_t i, double v) {
    for (std::size_t r = 0; r < m_; ++r) out[r] += binv_[r * m_ + i] * v;
  });
}

bool DualSimplex::dual_iteration(std::size_t r, int direction, double target, bool degenerate_only) {
  (void)degenerate_only;
  compute_pivot_row(r);
  const double ptol = options_.pivot_tolerance;
  const double dtol = options_.dual_tolerance;
  const double s = static_cast<double>(direction);

  // Harris two-pass ratio test.
  double bound = kInfinity;
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (state_[j] == kBasic || lower_[j] == upper_[j]) continue;
    const double abar = s * pivot_row_[j];
    if (abar > ptol && state_[j] != kAtUpper) {
      bound = std::min(bound, (d_[j] + dtol) / abar);
    } else if (abar < -ptol && state_[j] != kAtLower) {
      bound = std::min(bound, (d_[j] - dtol) / abar);
    }
  }
  if (!std::isfinite(bound)) return false;

  std::size_t q = n_ + m_;
  double best = 0.0;
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (state_[j] == kBasic || lower_[j] == upper_[j]) continue;
    const double abar = s * pivot_row_[j];
    const bool eligible = (abar > ptol && state_[j] != kAtUpper) ||
                          (abar < -ptol && state_[j] != kAtLower);
    if (!eligible || d_[j] / abar > bound) continue;
    if (std::abs(abar) > best) {
      best = std::abs(abar);
      q = j;
    }
  }
  if (q == n_ + m_) return false;

  ftran(q, column_);
  if (std::abs(column_[r]) < ptol) return false;
  pivot(r, q, direction, target, column_);
  return true;
}

void DualSimplex::pivot(std::size_t r, std::size_t q, int direction, double target,
                        const std::vector<double>& column) {
  const auto& k = kernels::active();
  const auto p = static_cast<std::size_t>(head_[r]);
  const double s = static_cast<double>(direction);

  double t = d_[q] / (s * pivot_row_[q]);
  if (t < 0.0) t = 0.0;
  const double theta = s * t;
  if (theta != 0.0) {
    for (std::size_t j = 0; j < n_ + m_; ++j) {
      if (state_[j] != kBasic && pivot_row_[j] != 0.0) d_[j] -= theta * pivot_row_[j];
    }
  }
  d_[q] = 0.0;
  d_[p] = -theta;

  const double step = (x_[p] - target) / column[r];
  if (step != 0.0) {
    for (std::size_t i = 0; i < m_; ++i) {
      if (column[i] != 0.0) x_[static_cast<std::size_t>(head_[i])] -= step * column[i];
    }
  }
  x_[q] += step;
  x_[p] = target;

  state_[p] = (direction > 0 && lower_[p] != upper_[p]) ? kAtUpper : kAtLower;
  artificial_[p] = false;
  state_[q] = kBasic;
  artificial_[q] = false;
  head_[r] = static_cast<std::int32_t>(q);
  position_[q] = static_cast<std::int32_t>(r);
  position_[p] = -1;

  const double piv = column[r];
  double* pivot_row = binv_row(r);
  k.divide(pivot_row, piv, m_);
  weights_[r] = k.dot(pivot_row, pivot_row, m_);
  for (std::size_t i = 0; i < m_; ++i) {
    if (i == r || column[i] == 0.0) continue;
    weights_[i] = k.axpy_norm2(binv_row(i), pivot_row, -column[i], m_);
  }
  ++iterations_;
  ++since_refactor_;
}

Status DualSimplex::solve() {
  if (!factored_) cold_start();
  if (restore_dual_feasibility()) primal_dirty_ = true;
  if (primal_dirty_) recompute_primal();

  const double ptol = options_.primal_tolerance;
  bool fresh = since_refactor_ == 0;
  std::size_t stalls = 0;
  while (true) {
    if (iterations_ >= options_.max_iterations) return Status::iteration_limit;
    if (since_refactor_ >= options_.refactor_interval) {
      if (!refactor()) cold_start();
      recompute_primal();
      recompute_duals();
      if (restore_dual_feasibility()) recompute_primal();
      fresh = true;
    }

    std::size_t leave = m_;
    double best = 0.0;
    for (std::size_t r = 0; r < m_; ++r) {
      const auto j = static_cast<std::size_t>(head_[r]);
      const double xj = x_[j];
      double infeasibility = 0.0;
      if (xj < lower_[j] - ptol * (1.0 + std::abs(lower_[j]))) {
        infeasibility = lower_[j] - xj;
      } else if (xj > upper_[j] + ptol * (1.0 + std::abs(upper_[j]))) {
        infeasibility = xj - upper_[j];
      } else {
        continue;
      }
      const double score = infeasibility * infeasibility / std::max(weights_[r], 1e-12);
      if (score > best) {
        best = score;
        leave = r;
      }
    }

    if (leave == m_) {
      if (!fresh) {
        // Confirm optimality on a fresh factorisation before reporting it.
        if (!refactor()) cold_start();
        recompute_primal();
        recompute_duals();
        if (restore_dual_feasibility()) recompute_primal();
        fresh = true;
        continue;
      }
      for (std::size_t j = 0; j < n_ + m_; ++j) {
        if (state_[j] != kBasic && artificial_[j]) return Status::unbounded;
      }
      return Status::optimal;
    }

    const auto p = static_cast<std::size_t>(head_[leave]);
    const int direction = x_[p] > upper_[p] ? 1 : -1;
    const double target = direction > 0 ? upper_[p] : lower_[p];
    if (dual_iteration(leave, direction, target, false)) {
      fresh = false;
      stalls = 0;
      continue;
    }
    if (!fresh && stalls == 0) {
      ++stalls;
      since_refactor_ = options_.refactor_interval;  // force a refactorisation and retry
      continue;
    }
    return Status::infeasible;
  }
}

void DualSimplex::price_out_equality_rows() {
  for (std::size_t i = 0; i < m_; ++i) {
    const std::size_t j = n_ + i;
    if (state_[j] != kBasic || lower_[j] != upper_[j]) continue;
    const auto r = static_cast<std::size_t>(position_[j]);
    dual_iteration(r, -1, lower_[j], true);
  }
}

DualSimplex::Basis DualSimplex::basis() const { return Basis{head_, state_}; }

void DualSimplex::load_basis(const Basis& basis) {
  if (factored_ && basis.head == head_ && basis.state == state_) return;
  head_ = basis.head;
  state_ = basis.state;
  std::fill(position_.begin(), position_.end(), -1);
  for (std::size_t r = 0; r < m_; ++r) position_[static_cast<std::size_t>(head_[r])] = static_cast<std::int32_t>(r);
  binv_.resize(m_ * m_);
  if (!refactor()) {
    cold_start();
    return;
  }
  recompute_duals();
  for (std::size_t j = 0; j < n_ + m_; ++j) {
    if (state_[j] != kBasic) place_nonbasic(j);
  }
  primal_dirty_ = true;
}

double DualSimplex::objective() const {
  double obj = problem_.objective_offset;
  for (std::size_t j = 0; j < n_; ++j) obj += cost_[j] * x_[j];
  return obj;
}

std::vector<double> DualSimplex::primal() const { return {x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_)}; }

std::vector<double> DualSimplex::row_activity() const {
  return {x_.begin() + static_cast<std::ptrdiff_t>(n_), x_.end()};
}

std::vector<double> DualSimplex::duals() const {
  const auto& k = kernels::active();
  std::vector<double> y(m_, 0.0);
  for (std::size_t r = 0; r < m_; ++r) {
    const double c = cost_[static_cast<std::size_t>(head_[r])];
    if (c != 0.0) k.axpy(y.data(), binv_row(r), c, m_);
  }
  return y;
}

}  // namespace gridsettle::lp
