#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mlb/model.hpp"

namespace mlb {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

const char* to_string(LpStatus status);

struct LPSolution {
  LpStatus status = LpStatus::NumericalFailure;
  std::vector<double> primal;
  double objective = 0.0;
  /// One multiplier per row. Nonnegative on binding >= rows of a minimization.
  std::vector<double> row_duals;
  /// Nonnegative multipliers of variables resting at their upper bound.
  std::vector<double> upper_bound_duals;
  /// Nonnegative multipliers of variables resting at a nonzero lower bound.
  std::vector<double> lower_bound_duals;
  long iterations = 0;

  bool optimal() const { return status == LpStatus::Optimal; }
  /// rhs' row_duals + lower' lower_bound_duals - upper' upper_bound_duals
  double dual_objective(const MixedModel& model) const;
};

struct SimplexOptions {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-7;
  double pivot_tol = 1e-9;
  int refactor_interval = 64;
  /// Reoptimize with the dual simplex when the starting basis is dual
  /// feasible but primal infeasible (typical after branching).
  bool use_dual = true;
  /// 0 selects a limit proportional to the model size.
  long max_iterations = 0;
};

/// Warm-startable basis snapshot: one status per structural and logical.
struct Basis {
  enum Status : std::int8_t { kBasic, kAtLower, kAtUpper, kAtZero };
  std::vector<Status> structural;
  std::vector<Status> logical;
  bool empty() const { return structural.empty() && logical.empty(); }
};

/// Bounded-variable primal simplex over a MixedModel (integrality ignored).
///
/// Each row r gets a logical variable s_r = a_r v with bounds derived from the
/// row sense, so the working system is [A | -I] (v, s) = 0 with bounds on every
/// column. Infeasible starting bases are handled by a composite phase 1 that
/// minimizes the sum of bound violations, which is what makes warm starts
/// after bound changes and appended rows cheap. Pricing is Dantzig's rule,
/// falling back to Bland's rule after 3*(rows+cols) consecutive degenerate
/// pivots. The basis is factorized with LU and updated in product form.
///
/// An instance is single-use per thread; distinct instances are independent.
class SimplexSolver {
 public:
  explicit SimplexSolver(const MixedModel& model, SimplexOptions options = {});
  ~SimplexSolver();
  SimplexSolver(SimplexSolver&&) noexcept;
  SimplexSolver& operator=(SimplexSolver&&) noexcept;

  LpStatus solve();
  LPSolution solution() const;

  int num_vars() const;
  int num_rows() const;
  double objective() const;
  std::span<const double> values() const;

  void set_bounds(int var, double lower, double upper);
  double lower(int var) const;
  double upper(int var) const;
  int add_row(std::span<const std::pair<int, double>> coeffs, RowSense sense, double rhs);

  Basis basis() const;
  /// Installs a basis recorded earlier; rows appended since are given basic
  /// logicals. Falls back to the slack basis if the snapshot is inconsistent.
  void set_basis(const Basis& basis);

  long total_iterations() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot LP solve of the continuous relaxation of `model`.
LPSolution solve_lp(const MixedModel& model, SimplexOptions options = {});

struct RelaxedSubproblem {
  double value = 0.0;
  std::vector<double> phi;  ///< coupling-row duals
  std::vector<double> psi;  ///< upper-bound duals
  std::vector<double> y;
};

/// Solves min q y s.t. W y >= h - T x with integrality dropped. Throws
/// RecourseError when infeasible (scenario index -1; callers relabel).
RelaxedSubproblem solve_relaxed_subproblem(const Scenario& scenario, std::span<const double> x);

}  // namespace mlb
