#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlb/sparse.hpp"

namespace mlb {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Bounds and integrality of a single decision variable.
struct VarDomain {
  double lower = 0.0;
  double upper = kInf;
  bool integer = false;

  static VarDomain binary() { return {0.0, 1.0, true}; }
  static VarDomain continuous(double lo = 0.0, double hi = kInf) { return {lo, hi, false}; }
  static VarDomain integral(double lo, double hi) { return {lo, hi, true}; }

  bool operator==(const VarDomain&) const = default;
};

/// One realization of the second-stage data: min q y s.t. W y >= h - T x.
struct Scenario {
  std::vector<double> q;
  SparseMatrix W;
  SparseMatrix T;
  std::vector<double> h;
  std::vector<VarDomain> y_domain;

  int num_rows() const { return static_cast<int>(h.size()); }
  int num_y() const { return static_cast<int>(q.size()); }
};

/// Two-stage stochastic MILP with binary coupling variables x:
///
///   min c x + d z + E[Q_s(x)]   s.t.  A x + C z <= b,  x binary,  z in Z
///   Q_s(x) = min { q_s y : W_s y >= h_s - T_s x, y in Y }
///
/// Immutable after validate(); safe to share across threads.
struct TwoStageProblem {
  int n_x = 0;
  std::vector<double> c;
  std::vector<double> d;
  SparseMatrix A;
  SparseMatrix C;
  std::vector<double> b;
  std::vector<VarDomain> z_domain;
  std::vector<Scenario> scenarios;
  std::vector<double> probabilities;

  int num_z() const { return static_cast<int>(d.size()); }
  int num_first_stage_rows() const { return static_cast<int>(b.size()); }
  int num_scenarios() const { return static_cast<int>(scenarios.size()); }

  /// Throws StructuralError naming the offending scenario when dimensions or
  /// probabilities are inconsistent.
  void validate() const;

  /// True when every scenario shares h and T with scenario 0, the case in
  /// which the continuous cut reduces to E[phi](h - T x) - E[1'psi].
  bool deterministic_h_and_T() const;

  /// c x + d z
  double first_stage_cost(std::span<const double> x, std::span<const double> z) const;
};

enum class RowSense { GreaterEqual, LessEqual, Equal };

/// Generic mixed-integer linear model: min objective' v subject to row
/// constraints and per-variable bounds.
struct MixedModel {
  std::vector<double> objective;
  SparseMatrix matrix;
  std::vector<RowSense> senses;
  std::vector<double> rhs;
  std::vector<VarDomain> domains;
  double objective_offset = 0.0;
  /// Optional branching priorities, one per variable; fractional variables
  /// of higher priority are branched on first. Empty means all equal.
  std::vector<int> priority;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rhs.size()); }

  /// Appends a variable and returns its index.
  int add_variable(double cost, VarDomain domain);
  /// Appends a row from (column, value) pairs and returns its index.
  int add_row(std::span<const std::pair<int, double>> coeffs, RowSense sense, double rhs_value);

  /// Throws StructuralError for dimension mismatches or unbounded integers.
  void validate() const;
  double evaluate(std::span<const double> values) const;
  /// Largest bound or row violation at `values`.
  double max_violation(std::span<const double> values) const;
};

/// Deterministic equivalent: variables are ordered [x, z, y_0, ..., y_{S-1}].
MixedModel build_extensive_form(const TwoStageProblem& problem);

/// Objective value of the extensive form at a full solution, computed
/// directly from the stage data.
double extensive_objective(const TwoStageProblem& problem, std::span<const double> x,
                           std::span<const double> z,
                           const std::vector<std::vector<double>>& y);

/// Second-stage subproblem of one scenario at fixed x, as a standalone model.
/// When `relax` is set, integrality is dropped.
MixedModel build_scenario_model(const Scenario& scenario, std::span<const double> x,
                                bool relax = false);

/// h - T x
std::vector<double> scenario_rhs(const Scenario& scenario, std::span<const double> x);

struct RecourseReport {
  bool complete = true;
  int samples_checked = 0;
  std::optional<std::vector<double>> violating_x;
  std::optional<int> violating_scenario;
};

/// Samples binary x uniformly and checks that every scenario's relaxed
/// subproblem is feasible.
RecourseReport check_relatively_complete_recourse(const TwoStageProblem& problem, int samples,
                                                  std::uint64_t seed);

// Instance files (JSON, triplet matrices).
TwoStageProblem problem_from_json_string(const std::string& text);
std::string problem_to_json_string(const TwoStageProblem& problem);
TwoStageProblem read_problem(const std::string& path);
void write_problem(const TwoStageProblem& problem, const std::string& path);

}  // namespace mlb
