#include "mlb/simplex.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "mlb/error.hpp"

namespace mlb {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
    case LpStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

double LPSolution::dual_objective(const MixedModel& model) const {
  double total = model.objective_offset;
  for (int r = 0; r < model.num_rows(); ++r) {
    if (row_duals[r] != 0.0) total += row_duals[r] * model.rhs[r];
  }
  for (int j = 0; j < model.num_vars(); ++j) {
    if (lower_bound_duals[j] != 0.0) total += lower_bound_duals[j] * model.domains[j].lower;
    if (upper_bound_duals[j] != 0.0) total -= upper_bound_duals[j] * model.domains[j].upper;
  }
  return total;
}

namespace {

// Dense LU for small bases, sparse LU beyond.
constexpr int kDenseLimit = 160;

class BasisFactor {
 public:
  // Returns false if the basis matrix is (numerically) singular.
  bool factor(int m, const std::vector<Eigen::Triplet<double>>& triplets) {
    m_ = m;
    if (m == 0) return true;
    if (m <= kDenseLimit) {
      dense_ = true;
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
      for (const auto& t : triplets) B(t.row(), t.col()) += t.value();
      dense_lu_.compute(B);
      const auto diag = dense_lu_.matrixLU().diagonal().cwiseAbs();
      return diag.minCoeff() > 1e-11 * std::max(1.0, diag.maxCoeff());
    }
    dense_ = false;
    Eigen::SparseMatrix<double> B(m, m);
    B.setFromTriplets(triplets.begin(), triplets.end());
    B.makeCompressed();
    sparse_lu_.analyzePattern(B);
    sparse_lu_.factorize(B);
    return sparse_lu_.info() == Eigen::Success;
  }

  void solve(std::vector<double>& v) const {
    if (m_ == 0) return;
    Eigen::Map<Eigen::VectorXd> vec(v.data(), m_);
    if (dense_) {
      vec = dense_lu_.solve(vec).eval();
    } else {
      Eigen::VectorXd tmp = sparse_lu_.solve(vec);
      vec = tmp;
    }
  }

  void solve_transpose(std::vector<double>& v) const {
    if (m_ == 0) return;
    Eigen::Map<Eigen::VectorXd> vec(v.data(), m_);
    if (dense_) {
      vec = dense_lu_.transpose().solve(vec).eval();
    } else {
      Eigen::VectorXd tmp = sparse_lu_.transpose().solve(vec);
      vec = tmp;
    }
  }

 private:
  int m_ = 0;
  bool dense_ = true;
  Eigen::PartialPivLU<Eigen::MatrixXd> dense_lu_;
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> sparse_lu_;
};

struct Eta {
  int pos;
  double pivot;
  std::vector<std::pair<int, double>> column;  // off-pivot nonzeros of B^{-1} a_q
};

}  // namespace

struct SimplexSolver::Impl {
  using Status = Basis::Status;

  SimplexOptions opt;
  int n = 0;
  int m = 0;
  double offset = 0.0;
  std::vector<std::vector<std::pair<int, double>>> cols;
  std::vector<double> cost;
  std::vector<double> lo, hi;  // size n + m, logicals after structurals
  std::vector<Status> status;
  std::vector<int> head;
  std::vector<double> x;

  BasisFactor factor;
  std::vector<Eta> etas;
  bool factor_valid = false;
  bool values_valid = false;
  LpStatus last_status = LpStatus::NumericalFailure;
  long iterations = 0;

  // Scratch.
  std::vector<double> y, w, d;

  int total() const { return n + m; }

  void init(const MixedModel& model) {
    model.validate();
    n = model.num_vars();
    m = 0;
    offset = model.objective_offset;
    cols.assign(n, {});
    cost = model.objective;
    lo.resize(n);
    hi.resize(n);
    for (int j = 0; j < n; ++j) {
      lo[j] = model.domains[j].lower;
      hi[j] = model.domains[j].upper;
    }
    status.assign(n, Basis::kAtLower);
    for (int j = 0; j < n; ++j) status[j] = nonbasic_status(j);
    x.assign(n, 0.0);
    for (int j = 0; j < n; ++j) x[j] = nonbasic_value(j);

    std::vector<std::vector<std::pair<int, double>>> rows(model.num_rows());
    for (const auto& e : model.matrix.entries()) rows[e.row].emplace_back(e.col, e.value);
    for (int r = 0; r < model.num_rows(); ++r) append_row(rows[r], model.senses[r], model.rhs[r]);
  }

  Status nonbasic_status(int j) const {
    if (std::isfinite(lo[j])) return Basis::kAtLower;
    if (std::isfinite(hi[j])) return Basis::kAtUpper;
    return Basis::kAtZero;
  }

  double nonbasic_value(int j) const {
    switch (status[j]) {
      case Basis::kAtLower: return lo[j];
      case Basis::kAtUpper: return hi[j];
      default: return 0.0;
    }
  }

  int append_row(const std::vector<std::pair<int, double>>& coeffs, RowSense sense, double rhs) {
    const int r = m++;
    for (const auto& [j, v] : coeffs) {
      if (j < 0 || j >= n) throw StructuralError("row coefficient references unknown variable");
      if (v != 0.0) cols[j].emplace_back(r, v);
    }
    double rlo = -kInf, rhi = kInf;
    switch (sense) {
      case RowSense::GreaterEqual: rlo = rhs; break;
      case RowSense::LessEqual: rhi = rhs; break;
      case RowSense::Equal: rlo = rhi = rhs; break;
    }
    lo.push_back(rlo);
    hi.push_back(rhi);
    status.push_back(Basis::kBasic);
    head.push_back(n + r);
    x.push_back(0.0);
    factor_valid = false;
    values_valid = false;
    return r;
  }

  // Sparse column of variable j in [A | -I].
  template <class F>
  void for_column(int j, F&& f) const {
    if (j < n) {
      for (const auto& [r, v] : cols[j]) f(r, v);
    } else {
      f(j - n, -1.0);
    }
  }

  double column_dot(int j, const std::vector<double>& vec) const {
    if (j >= n) return -vec[j - n];
    double s = 0.0;
    for (const auto& [r, v] : cols[j]) s += v * vec[r];
    return s;
  }

  bool refactor() {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m) * 3);
    for (int p = 0; p < m; ++p) {
      for_column(head[p], [&](int r, double v) { trip.emplace_back(r, p, v); });
    }
    etas.clear();
    factor_valid = factor.factor(m, trip);
    return factor_valid;
  }

  void slack_basis() {
    for (int j = 0; j < n; ++j) {
      status[j] = nonbasic_status(j);
      x[j] = nonbasic_value(j);
    }
    for (int r = 0; r < m; ++r) {
      status[n + r] = Basis::kBasic;
      head[r] = n + r;
    }
    factor_valid = false;
    values_valid = false;
  }

  void ftran(std::vector<double>& v) const {
    factor.solve(v);
    for (const auto& eta : etas) {
      const double vp = v[eta.pos] / eta.pivot;
      if (vp != 0.0) {
        for (const auto& [i, wi] : eta.column) v[i] -= wi * vp;
      }
      v[eta.pos] = vp;
    }
  }

  void btran(std::vector<double>& v) const {
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      double s = v[it->pos];
      for (const auto& [i, wi] : it->column) s -= v[i] * wi;
      v[it->pos] = s / it->pivot;
    }
    factor.solve_transpose(v);
  }

  void compute_basic_values() {
    std::vector<double> rhs(m, 0.0);
    for (int j = 0; j < total(); ++j) {
      if (status[j] == Basis::kBasic) continue;
      const double xj = x[j];
      if (xj == 0.0) continue;
      for_column(j, [&](int r, double v) { rhs[r] -= v * xj; });
    }
    ftran(rhs);
    for (int p = 0; p < m; ++p) x[head[p]] = rhs[p];
    values_valid = true;
  }

  // Ensures a valid factorization and consistent basic values; repairs a
  // singular basis by restarting from the slack basis.
  bool prepare() {
    if (!factor_valid) {
      if (!refactor()) {
        slack_basis();
        if (!refactor()) return false;
      }
      values_valid = false;
    }
    if (!values_valid) compute_basic_values();
    return true;
  }

  double infeasibility(int j) const {
    if (x[j] < lo[j] - opt.feasibility_tol) return lo[j] - x[j];
    if (x[j] > hi[j] + opt.feasibility_tol) return x[j] - hi[j];
    return 0.0;
  }

  enum class DualOutcome { PrimalFeasible, Infeasible, GaveUp };

  // Duals of the current basis into y and reduced costs of nonbasics into d.
  void compute_reduced_costs() {
    for (int p = 0; p < m; ++p) y[p] = head[p] < n ? cost[head[p]] : 0.0;
    btran(y);
    for (int j = 0; j < total(); ++j) {
      d[j] = status[j] == Basis::kBasic ? 0.0 : (j < n ? cost[j] : 0.0) - column_dot(j, y);
    }
  }

  bool dual_feasible() const {
    const double tol = opt.optimality_tol;
    for (int j = 0; j < total(); ++j) {
      if (status[j] == Basis::kBasic || lo[j] == hi[j]) continue;
      if (status[j] == Basis::kAtLower && d[j] < -tol) return false;
      if (status[j] == Basis::kAtUpper && d[j] > tol) return false;
      if (status[j] == Basis::kAtZero && std::abs(d[j]) > tol) return false;
    }
    return true;
  }

  // Bounded dual simplex from a dual feasible basis, used to reoptimize
  // after bound changes and added rows. Stops once the basis is primal
  // feasible; the primal loop then confirms optimality.
  DualOutcome dual_phase() {
    compute_reduced_costs();
    if (!dual_feasible()) return DualOutcome::GaveUp;
    const long max_iter = 20L * (n + m) + 1000;
    const double ftol = opt.feasibility_tol;
    const double dtol = opt.optimality_tol;
    std::vector<double> rho(m), alpha(total(), 0.0);
    for (long iter = 0; iter < max_iter; ++iter) {
      if (static_cast<int>(etas.size()) >= opt.refactor_interval) {
        if (!refactor()) return DualOutcome::GaveUp;
        compute_basic_values();
      }
      int leave = -1;
      double worst = ftol;
      for (int p = 0; p < m; ++p) {
        const int j = head[p];
        const double inf = std::max(lo[j] - x[j], x[j] - hi[j]);
        if (inf > worst) {
          worst = inf;
          leave = p;
        }
      }
      if (leave < 0) return DualOutcome::PrimalFeasible;
      const int out = head[leave];
      const bool to_lower = x[out] < lo[out];
      const double sgn = to_lower ? 1.0 : -1.0;

      if (iter > 0) compute_reduced_costs();
      std::fill(rho.begin(), rho.end(), 0.0);
      rho[leave] = 1.0;
      btran(rho);

      // Two-pass ratio test over the pivot row.
      double max_ratio = kInf;
      for (int j = 0; j < total(); ++j) {
        alpha[j] = 0.0;
        if (status[j] == Basis::kBasic || lo[j] == hi[j]) continue;
        const double a = column_dot(j, rho);
        alpha[j] = a;
        const double sa = sgn * a;
        bool eligible = false;
        if (status[j] == Basis::kAtLower) eligible = sa < -opt.pivot_tol;
        else if (status[j] == Basis::kAtUpper) eligible = sa > opt.pivot_tol;
        else eligible = std::abs(a) > opt.pivot_tol;
        if (!eligible) continue;
        max_ratio = std::min(max_ratio, (std::abs(d[j]) + dtol) / std::abs(a));
      }
      if (!std::isfinite(max_ratio)) return DualOutcome::Infeasible;
      int enter = -1;
      double best = 0.0;
      for (int j = 0; j < total(); ++j) {
        const double a = alpha[j];
        if (a == 0.0) continue;
        const double sa = sgn * a;
        bool eligible = false;
        if (status[j] == Basis::kAtLower) eligible = sa < -opt.pivot_tol;
        else if (status[j] == Basis::kAtUpper) eligible = sa > opt.pivot_tol;
        else eligible = std::abs(a) > opt.pivot_tol;
        if (!eligible || std::abs(d[j]) / std::abs(a) > max_ratio) continue;
        if (std::abs(a) > best) {
          best = std::abs(a);
          enter = j;
        }
      }
      if (enter < 0) return DualOutcome::GaveUp;

      std::fill(w.begin(), w.end(), 0.0);
      for_column(enter, [&](int r, double v) { w[r] += v; });
      ftran(w);
      if (std::abs(w[leave]) < opt.pivot_tol) return DualOutcome::GaveUp;
      const double target = to_lower ? lo[out] : hi[out];
      const double dq = (x[out] - target) / w[leave];
      x[enter] += dq;
      for (int p = 0; p < m; ++p) {
        if (w[p] != 0.0) x[head[p]] -= w[p] * dq;
      }
      status[out] = to_lower ? Basis::kAtLower : Basis::kAtUpper;
      x[out] = target;

      Eta eta;
      eta.pos = leave;
      eta.pivot = w[leave];
      for (int p = 0; p < m; ++p) {
        if (p != leave && w[p] != 0.0) eta.column.emplace_back(p, w[p]);
      }
      etas.push_back(std::move(eta));
      head[leave] = enter;
      status[enter] = Basis::kBasic;
      ++iterations;
    }
    return DualOutcome::GaveUp;
  }

  LpStatus run() {
    const long max_iter = opt.max_iterations > 0 ? opt.max_iterations : 200L * (n + m) + 2000;
    const long bland_trigger = 3L * (n + m);
    long degenerate = 0;
    bool bland = false;
    int verify_rounds = 0;
    int repairs = 0;

    if (!prepare()) return LpStatus::NumericalFailure;

    y.assign(m, 0.0);
    w.assign(m, 0.0);
    d.assign(total(), 0.0);

    bool primal_infeasible = false;
    for (int p = 0; p < m && !primal_infeasible; ++p) primal_infeasible = infeasibility(head[p]) > 0.0;
    if (primal_infeasible && opt.use_dual) {
      const DualOutcome outcome = dual_phase();
      if (outcome == DualOutcome::Infeasible) {
        // Confirm with a fresh factorization; otherwise let the primal decide.
        if (refactor()) {
          compute_basic_values();
          if (dual_phase() == DualOutcome::Infeasible) return LpStatus::Infeasible;
        }
      }
      if (!factor_valid && !prepare()) return LpStatus::NumericalFailure;
    }

    for (long iter = 0;; ++iter) {
      if (iter >= max_iter) return LpStatus::IterationLimit;
      if (static_cast<int>(etas.size()) >= opt.refactor_interval) {
        if (!refactor()) {
          if (++repairs > 3) return LpStatus::NumericalFailure;
          slack_basis();
          if (!refactor()) return LpStatus::NumericalFailure;
        }
        compute_basic_values();
      }

      // Phase selection and basic costs.
      bool phase1 = false;
      for (int p = 0; p < m; ++p) {
        const int j = head[p];
        if (x[j] < lo[j] - opt.feasibility_tol) {
          y[p] = -1.0;
          phase1 = true;
        } else if (x[j] > hi[j] + opt.feasibility_tol) {
          y[p] = 1.0;
          phase1 = true;
        } else {
          y[p] = 0.0;
        }
      }
      if (!phase1) {
        for (int p = 0; p < m; ++p) y[p] = head[p] < n ? cost[head[p]] : 0.0;
      }
      btran(y);

      // Pricing.
      int enter = -1;
      double best = 0.0;
      double enter_dir = 0.0;
      for (int j = 0; j < total(); ++j) {
        const Status s = status[j];
        if (s == Basis::kBasic) continue;
        if (lo[j] == hi[j]) continue;
        const double cj = (!phase1 && j < n) ? cost[j] : 0.0;
        const double dj = cj - column_dot(j, y);
        d[j] = dj;
        double dir = 0.0;
        if (dj < -opt.optimality_tol && (s == Basis::kAtLower || s == Basis::kAtZero)) dir = 1.0;
        if (dj > opt.optimality_tol && (s == Basis::kAtUpper || s == Basis::kAtZero)) dir = -1.0;
        if (dir == 0.0) continue;
        if (bland) {
          enter = j;
          enter_dir = dir;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          enter = j;
          enter_dir = dir;
        }
      }

      if (enter < 0) {
        if (phase1) return LpStatus::Infeasible;
        // Verify with a fresh factorization before declaring optimality.
        if (!etas.empty() && verify_rounds < 3) {
          ++verify_rounds;
          if (!refactor()) return LpStatus::NumericalFailure;
          compute_basic_values();
          continue;
        }
        return LpStatus::Optimal;
      }

      // Entering column in basis coordinates.
      std::fill(w.begin(), w.end(), 0.0);
      for_column(enter, [&](int r, double v) { w[r] += v; });
      ftran(w);

      // Ratio test (two-pass, Harris style). Basic variable p moves at rate
      // alpha = -dir * w[p] per unit step.
      const double ftol = opt.feasibility_tol;
      double relaxed_step = kInf;
      if (std::isfinite(lo[enter]) && std::isfinite(hi[enter])) relaxed_step = hi[enter] - lo[enter];
      // Step length until basic j reaches the bound it is moving towards;
      // `upper` reports which bound that is.
      auto bound_for = [&](int j, double alpha, bool relaxed, double& t, bool& upper) -> bool {
        const double xj = x[j];
        const double tol = relaxed ? ftol : 0.0;
        if (alpha > 0.0) {
          if (xj < lo[j] - ftol) {
            t = (lo[j] - xj) / alpha;  // infeasible below, becomes feasible
            upper = false;
            return true;
          }
          if (xj > hi[j] + ftol) return false;  // moving away, phase-1 cost covers it
          if (!std::isfinite(hi[j])) return false;
          t = (hi[j] + tol - xj) / alpha;
          upper = true;
          return true;
        }
        if (xj > hi[j] + ftol) {
          t = (hi[j] - xj) / alpha;
          upper = true;
          return true;
        }
        if (xj < lo[j] - ftol) return false;
        if (!std::isfinite(lo[j])) return false;
        t = (lo[j] - tol - xj) / alpha;
        upper = false;
        return true;
      };
      for (int p = 0; p < m; ++p) {
        const double alpha = -enter_dir * w[p];
        if (std::abs(alpha) < opt.pivot_tol) continue;
        double t;
        bool up;
        if (bound_for(head[p], alpha, true, t, up)) relaxed_step = std::min(relaxed_step, std::max(t, 0.0));
      }

      if (!std::isfinite(relaxed_step)) {
        if (phase1) return LpStatus::NumericalFailure;
        return LpStatus::Unbounded;
      }

      // Second pass: among rows blocking within the relaxed step pick the
      // largest pivot (Bland: the lowest variable index). A bound flip of the
      // entering variable wins when it fits.
      int leave = -1;  // basis position, or -1 for a bound flip of the entering variable
      double step = kInf;
      bool leave_upper = false;
      if (std::isfinite(lo[enter]) && std::isfinite(hi[enter]) &&
          hi[enter] - lo[enter] <= relaxed_step) {
        step = hi[enter] - lo[enter];
      } else {
        double best_alpha = 0.0;
        for (int p = 0; p < m; ++p) {
          const double alpha = -enter_dir * w[p];
          if (std::abs(alpha) < opt.pivot_tol) continue;
          double t;
          bool up = false;
          if (!bound_for(head[p], alpha, false, t, up)) continue;
          t = std::max(t, 0.0);
          if (t > relaxed_step) continue;
          const bool take = bland ? (leave < 0 || head[p] < head[leave]) : std::abs(alpha) > best_alpha;
          if (take) {
            leave = p;
            step = t;
            best_alpha = std::abs(alpha);
            leave_upper = up;
          }
        }
      }
      if (leave < 0 && !std::isfinite(step)) return LpStatus::NumericalFailure;

      // Update values.
      x[enter] += enter_dir * step;
      if (step != 0.0) {
        for (int p = 0; p < m; ++p) {
          if (w[p] != 0.0) x[head[p]] -= enter_dir * step * w[p];
        }
      }

      if (step <= 1e-12) {
        if (++degenerate > bland_trigger) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }

      if (leave < 0) {
        status[enter] = enter_dir > 0 ? Basis::kAtUpper : Basis::kAtLower;
        x[enter] = nonbasic_value(enter);
        ++iterations;
        continue;
      }

      const int out = head[leave];
      status[out] = leave_upper ? Basis::kAtUpper : Basis::kAtLower;
      x[out] = nonbasic_value(out);

      Eta eta;
      eta.pos = leave;
      eta.pivot = w[leave];
      for (int p = 0; p < m; ++p) {
        if (p != leave && w[p] != 0.0) eta.column.emplace_back(p, w[p]);
      }
      etas.push_back(std::move(eta));
      head[leave] = enter;
      status[enter] = Basis::kBasic;
      ++iterations;
    }
  }

  LPSolution extract() const {
    LPSolution sol;
    sol.status = last_status;
    sol.iterations = iterations;
    sol.primal.assign(x.begin(), x.begin() + n);
    double obj = offset;
    for (int j = 0; j < n; ++j) obj += cost[j] * x[j];
    sol.objective = obj;
    sol.row_duals.assign(m, 0.0);
    sol.upper_bound_duals.assign(n, 0.0);
    sol.lower_bound_duals.assign(n, 0.0);
    if (last_status != LpStatus::Optimal) return sol;

    std::vector<double> dual(m, 0.0);
    for (int p = 0; p < m; ++p) dual[p] = head[p] < n ? cost[head[p]] : 0.0;
    btran(dual);
    sol.row_duals = dual;
    for (int j = 0; j < n; ++j) {
      if (status[j] == Basis::kBasic) continue;
      const double dj = cost[j] - column_dot(j, dual);
      if (dj < 0.0 && std::isfinite(hi[j])) sol.upper_bound_duals[j] = -dj;
      if (dj > 0.0 && std::isfinite(lo[j])) sol.lower_bound_duals[j] = dj;
    }
    return sol;
  }
};

SimplexSolver::SimplexSolver(const MixedModel& model, SimplexOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->opt = options;
  impl_->init(model);
}

SimplexSolver::~SimplexSolver() = default;
SimplexSolver::SimplexSolver(SimplexSolver&&) noexcept = default;
SimplexSolver& SimplexSolver::operator=(SimplexSolver&&) noexcept = default;

LpStatus SimplexSolver::solve() {
  impl_->last_status = impl_->run();
  return impl_->last_status;
}

LPSolution SimplexSolver::solution() const { return impl_->extract(); }

int SimplexSolver::num_vars() const { return impl_->n; }
int SimplexSolver::num_rows() const { return impl_->m; }

double SimplexSolver::objective() const {
  double obj = impl_->offset;
  for (int j = 0; j < impl_->n; ++j) obj += impl_->cost[j] * impl_->x[j];
  return obj;
}

std::span<const double> SimplexSolver::values() const {
  return {impl_->x.data(), static_cast<std::size_t>(impl_->n)};
}

void SimplexSolver::set_bounds(int var, double lower, double upper) {
  auto& s = *impl_;
  if (var < 0 || var >= s.n) throw PreconditionError("set_bounds: variable out of range");
  s.lo[var] = lower;
  s.hi[var] = upper;
  if (s.status[var] != Basis::kBasic) {
    Basis::Status st = s.status[var];
    if (st == Basis::kAtLower && !std::isfinite(lower)) st = s.nonbasic_status(var);
    if (st == Basis::kAtUpper && !std::isfinite(upper)) st = s.nonbasic_status(var);
    if (st == Basis::kAtZero) st = s.nonbasic_status(var);
    s.status[var] = st;
    const double old = s.x[var];
    s.x[var] = s.nonbasic_value(var);
    if (old != s.x[var]) s.values_valid = false;
  }
}

double SimplexSolver::lower(int var) const { return impl_->lo.at(var); }
double SimplexSolver::upper(int var) const { return impl_->hi.at(var); }

int SimplexSolver::add_row(std::span<const std::pair<int, double>> coeffs, RowSense sense, double rhs) {
  std::vector<std::pair<int, double>> row(coeffs.begin(), coeffs.end());
  return impl_->append_row(row, sense, rhs);
}

Basis SimplexSolver::basis() const {
  Basis b;
  b.structural.assign(impl_->status.begin(), impl_->status.begin() + impl_->n);
  b.logical.assign(impl_->status.begin() + impl_->n, impl_->status.end());
  return b;
}

void SimplexSolver::set_basis(const Basis& basis) {
  auto& s = *impl_;
  if (static_cast<int>(basis.structural.size()) != s.n ||
      static_cast<int>(basis.logical.size()) > s.m) {
    s.slack_basis();
    return;
  }
  std::vector<Basis::Status> st(basis.structural);
  st.insert(st.end(), basis.logical.begin(), basis.logical.end());
  st.resize(s.total(), Basis::kBasic);
  if (st == s.status) return;  // keep the factorization
  std::vector<int> head;
  for (int j = 0; j < s.total(); ++j) {
    if (st[j] == Basis::kBasic) head.push_back(j);
  }
  if (static_cast<int>(head.size()) != s.m) {
    s.slack_basis();
    return;
  }
  s.status = std::move(st);
  s.head = std::move(head);
  for (int j = 0; j < s.total(); ++j) {
    if (s.status[j] == Basis::kBasic) continue;
    if (s.status[j] == Basis::kAtLower && !std::isfinite(s.lo[j])) s.status[j] = s.nonbasic_status(j);
    if (s.status[j] == Basis::kAtUpper && !std::isfinite(s.hi[j])) s.status[j] = s.nonbasic_status(j);
    s.x[j] = s.nonbasic_value(j);
  }
  s.factor_valid = false;
  s.values_valid = false;
}

long SimplexSolver::total_iterations() const { return impl_->iterations; }

LPSolution solve_lp(const MixedModel& model, SimplexOptions options) {
  SimplexSolver solver(model, options);
  solver.solve();
  return solver.solution();
}

RelaxedSubproblem solve_relaxed_subproblem(const Scenario& scenario, std::span<const double> x) {
  if (static_cast<int>(x.size()) != scenario.T.cols()) {
    throw PreconditionError("solve_relaxed_subproblem: x has wrong length");
  }
  const MixedModel model = build_scenario_model(scenario, x, /*relax=*/true);
  const LPSolution sol = solve_lp(model);
  if (sol.status == LpStatus::Infeasible) {
    throw RecourseError("relaxed second-stage problem infeasible: relatively complete recourse violated", -1);
  }
  if (!sol.optimal()) {
    throw NumericalError(std::string("relaxed second-stage solve failed: ") + to_string(sol.status));
  }
  RelaxedSubproblem out;
  out.value = sol.objective;
  out.phi = sol.row_duals;
  out.psi = sol.upper_bound_duals;
  out.y = sol.primal;
  return out;
}

}  // namespace mlb
