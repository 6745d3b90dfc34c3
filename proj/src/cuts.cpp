#include <cmath>

#include "mlb/error.hpp"
#include "mlb/lshaped.hpp"
#include "mlb/simplex.hpp"

namespace mlb {

const char* to_string(CutKind kind) {
  switch (kind) {
    case CutKind::IntegerExact: return "integer-exact";
    case CutKind::IntegerHeuristic: return "integer-heuristic";
    case CutKind::ContinuousExact: return "continuous-exact";
    case CutKind::ContinuousHeuristic: return "continuous-heuristic";
  }
  return "unknown";
}

double Cut::bound(std::span<const double> x) const {
  if (x.size() != pi.size()) throw PreconditionError("cut evaluated at x of wrong length");
  double v = -pi0;
  for (std::size_t i = 0; i < pi.size(); ++i) v += pi[i] * x[i];
  return v;
}

LazyCut Cut::as_row(int theta_index) const {
  LazyCut row;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (pi[i] != 0.0) row.coeffs.emplace_back(static_cast<int>(i), pi[i]);
  }
  row.coeffs.emplace_back(theta_index, -1.0);
  row.sense = RowSense::LessEqual;
  row.rhs = pi0;
  row.kind = to_string(kind);
  return row;
}

double evaluate_scenario(const TwoStageProblem& problem, int scenario, std::span<const double> x) {
  const MixedModel model = build_scenario_model(problem.scenarios[scenario], x);
  const MIPSolution sol = solve_mip(model);
  if (sol.status == MipStatus::Infeasible) {
    throw RecourseError("second-stage problem of scenario " + std::to_string(scenario) +
                            " is infeasible: relatively complete recourse violated",
                        scenario);
  }
  if (sol.status != MipStatus::Optimal) {
    throw NumericalError("second-stage solve of scenario " + std::to_string(scenario) +
                         " ended with status " + to_string(sol.status));
  }
  return sol.objective;
}

double evaluate_Q(const TwoStageProblem& problem, std::span<const double> x) {
  if (static_cast<int>(x.size()) != problem.n_x) throw PreconditionError("evaluate_Q: x has wrong length");
  double q = 0.0;
  for (int s = 0; s < problem.num_scenarios(); ++s) {
    q += problem.probabilities[s] * evaluate_scenario(problem, s, x);
  }
  return q;
}

Reductions evaluate_Q_relaxed(const TwoStageProblem& problem, std::span<const double> x) {
  if (static_cast<int>(x.size()) != problem.n_x) {
    throw PreconditionError("evaluate_Q_relaxed: x has wrong length");
  }
  const bool deterministic = problem.deterministic_h_and_T();
  Reductions out;
  out.e_phi_T.assign(problem.n_x, 0.0);
  if (deterministic && problem.num_scenarios() > 0) out.e_phi.assign(problem.scenarios[0].num_rows(), 0.0);
  for (int s = 0; s < problem.num_scenarios(); ++s) {
    const Scenario& sc = problem.scenarios[s];
    const double p = problem.probabilities[s];
    RelaxedSubproblem r;
    try {
      r = solve_relaxed_subproblem(sc, x);
    } catch (const RecourseError&) {
      throw RecourseError("relaxed second-stage problem of scenario " + std::to_string(s) +
                              " is infeasible: relatively complete recourse violated",
                          s);
    }
    out.q_tilde += p * r.value;
    for (int i = 0; i < sc.num_rows(); ++i) out.e_phi_h += p * r.phi[i] * sc.h[i];
    const auto phi_T = sc.T.left_multiply(r.phi);
    for (int j = 0; j < problem.n_x; ++j) out.e_phi_T[j] += p * phi_T[j];
    // u' psi; with the unit bounds of binary y this is 1' psi.
    for (int j = 0; j < sc.num_y(); ++j) {
      if (r.psi[j] != 0.0) out.e_one_psi += p * r.psi[j] * sc.y_domain[j].upper;
    }
    if (deterministic) {
      for (int i = 0; i < sc.num_rows(); ++i) out.e_phi[i] += p * r.phi[i];
    }
  }
  return out;
}

Cut make_integer_cut(std::span<const double> x_star, double q_value, double L, CutKind kind) {
  if (q_value < L - 1e-9) {
    throw PreconditionError("integer cut needs Q >= L (Q = " + std::to_string(q_value) +
                            ", L = " + std::to_string(L) + ")");
  }
  const double slope = std::max(q_value - L, 0.0);
  Cut cut;
  cut.kind = kind;
  cut.origin_x.assign(x_star.begin(), x_star.end());
  cut.pi.resize(x_star.size());
  int in_support = 0;
  for (std::size_t i = 0; i < x_star.size(); ++i) {
    if (x_star[i] > 0.5) {
      cut.pi[i] = slope;
      ++in_support;
    } else {
      cut.pi[i] = -slope;
    }
  }
  // theta >= slope (sum_S x - sum_notS x - |S|) + Q
  cut.pi0 = slope * in_support - q_value;
  return cut;
}

Cut make_continuous_cut(const TwoStageProblem& problem, const Reductions& reductions,
                        bool deterministic_hT, CutKind kind) {
  Cut cut;
  cut.kind = kind;
  if (!deterministic_hT) {
    if (static_cast<int>(reductions.e_phi_T.size()) != problem.n_x) {
      throw StructuralError("E[phi T] has wrong length");
    }
    // theta >= E[phi h] - E[phi T] x - E[1'psi]
    cut.pi.resize(problem.n_x);
    for (int j = 0; j < problem.n_x; ++j) cut.pi[j] = -reductions.e_phi_T[j];
    cut.pi0 = reductions.e_one_psi - reductions.e_phi_h;
    return cut;
  }
  if (problem.num_scenarios() == 0) throw StructuralError("problem has no scenarios");
  const Scenario& sc = problem.scenarios[0];
  if (static_cast<int>(reductions.e_phi.size()) != sc.num_rows()) {
    throw StructuralError("E[phi] has wrong length");
  }
  // theta >= E[phi] (h - T x) - E[1'psi]
  const auto phi_T = sc.T.left_multiply(reductions.e_phi);
  double phi_h = 0.0;
  for (int i = 0; i < sc.num_rows(); ++i) phi_h += reductions.e_phi[i] * sc.h[i];
  cut.pi.resize(problem.n_x);
  for (int j = 0; j < problem.n_x; ++j) cut.pi[j] = -phi_T[j];
  cut.pi0 = reductions.e_one_psi - phi_h;
  return cut;
}

double compute_lower_bound_L(const TwoStageProblem& problem) {
  double L = 0.0;
  for (int s = 0; s < problem.num_scenarios(); ++s) {
    const Scenario& sc = problem.scenarios[s];
    MixedModel m;
    for (int j = 0; j < problem.n_x; ++j) m.add_variable(0.0, VarDomain::continuous(0.0, 1.0));
    for (int j = 0; j < sc.num_y(); ++j) {
      m.add_variable(sc.q[j], VarDomain::continuous(sc.y_domain[j].lower, sc.y_domain[j].upper));
    }
    // W y + T x >= h
    std::vector<std::vector<std::pair<int, double>>> rows(sc.num_rows());
    for (const auto& e : sc.T.entries()) rows[e.row].emplace_back(e.col, e.value);
    for (const auto& e : sc.W.entries()) rows[e.row].emplace_back(problem.n_x + e.col, e.value);
    for (int i = 0; i < sc.num_rows(); ++i) m.add_row(rows[i], RowSense::GreaterEqual, sc.h[i]);
    const LPSolution sol = solve_lp(m);
    if (sol.status == LpStatus::Unbounded) {
      throw PreconditionError("lower bound L is unbounded in scenario " + std::to_string(s));
    }
    if (sol.status == LpStatus::Infeasible) {
      throw RecourseError("scenario " + std::to_string(s) + " is infeasible for every x", s);
    }
    if (!sol.optimal()) throw NumericalError("lower bound LP failed in scenario " + std::to_string(s));
    L += problem.probabilities[s] * sol.objective;
  }
  return L;
}

}  // namespace mlb
