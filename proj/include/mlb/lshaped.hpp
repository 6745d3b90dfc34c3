#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlb/branch_and_bound.hpp"
#include "mlb/model.hpp"

namespace mlb {

enum class CutKind { IntegerExact, IntegerHeuristic, ContinuousExact, ContinuousHeuristic };

const char* to_string(CutKind kind);

/// Optimality cut  pi x - theta <= pi0, i.e. theta >= pi x - pi0.
struct Cut {
  CutKind kind = CutKind::IntegerExact;
  std::vector<double> pi;
  double pi0 = 0.0;
  std::vector<double> origin_x;

  /// Lower bound on theta implied at x.
  double bound(std::span<const double> x) const;
  /// The cut as a master row over (x, z, theta) with theta at `theta_index`.
  LazyCut as_row(int theta_index) const;
};

/// Expected relaxed value and the dual reductions that build a continuous cut.
struct Reductions {
  double q_tilde = 0.0;
  double e_phi_h = 0.0;          ///< E[phi h]
  std::vector<double> e_phi_T;   ///< E[phi T], one entry per x
  double e_one_psi = 0.0;        ///< E[1' psi]
  std::vector<double> e_phi;     ///< E[phi]; filled when h and T are deterministic
};

/// Probability-weighted sum of exact integral subproblem optima.
double evaluate_Q(const TwoStageProblem& problem, std::span<const double> x);

/// Optimum of one scenario's integral subproblem.
double evaluate_scenario(const TwoStageProblem& problem, int scenario, std::span<const double> x);

Reductions evaluate_Q_relaxed(const TwoStageProblem& problem, std::span<const double> x);

/// Integer L-shaped cut tight at `x_star` with value `q_value`, relaxing to L
/// at every other binary point. Throws PreconditionError when q_value < L.
Cut make_integer_cut(std::span<const double> x_star, double q_value, double L,
                     CutKind kind = CutKind::IntegerExact);

/// Mono-cut from dual reductions. With `deterministic_hT`, built from E[phi]
/// and the shared h, T of `problem`; otherwise from E[phi h] and E[phi T].
Cut make_continuous_cut(const TwoStageProblem& problem, const Reductions& reductions,
                        bool deterministic_hT, CutKind kind = CutKind::ContinuousExact);

/// Per scenario, minimizes the relaxed subproblem jointly over y and
/// x in [0,1]^n; returns the probability-weighted sum of the minima.
double compute_lower_bound_L(const TwoStageProblem& problem);

/// Source of second-stage estimates for ML mode. Must be safe to call
/// concurrently.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual double predict_Q(std::span<const double> x) const = 0;
  virtual Reductions predict_relaxed(std::span<const double> x) const = 0;
};

/// Predictor that answers with exact values; ML mode then coincides with
/// exact mode when mu = nu = 1.
class OraclePredictor : public Predictor {
 public:
  explicit OraclePredictor(const TwoStageProblem& problem) : problem_(problem) {}
  double predict_Q(std::span<const double> x) const override { return evaluate_Q(problem_, x); }
  Reductions predict_relaxed(std::span<const double> x) const override {
    return evaluate_Q_relaxed(problem_, x);
  }

 private:
  const TwoStageProblem& problem_;
};

/// Scales an exact predictor's outputs, for robustness experiments.
class ScaledPredictor : public Predictor {
 public:
  ScaledPredictor(const Predictor& base, double q_factor, double q_tilde_factor)
      : base_(base), q_factor_(q_factor), q_tilde_factor_(q_tilde_factor) {}
  double predict_Q(std::span<const double> x) const override { return q_factor_ * base_.predict_Q(x); }
  /// Only q_tilde is scaled; the reductions pass through.
  Reductions predict_relaxed(std::span<const double> x) const override {
    Reductions r = base_.predict_relaxed(x);
    r.q_tilde *= q_tilde_factor_;
    return r;
  }

 private:
  const Predictor& base_;
  double q_factor_;
  double q_tilde_factor_;
};

enum class SolveMode { Exact, ML };

struct SolveConfig {
  bool is_alt = false;
  SolveMode mode = SolveMode::Exact;
  double mu = 1.0;
  double nu = 1.0;
  const Predictor* predictor = nullptr;
  /// Pairs tried after (mu, nu) fails to produce an incumbent. When empty in
  /// ML mode, both values shrink by 5% per retry down to 0.7.
  std::vector<std::pair<double, double>> retry_schedule;
  MipLimits limits;
  /// Precomputed L; computed when absent.
  std::optional<double> lower_bound;
  /// Acceptance slack: accept when mu Q <= theta + tolerance * max(1, |theta|).
  /// Must not be smaller than the tree's cut separation threshold (1e-6).
  double tolerance = 1e-6;
  /// Keep every generated cut in SolveResult::cuts.
  bool record_cuts = false;
};

/// Retry schedule used when SolveConfig::retry_schedule is empty.
std::vector<std::pair<double, double>> default_retry_schedule(double mu, double nu);

struct PhaseTimes {
  double total = 0.0;
  double lower_bound = 0.0;
  double master = 0.0;  ///< tree search minus time spent in the callback's work
  double exact_subproblems = 0.0;
  double relaxed_subproblems = 0.0;
  double prediction = 0.0;
  double final_evaluation = 0.0;
};

struct SolveResult {
  std::vector<double> x;
  std::vector<double> z;
  /// c x + d z + Q(x) with Q evaluated exactly.
  double objective = 0.0;
  /// Best value found by the tree (theta in place of Q).
  double master_objective = 0.0;
  double lower_bound_L = 0.0;
  std::optional<double> gap_vs_oracle;
  MipStatus status = MipStatus::Infeasible;
  long node_count = 0;
  long n_callbacks = 0;
  long n_integer_cuts = 0;
  long n_continuous_cuts = 0;
  long n_non_separating = 0;
  /// Integral scenario subproblems solved inside the tree search.
  long n_exact_subproblem_solves = 0;
  long n_relaxed_subproblem_solves = 0;
  long n_predictions = 0;
  int retries = 0;
  double final_mu = 1.0;
  double final_nu = 1.0;
  std::vector<std::pair<double, double>> schedule_trace;
  /// Accepted candidates in order.
  std::vector<std::vector<double>> incumbent_trace;
  /// Filled only with SolveConfig::record_cuts.
  std::vector<Cut> cuts;
  PhaseTimes times;
  /// Two-phase runs only.
  std::optional<double> phase1_seconds;
  std::optional<double> phase2_seconds;
  std::optional<double> probabilistic_bound;
};

/// Branch-and-Benders-cut with the heuristic callback. Throws NoSolutionError
/// when no (mu, nu) in the schedule yields an incumbent.
SolveResult solve(const TwoStageProblem& problem, const SolveConfig& config);

/// Extra inputs of a warm-started exact run.
struct ExactRestart {
  std::vector<double> x;
  std::vector<double> z;
  std::optional<double> objective_floor;  ///< enforce c x + d z + theta >= floor
};

/// Exact solve seeded with an incumbent.
SolveResult solve_warm(const TwoStageProblem& problem, const SolveConfig& config,
                       const ExactRestart& restart);

/// Phase 1: `config` in ML mode. Phase 2: the exact method with the same
/// cut strategy, warm-started from phase 1 and, if `use_prob_bound`, bounded
/// below by chebyshev_lower_bound(history, 0.10).
SolveResult two_phase_solve(const TwoStageProblem& problem, const SolveConfig& config,
                            bool use_prob_bound, const std::vector<double>& history);

/// mean - sqrt((1 - alpha) / alpha) * sd, with the sample standard deviation.
double chebyshev_lower_bound(const std::vector<double>& samples, double alpha);

/// Multiplicative down-shift of a prediction.
double apply_shift(double prediction, double shift);

std::string to_json(const SolveResult& result);

}  // namespace mlb
