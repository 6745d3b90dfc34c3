#include "mlb/lshaped.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include "json.hpp"
#include "mlb/error.hpp"

namespace mlb {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Master (M): variables [x, z, theta], first-stage rows, theta >= L.
MixedModel build_master(const TwoStageProblem& problem, double L) {
  MixedModel m;
  for (int j = 0; j < problem.n_x; ++j) m.add_variable(problem.c[j], VarDomain::binary());
  for (int j = 0; j < problem.num_z(); ++j) m.add_variable(problem.d[j], problem.z_domain[j]);
  m.add_variable(1.0, VarDomain::continuous(L, kInf));
  std::vector<std::vector<std::pair<int, double>>> rows(problem.num_first_stage_rows());
  for (const auto& e : problem.A.entries()) rows[e.row].emplace_back(e.col, e.value);
  for (const auto& e : problem.C.entries()) rows[e.row].emplace_back(problem.n_x + e.col, e.value);
  for (int r = 0; r < problem.num_first_stage_rows(); ++r) {
    m.add_row(rows[r], RowSense::LessEqual, problem.b[r]);
  }
  return m;
}

void validate_config(const SolveConfig& config) {
  auto in_range = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!in_range(config.mu) || !in_range(config.nu)) throw PreconditionError("mu and nu must lie in (0, 1]");
  if (config.mode == SolveMode::ML && config.predictor == nullptr) {
    throw PreconditionError("ML mode needs a predictor");
  }
  double prev_mu = config.mu, prev_nu = config.nu;
  for (const auto& [mu, nu] : config.retry_schedule) {
    if (!in_range(mu) || !in_range(nu)) throw PreconditionError("retry schedule values must lie in (0, 1]");
    if (mu >= prev_mu || nu >= prev_nu) throw PreconditionError("retry schedule must decrease strictly");
    prev_mu = mu;
    prev_nu = nu;
  }
}

// The callback of one attempt at fixed (mu, nu).
class Engine {
 public:
  Engine(const TwoStageProblem& problem, const SolveConfig& config, double L, double mu, double nu,
         SolveResult& stats, std::map<std::vector<double>, double>& q_cache)
      : problem_(problem),
        config_(config),
        L_(L),
        mu_(mu),
        nu_(nu),
        theta_(problem.n_x + problem.num_z()),
        deterministic_(problem.deterministic_h_and_T()),
        stats_(stats),
        q_cache_(q_cache) {}

  void seed_upper_bound(double ub) { ub_ = ub; }

  CallbackDecision operator()(const Candidate& cand) {
    ++stats_.n_callbacks;
    const std::vector<double> x(cand.values.begin(), cand.values.begin() + problem_.n_x);
    const double theta = cand.values[theta_];
    const double tol = config_.tolerance * std::max(1.0, std::abs(theta));
    const bool ml = config_.mode == SolveMode::ML;

    if (config_.is_alt) {
      const Reductions r = relaxed(x);
      if (nu_ * r.q_tilde > theta + tol) {
        const bool reduced = deterministic_ && !r.e_phi.empty();
        const Cut cut = make_continuous_cut(problem_, r, reduced,
                                            ml ? CutKind::ContinuousHeuristic : CutKind::ContinuousExact);
        ++stats_.n_continuous_cuts;
        if (config_.record_cuts) stats_.cuts.push_back(cut);
        return CallbackDecision::reject({cut.as_row(theta_)});
      }
    }

    const double q = integral(x);
    if (mu_ * q <= theta + tol) {
      if (cand.objective < ub_) {
        ub_ = cand.objective;
        stats_.incumbent_trace.push_back(x);
      }
      return CallbackDecision::accept_candidate();
    }
    // A prediction below L cannot produce a valid orientation; L is the most
    // it can claim.
    const Cut cut = make_integer_cut(x, std::max(q, L_), L_, ml ? CutKind::IntegerHeuristic : CutKind::IntegerExact);
    ++stats_.n_integer_cuts;
    if (config_.record_cuts) stats_.cuts.push_back(cut);
    return CallbackDecision::reject({cut.as_row(theta_)});
  }

 private:
  Reductions relaxed(const std::vector<double>& x) {
    const auto start = Clock::now();
    Reductions r;
    if (config_.mode == SolveMode::ML) {
      r = config_.predictor->predict_relaxed(x);
      ++stats_.n_predictions;
      stats_.times.prediction += seconds_since(start);
    } else {
      r = evaluate_Q_relaxed(problem_, x);
      stats_.n_relaxed_subproblem_solves += problem_.num_scenarios();
      stats_.times.relaxed_subproblems += seconds_since(start);
    }
    return r;
  }

  double integral(const std::vector<double>& x) {
    const auto start = Clock::now();
    if (config_.mode == SolveMode::ML) {
      const double q = config_.predictor->predict_Q(x);
      ++stats_.n_predictions;
      stats_.times.prediction += seconds_since(start);
      return q;
    }
    if (auto it = q_cache_.find(x); it != q_cache_.end()) return it->second;
    const double q = evaluate_Q(problem_, x);
    stats_.n_exact_subproblem_solves += problem_.num_scenarios();
    stats_.times.exact_subproblems += seconds_since(start);
    q_cache_.emplace(x, q);
    return q;
  }

  const TwoStageProblem& problem_;
  const SolveConfig& config_;
  double L_;
  double mu_;
  double nu_;
  int theta_;
  bool deterministic_;
  double ub_ = kInf;
  SolveResult& stats_;
  std::map<std::vector<double>, double>& q_cache_;
};

SolveResult run(const TwoStageProblem& problem, const SolveConfig& config, const ExactRestart* restart) {
  problem.validate();
  validate_config(config);
  const auto start = Clock::now();
  SolveResult result;

  const auto lb_start = Clock::now();
  const double L = config.lower_bound ? *config.lower_bound : compute_lower_bound_L(problem);
  result.lower_bound_L = L;
  result.times.lower_bound = seconds_since(lb_start);

  MixedModel master = build_master(problem, L);
  const int theta = problem.n_x + problem.num_z();
  std::map<std::vector<double>, double> q_cache;

  std::optional<WarmStart> warm;
  if (restart != nullptr) {
    if (static_cast<int>(restart->x.size()) != problem.n_x ||
        static_cast<int>(restart->z.size()) != problem.num_z()) {
      throw PreconditionError("warm start has wrong dimensions");
    }
    const auto t = Clock::now();
    const double q = evaluate_Q(problem, restart->x);
    result.times.final_evaluation += seconds_since(t);
    q_cache.emplace(restart->x, q);
    WarmStart ws;
    ws.values = restart->x;
    ws.values.insert(ws.values.end(), restart->z.begin(), restart->z.end());
    ws.values.push_back(std::max(q, L));
    ws.objective = problem.first_stage_cost(restart->x, restart->z) + ws.values.back();
    warm = ws;
    if (restart->objective_floor) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < problem.n_x; ++j) row.emplace_back(j, problem.c[j]);
      for (int j = 0; j < problem.num_z(); ++j) row.emplace_back(problem.n_x + j, problem.d[j]);
      row.emplace_back(theta, 1.0);
      master.add_row(row, RowSense::GreaterEqual, *restart->objective_floor);
    }
  }

  std::vector<std::pair<double, double>> schedule{{config.mu, config.nu}};
  if (config.mode == SolveMode::ML) {
    const auto extra = config.retry_schedule.empty() ? default_retry_schedule(config.mu, config.nu)
                                                     : config.retry_schedule;
    schedule.insert(schedule.end(), extra.begin(), extra.end());
  }

  MIPSolution mip;
  bool found = false;
  double tree_seconds = 0.0;
  for (std::size_t k = 0; k < schedule.size() && !found; ++k) {
    const auto [mu, nu] = schedule[k];
    result.schedule_trace.emplace_back(mu, nu);
    result.retries = static_cast<int>(k);
    result.final_mu = mu;
    result.final_nu = nu;
    result.incumbent_trace.clear();
    Engine engine(problem, config, L, mu, nu, result, q_cache);
    if (warm) engine.seed_upper_bound(warm->objective);
    IntegralCallback cb = [&engine](const Candidate& c) { return engine(c); };
    const auto t = Clock::now();
    mip = warm ? solve_with_callback(master, cb, *warm, config.limits)
               : solve_with_callback(master, cb, config.limits);
    tree_seconds += seconds_since(t);
    result.node_count += mip.node_count;
    result.n_non_separating += mip.callback_stats.non_separating;
    found = mip.has_solution();
    if (mip.status == MipStatus::Unbounded) throw PreconditionError("master problem is unbounded");
  }
  if (!found) {
    throw NoSolutionError("no incumbent after " + std::to_string(schedule.size()) + " attempt(s)",
                          result.schedule_trace);
  }

  result.status = mip.status;
  result.x.assign(mip.primal.begin(), mip.primal.begin() + problem.n_x);
  for (auto& v : result.x) v = std::round(v);
  result.z.assign(mip.primal.begin() + problem.n_x, mip.primal.begin() + theta);
  for (int j = 0; j < problem.num_z(); ++j) {
    if (problem.z_domain[j].integer) result.z[j] = std::round(result.z[j]);
  }
  result.master_objective = mip.objective;

  const auto fin = Clock::now();
  double q;
  if (auto it = q_cache.find(result.x); it != q_cache.end()) {
    q = it->second;
  } else {
    q = evaluate_Q(problem, result.x);
  }
  result.objective = problem.first_stage_cost(result.x, result.z) + q;
  result.times.final_evaluation += seconds_since(fin);

  const PhaseTimes& t = result.times;
  result.times.master =
      std::max(0.0, tree_seconds - t.exact_subproblems - t.relaxed_subproblems - t.prediction);
  result.times.total = seconds_since(start);
  return result;
}

}  // namespace

std::vector<std::pair<double, double>> default_retry_schedule(double mu, double nu) {
  constexpr double kFactor = 0.95;
  constexpr double kFloor = 0.7;
  std::vector<std::pair<double, double>> out;
  while (mu > kFloor && nu > kFloor) {
    mu = std::max(kFloor, mu * kFactor);
    nu = std::max(kFloor, nu * kFactor);
    out.emplace_back(mu, nu);
  }
  return out;
}

SolveResult solve(const TwoStageProblem& problem, const SolveConfig& config) {
  return run(problem, config, nullptr);
}

SolveResult solve_warm(const TwoStageProblem& problem, const SolveConfig& config, const ExactRestart& restart) {
  return run(problem, config, &restart);
}

SolveResult two_phase_solve(const TwoStageProblem& problem, const SolveConfig& config, bool use_prob_bound,
                            const std::vector<double>& history) {
  if (use_prob_bound && history.empty()) throw PreconditionError("probabilistic bound needs a history");
  const auto start = Clock::now();
  const SolveResult phase1 = solve(problem, config);
  const double phase1_seconds = seconds_since(start);

  SolveConfig exact = config;
  exact.mode = SolveMode::Exact;
  exact.mu = 1.0;
  exact.nu = 1.0;
  exact.predictor = nullptr;
  exact.retry_schedule.clear();
  exact.lower_bound = phase1.lower_bound_L;
  ExactRestart restart{phase1.x, phase1.z, std::nullopt};
  std::optional<double> bound;
  if (use_prob_bound) {
    bound = chebyshev_lower_bound(history, 0.10);
    restart.objective_floor = bound;
  }
  const auto t2 = Clock::now();
  SolveResult result = solve_warm(problem, exact, restart);
  result.phase1_seconds = phase1_seconds;
  result.phase2_seconds = seconds_since(t2);
  result.probabilistic_bound = bound;
  result.n_predictions += phase1.n_predictions;
  result.times.total = seconds_since(start);
  return result;
}

double chebyshev_lower_bound(const std::vector<double>& samples, double alpha) {
  if (samples.size() < 2) throw PreconditionError("Chebyshev bound needs at least two samples");
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie in (0, 1)");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) return mean;
  return mean - std::sqrt((1.0 - alpha) / alpha) * sd;
}

double apply_shift(double prediction, double shift) {
  if (!(shift > 0.0 && shift <= 1.0)) throw PreconditionError("shift must lie in (0, 1]");
  return shift * prediction;
}

std::string to_json(const SolveResult& r) {
  nlohmann::ordered_json j;
  j["objective"] = r.objective;
  j["master_objective"] = r.master_objective;
  j["lower_bound_L"] = r.lower_bound_L;
  j["gap_vs_oracle"] = r.gap_vs_oracle ? nlohmann::ordered_json(*r.gap_vs_oracle) : nlohmann::ordered_json();
  j["status"] = to_string(r.status);
  j["x"] = r.x;
  j["z"] = r.z;
  j["node_count"] = r.node_count;
  j["n_callbacks"] = r.n_callbacks;
  j["n_integer_cuts"] = r.n_integer_cuts;
  j["n_continuous_cuts"] = r.n_continuous_cuts;
  j["n_non_separating"] = r.n_non_separating;
  j["n_exact_subproblem_solves"] = r.n_exact_subproblem_solves;
  j["n_relaxed_subproblem_solves"] = r.n_relaxed_subproblem_solves;
  j["n_predictions"] = r.n_predictions;
  j["retries"] = r.retries;
  j["final_mu"] = r.final_mu;
  j["final_nu"] = r.final_nu;
  j["schedule_trace"] = r.schedule_trace;
  auto& t = j["times"];
  t["total"] = r.times.total;
  t["lower_bound"] = r.times.lower_bound;
  t["master"] = r.times.master;
  t["exact_subproblems"] = r.times.exact_subproblems;
  t["relaxed_subproblems"] = r.times.relaxed_subproblems;
  t["prediction"] = r.times.prediction;
  t["final_evaluation"] = r.times.final_evaluation;
  if (r.phase1_seconds) t["phase1"] = *r.phase1_seconds;
  if (r.phase2_seconds) t["phase2"] = *r.phase2_seconds;
  if (r.probabilistic_bound) j["probabilistic_bound"] = *r.probabilistic_bound;
  return j.dump();
}

}  // namespace mlb
