#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "mlb/branch_and_bound.hpp"
#include "mlb/error.hpp"
#include "mlb/families.hpp"
#include "mlb/lshaped.hpp"
#include "mlb/simplex.hpp"
#include "oracles.hpp"

using namespace mlb;

namespace {

SSLPParams tiny_sslp() {
  SSLPParams p;
  p.a = 2;
  p.b = 4;
  p.c = 3;
  return p;
}

SMKPParams tiny_smkp() {
  SMKPParams p;
  p.n1 = 4;
  p.m1 = 2;
  p.n2 = 4;
  p.m = 2;
  p.c = 2;
  return p;
}

// Q~ of one scenario from the vertex-enumeration oracle.
double relaxed_oracle(const Scenario& s, const std::vector<double>& x) {
  const auto v = oracle::enumerate_vertices(build_scenario_model(s, x, true));
  REQUIRE(v.feasible);
  return v.objective;
}

double relaxed_expected(const TwoStageProblem& p, const std::vector<double>& x) {
  double total = 0.0;
  for (int s = 0; s < p.num_scenarios(); ++s) total += p.probabilities[s] * relaxed_oracle(p.scenarios[s], x);
  return total;
}

}  // namespace

TEST_CASE("evaluate_Q") {
  std::mt19937_64 rng(1);
  SUBCASE("zero costs give zero") {
    auto p = fixture::random_problem(rng, 3, 2, 3, 2);
    for (auto& s : p.scenarios) std::fill(s.q.begin(), s.q.end(), 0.0);
    CHECK(evaluate_Q(p, std::vector<double>{1, 0, 1}) == 0.0);
  }
  SUBCASE("single scenario equals its MIP optimum") {
    const auto p = fixture::random_problem(rng, 3, 1, 4, 2);
    const std::vector<double> x{0, 1, 1};
    const auto mip = solve_mip(build_scenario_model(p.scenarios[0], x));
    CHECK(evaluate_Q(p, x) == doctest::Approx(mip.objective).epsilon(1e-12));
  }
  SUBCASE("small SSLP with all servers open matches enumeration") {
    const auto p = gen_sslp_instance(tiny_sslp(), 3);
    const std::vector<double> x{1, 1};
    const auto expected = oracle::expected_value(p, x);
    REQUIRE(expected);
    CHECK(std::abs(evaluate_Q(p, x) - *expected) <= 1e-6);
  }
  SUBCASE("random problems match enumeration at every x") {
    for (int trial = 0; trial < 5; ++trial) {
      const auto p = fixture::random_problem(rng, 3, 2, 4, 2);
      for (const auto& x : oracle::all_binary(3)) CHECK(std::abs(evaluate_Q(p, x) - *oracle::expected_value(p, x)) <= 1e-6);
    }
  }
}

TEST_CASE("evaluate_Q_relaxed") {
  SUBCASE("zero costs give all-zero reductions") {
    std::mt19937_64 rng(2);
    auto p = fixture::random_problem(rng, 3, 2, 3, 2, true);
    for (auto& s : p.scenarios) std::fill(s.q.begin(), s.q.end(), 0.0);
    const auto r = evaluate_Q_relaxed(p, std::vector<double>{1, 1, 0});
    CHECK(r.q_tilde == 0.0);
    CHECK(r.e_phi_h == 0.0);
    CHECK(r.e_one_psi == 0.0);
    for (double v : r.e_phi_T) CHECK(v == 0.0);
    for (double v : r.e_phi) CHECK(v == 0.0);
  }
  SUBCASE("diagonal W: phi = 1, psi = 0") {
    TwoStageProblem p;
    p.n_x = 2;
    p.c = {0, 0};
    p.A = SparseMatrix(0, 2);
    p.C = SparseMatrix(0, 0);
    Scenario s;
    s.q = {1, 1};
    s.W = SparseMatrix(2, 2);
    s.W.add(0, 0, 1);
    s.W.add(1, 1, 1);
    s.T = SparseMatrix(2, 2);
    s.T.add(0, 0, 0.5);
    s.T.add(1, 1, 0.5);
    s.h = {1, 1};
    s.y_domain = {VarDomain::binary(), VarDomain::binary()};
    p.scenarios = {s};
    p.probabilities = {1.0};
    const std::vector<double> x{1, 1};
    const auto r = evaluate_Q_relaxed(p, x);
    CHECK(r.q_tilde == doctest::Approx(1.0));
    CHECK(r.e_phi_h == doctest::Approx(2.0));
    CHECK(r.e_phi_T[0] == doctest::Approx(0.5));
    CHECK(r.e_phi_T[1] == doctest::Approx(0.5));
    CHECK(r.e_one_psi == doctest::Approx(0.0));
    REQUIRE(r.e_phi.size() == 2);
    CHECK(r.e_phi[0] == doctest::Approx(1.0));
  }
  SUBCASE("small SMKP matches the LP oracle and the duality identity") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto p = gen_smkp_instance(tiny_smkp(), seed);
      for (const auto& x : oracle::all_binary(4)) {
        const auto r = evaluate_Q_relaxed(p, x);
        CHECK(std::abs(r.q_tilde - relaxed_expected(p, x)) <= 1e-6 * std::max(1.0, std::abs(r.q_tilde)));
        double dual = r.e_phi_h - r.e_one_psi;
        for (int j = 0; j < p.n_x; ++j) dual -= r.e_phi_T[j] * x[j];
        CHECK(std::abs(r.q_tilde - dual) <= 1e-6 * std::max(1.0, std::abs(r.q_tilde)));
      }
    }
  }
}

TEST_CASE("integer cut") {
  const std::vector<double> xs{1, 0};
  const Cut cut = make_integer_cut(xs, 10.0, 4.0);
  CHECK(cut.bound(xs) == doctest::Approx(10.0));
  CHECK(cut.bound(std::vector<double>{0, 0}) == doctest::Approx(4.0));
  CHECK(cut.bound(std::vector<double>{1, 1}) == doctest::Approx(4.0));
  CHECK(cut.bound(std::vector<double>{0, 1}) == doctest::Approx(-2.0));
  // 6 (x1 - x2 - 1) + 10 <= theta
  CHECK(cut.pi[0] == doctest::Approx(6.0));
  CHECK(cut.pi[1] == doctest::Approx(-6.0));
  CHECK(cut.pi0 == doctest::Approx(-4.0));

  const Cut flat = make_integer_cut(xs, 4.0, 4.0);
  for (const auto& x : oracle::all_binary(2)) CHECK(flat.bound(x) == doctest::Approx(4.0));
  CHECK_THROWS_AS(make_integer_cut(xs, 3.0, 4.0), PreconditionError);
}

TEST_CASE("continuous cut") {
  std::mt19937_64 rng(3);
  SUBCASE("zero reductions give theta >= 0") {
    const auto p = fixture::random_problem(rng, 3, 2, 2, 2);
    Reductions r;
    r.e_phi_T.assign(3, 0.0);
    const Cut cut = make_continuous_cut(p, r, false);
    for (const auto& x : oracle::all_binary(3)) CHECK(cut.bound(x) == 0.0);
  }
  SUBCASE("tight at the generating point and valid everywhere") {
    for (bool shared : {false, true}) {
      for (int trial = 0; trial < 4; ++trial) {
        const auto p = fixture::random_problem(rng, 6, 3, 3, 2, shared);
        std::vector<double> q_tilde;
        for (const auto& x : oracle::all_binary(6)) q_tilde.push_back(relaxed_expected(p, x));
        for (int k = 0; k < 6; ++k) {
          const auto all = oracle::all_binary(6);
          const auto& xs = all[(k * 11) % all.size()];
          const auto r = evaluate_Q_relaxed(p, xs);
          const Cut cut = make_continuous_cut(p, r, false);
          CHECK(std::abs(cut.bound(xs) - r.q_tilde) <= 1e-6 * std::max(1.0, std::abs(r.q_tilde)));
          for (std::size_t i = 0; i < all.size(); ++i) CHECK(cut.bound(all[i]) <= q_tilde[i] + 1e-6);
          if (shared) {
            const Cut reduced = make_continuous_cut(p, r, true);
            for (const auto& x : all) CHECK(std::abs(reduced.bound(x) - cut.bound(x)) <= 1e-9 * std::max(1.0, std::abs(cut.bound(x))));
          }
        }
      }
    }
  }
}

TEST_CASE("lower bound L") {
  SUBCASE("nonnegative costs with unit boxes: 0 <= L <= Q(1)") {
    const auto p = gen_smkp_instance(tiny_smkp(), 4);
    const double L = compute_lower_bound_L(p);
    CHECK(L >= -1e-9);
    CHECK(L <= evaluate_Q(p, std::vector<double>(4, 1.0)) + 1e-9);
  }
  SUBCASE("vacuous coupling rows: L is the box minimum") {
    TwoStageProblem p;
    p.n_x = 1;
    p.c = {0};
    p.A = SparseMatrix(0, 1);
    p.C = SparseMatrix(0, 0);
    Scenario s;
    s.q = {3, -2, -5};
    s.W = SparseMatrix(1, 3);
    s.T = SparseMatrix(1, 1);
    s.h = {-1};
    s.y_domain.assign(3, VarDomain::binary());
    p.scenarios = {s};
    p.probabilities = {1.0};
    CHECK(compute_lower_bound_L(p) == doctest::Approx(-7.0));
  }
  SUBCASE("SSLP: L below Q at every x") {
    const auto p = gen_sslp_instance(SSLPParams{}, 7);
    const double L = compute_lower_bound_L(p);
    double best = kInf;
    for (const auto& x : oracle::all_binary(p.n_x)) best = std::min(best, evaluate_Q(p, x));
    CHECK(L <= best + 1e-9);
  }
}

TEST_CASE("exact methods reach the brute-force optimum") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 8; ++trial) {
    const auto p = fixture::random_problem(rng, 4, 3, 3, 2, trial % 2 == 0);
    const auto expected = oracle::two_stage_optimum(p);
    REQUIRE(expected);
    for (bool alt : {false, true}) {
      SolveConfig cfg;
      cfg.is_alt = alt;
      const auto r = solve(p, cfg);
      CHECK(r.status == MipStatus::Optimal);
      CHECK(std::abs(r.objective - expected->first) <= 1e-6);
    }
  }
}

TEST_CASE("Alt-L needs no more integral solves than Std-L on SSLP instances") {
  int fewer_or_equal = 0;
  const int n = 20;
  for (int k = 0; k < n; ++k) {
    const auto p = gen_sslp_instance(SSLPParams{}, 100 + k);
    SolveConfig std_cfg, alt_cfg;
    alt_cfg.is_alt = true;
    const auto s = solve(p, std_cfg);
    const auto a = solve(p, alt_cfg);
    CHECK(std::abs(s.objective - a.objective) <= 1e-6);
    if (a.n_exact_subproblem_solves <= s.n_exact_subproblem_solves) ++fewer_or_equal;
  }
  CHECK(fewer_or_equal == n);
}

TEST_CASE("recorded exact cuts are valid at every binary point") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const auto p = fixture::random_problem(rng, 5, 2, 3, 2);
    std::vector<double> q, q_tilde;
    const auto all = oracle::all_binary(5);
    for (const auto& x : all) {
      q.push_back(evaluate_Q(p, x));
      q_tilde.push_back(relaxed_expected(p, x));
    }
    for (bool alt : {false, true}) {
      SolveConfig cfg;
      cfg.is_alt = alt;
      cfg.record_cuts = true;
      const auto r = solve(p, cfg);
      CHECK(r.cuts.size() == static_cast<std::size_t>(r.n_integer_cuts + r.n_continuous_cuts));
      for (const auto& cut : r.cuts) {
        for (std::size_t i = 0; i < all.size(); ++i) {
          const double limit = cut.kind == CutKind::ContinuousExact ? q_tilde[i] : q[i];
          CHECK(cut.bound(all[i]) <= limit + 1e-6);
        }
      }
    }
  }
}

TEST_CASE("ML mode with exact predictions reproduces exact mode") {
  for (std::uint64_t seed : {11, 12, 13}) {
    const auto p = gen_sslp_instance(SSLPParams{}, seed);
    const OraclePredictor predictor(p);
    for (bool alt : {false, true}) {
      SolveConfig exact;
      exact.is_alt = alt;
      SolveConfig ml = exact;
      ml.mode = SolveMode::ML;
      ml.predictor = &predictor;
      const auto a = solve(p, exact);
      const auto b = solve(p, ml);
      CHECK(a.objective == b.objective);
      CHECK(a.incumbent_trace == b.incumbent_trace);
      CHECK(b.n_exact_subproblem_solves == 0);
      CHECK(b.n_predictions > 0);
    }
  }
}

TEST_CASE("shifted acceptance and retries") {
  const auto p = gen_smkp_instance(SMKPParams{}, 21);
  const OraclePredictor exact(p);
  const double optimum = solve(p, SolveConfig{}).objective;

  SUBCASE("mu = 0.98 accepts a 1.5% overestimate without retrying") {
    const ScaledPredictor over(exact, 1.015, 1.0);
    SolveConfig cfg;
    cfg.mode = SolveMode::ML;
    cfg.mu = 0.98;
    cfg.predictor = &over;
    const auto r = solve(p, cfg);
    CHECK(r.retries == 0);
    CHECK(r.objective >= optimum - 1e-6);
    CHECK(r.n_exact_subproblem_solves == 0);
  }
}

// Positive costs, h > 0 and T <= 0 keep h - T x > 0, so Q~(x) > 0 at every x
// and an inflated Q~ can never pass nu Q~ <= theta while nu * 1.1 > 1.
TEST_CASE("pessimistic relaxed predictions force retries") {
  std::mt19937_64 rng(22);
  auto p = fixture::random_problem(rng, 6, 3, 4, 2);
  for (auto& s : p.scenarios) {
    SparseMatrix T(s.T.rows(), s.T.cols());
    for (const auto& e : s.T.entries()) T.add(e.row, e.col, -std::abs(e.value));
    s.T = T;
    for (auto& q : s.q) q = std::abs(q) + 1.0;
  }
  p.validate();
  const OraclePredictor exact(p);
  const double optimum = solve(p, SolveConfig{}).objective;

  SUBCASE("a 10% overestimate is accepted once nu drops below 1/1.1") {
    const ScaledPredictor over(exact, 1.1, 1.1);
    SolveConfig cfg;
    cfg.is_alt = true;
    cfg.mode = SolveMode::ML;
    cfg.mu = 0.98;
    cfg.nu = 0.95;
    cfg.predictor = &over;
    const auto r = solve(p, cfg);
    CHECK(r.retries >= 1);
    CHECK(r.final_nu * 1.1 <= 1.0);
    CHECK(r.final_mu >= 0.7);
    CHECK(r.final_nu >= 0.7);
    CHECK(r.schedule_trace.size() == static_cast<std::size_t>(r.retries + 1));
    CHECK(r.objective >= optimum - 1e-6);
  }
  SUBCASE("an exhausted schedule raises with the trace") {
    const ScaledPredictor over(exact, 1.0, 2.0);
    SolveConfig cfg;
    cfg.is_alt = true;
    cfg.mode = SolveMode::ML;
    cfg.predictor = &over;
    cfg.retry_schedule = {{0.9, 0.9}};
    try {
      solve(p, cfg);
      FAIL("expected NoSolutionError");
    } catch (const NoSolutionError& e) {
      CHECK(e.trace().size() == 2);
    }
  }
}

TEST_CASE("configuration checks") {
  const auto p = gen_sslp_instance(tiny_sslp(), 1);
  SolveConfig cfg;
  cfg.mu = 0.0;
  CHECK_THROWS_AS(solve(p, cfg), PreconditionError);
  cfg.mu = 1.0;
  cfg.mode = SolveMode::ML;
  CHECK_THROWS_AS(solve(p, cfg), PreconditionError);
  const OraclePredictor exact(p);
  cfg.predictor = &exact;
  cfg.retry_schedule = {{0.9, 0.9}, {0.95, 0.8}};
  CHECK_THROWS_AS(solve(p, cfg), PreconditionError);

  const auto schedule = default_retry_schedule(0.98, 0.95);
  REQUIRE_FALSE(schedule.empty());
  CHECK(schedule.front().first == doctest::Approx(0.98 * 0.95));
  CHECK(schedule.back().second >= 0.7);
  for (std::size_t i = 1; i < schedule.size(); ++i) CHECK(schedule[i].first < schedule[i - 1].first);
}

TEST_CASE("two-phase solve") {
  const auto p = gen_sslp_instance(SSLPParams{}, 31);
  const OraclePredictor exact(p);
  const double optimum = solve(p, SolveConfig{}).objective;
  SolveConfig cfg;
  cfg.is_alt = true;
  cfg.mode = SolveMode::ML;
  cfg.predictor = &exact;
  const auto plain = two_phase_solve(p, cfg, false, {});
  CHECK(std::abs(plain.objective - optimum) <= 1e-6);
  CHECK(plain.phase1_seconds.has_value());
  CHECK(plain.phase2_seconds.has_value());

  const std::vector<double> history{optimum - 50, optimum - 40, optimum - 60};
  const auto bounded = two_phase_solve(p, cfg, true, history);
  CHECK(std::abs(bounded.objective - optimum) <= 1e-6);
  REQUIRE(bounded.probabilistic_bound.has_value());
  CHECK(*bounded.probabilistic_bound == doctest::Approx(chebyshev_lower_bound(history, 0.10)));
  CHECK_THROWS_AS(two_phase_solve(p, cfg, true, {}), PreconditionError);
}

TEST_CASE("Chebyshev bound and shifts") {
  CHECK(chebyshev_lower_bound({5, 5, 5}, 0.1) == 5.0);
  // mean 10, sample sd 2
  CHECK(chebyshev_lower_bound({8, 12}, 0.1) == doctest::Approx(10.0 - 3.0 * std::sqrt(8.0)));
  CHECK(chebyshev_lower_bound({7, 9, 11, 13}, 0.1) == doctest::Approx(10.0 - 3.0 * std::sqrt(20.0 / 3.0)));
  CHECK(chebyshev_lower_bound({8, 12}, 0.5) == doctest::Approx(10.0 - std::sqrt(8.0)));
  CHECK_THROWS_AS(chebyshev_lower_bound({1}, 0.1), PreconditionError);
  CHECK_THROWS_AS(chebyshev_lower_bound({1, 2}, 1.0), PreconditionError);

  CHECK(apply_shift(42.0, 1.0) == 42.0);
  CHECK(apply_shift(100.0, 0.98) == doctest::Approx(98.0));
  CHECK(apply_shift(-345.6, 1.0) == -345.6);
}
