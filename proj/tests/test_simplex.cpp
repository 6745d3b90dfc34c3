#include <random>

#include "doctest.h"
#include "mlb/error.hpp"
#include "mlb/simplex.hpp"
#include "oracles.hpp"

using namespace mlb;

namespace {

MixedModel single_var(double cost, double row_coef, RowSense sense, double rhs, double lo, double hi) {
  MixedModel m;
  m.add_variable(cost, VarDomain::continuous(lo, hi));
  const std::pair<int, double> coeff{0, row_coef};
  m.add_row(std::span(&coeff, 1), sense, rhs);
  return m;
}

MixedModel random_lp(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  std::uniform_real_distribution<double> ub(1.0, 5.0);
  std::uniform_real_distribution<double> slack(0.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MixedModel model;
  std::vector<double> x0(n);
  for (int j = 0; j < n; ++j) {
    const double u = ub(rng);
    model.add_variable(coef(rng), VarDomain::continuous(0.0, u));
    x0[j] = u * unit(rng);
  }
  for (int r = 0; r < m; ++r) {
    std::vector<std::pair<int, double>> row;
    double act = 0.0;
    for (int j = 0; j < n; ++j) {
      const double a = coef(rng);
      row.emplace_back(j, a);
      act += a * x0[j];
    }
    const bool ge = unit(rng) < 0.5;
    model.add_row(row, ge ? RowSense::GreaterEqual : RowSense::LessEqual, ge ? act - slack(rng) : act + slack(rng));
  }
  return model;
}

void check_optimality_certificate(const MixedModel& model, const LPSolution& sol) {
  REQUIRE(sol.optimal());
  CHECK(model.max_violation(sol.primal) <= 1e-7);
  const double dual = sol.dual_objective(model);
  CHECK(std::abs(dual - sol.objective) <= 1e-6 * std::max(1.0, std::abs(sol.objective)));
  // dual feasibility: reduced costs consistent with the multipliers
  const auto ya = model.matrix.left_multiply(sol.row_duals);
  for (int j = 0; j < model.num_vars(); ++j) {
    const double dj = model.objective[j] - ya[j];
    CHECK(std::abs(dj - sol.lower_bound_duals[j] + sol.upper_bound_duals[j]) <= 1e-7);
    CHECK(sol.upper_bound_duals[j] >= 0.0);
    CHECK(sol.lower_bound_duals[j] >= 0.0);
  }
  for (int r = 0; r < model.num_rows(); ++r) {
    if (model.senses[r] == RowSense::GreaterEqual) CHECK(sol.row_duals[r] >= -1e-9);
    if (model.senses[r] == RowSense::LessEqual) CHECK(sol.row_duals[r] <= 1e-9);
  }
}

}  // namespace

TEST_CASE("binding row: min x s.t. x >= 1") {
  const auto model = single_var(1.0, 1.0, RowSense::GreaterEqual, 1.0, 0.0, 10.0);
  const auto sol = solve_lp(model);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(1.0));
  CHECK(sol.row_duals[0] == doctest::Approx(1.0));
  CHECK(sol.upper_bound_duals[0] == doctest::Approx(0.0));
}

TEST_CASE("binding upper bound: min -x s.t. x >= 0, x <= 1") {
  const auto model = single_var(-1.0, 1.0, RowSense::GreaterEqual, 0.0, 0.0, 1.0);
  const auto sol = solve_lp(model);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(-1.0));
  CHECK(sol.primal[0] == doctest::Approx(1.0));
  CHECK(sol.upper_bound_duals[0] == doctest::Approx(1.0));
  CHECK(sol.row_duals[0] == doctest::Approx(0.0));
}

TEST_CASE("infeasible and unbounded models are reported") {
  SUBCASE("infeasible") {
    const auto model = single_var(1.0, 1.0, RowSense::GreaterEqual, 2.0, 0.0, 1.0);
    CHECK(solve_lp(model).status == LpStatus::Infeasible);
  }
  SUBCASE("unbounded") {
    const auto model = single_var(-1.0, 1.0, RowSense::GreaterEqual, 0.0, 0.0, kInf);
    CHECK(solve_lp(model).status == LpStatus::Unbounded);
  }
  SUBCASE("equality rows and free variables") {
    MixedModel m;
    m.add_variable(1.0, VarDomain::continuous(-kInf, kInf));
    m.add_variable(2.0, VarDomain::continuous(0.0, kInf));
    const std::pair<int, double> row[] = {{0, 1.0}, {1, 1.0}};
    m.add_row(row, RowSense::Equal, 3.0);
    const std::pair<int, double> row2[] = {{0, 1.0}};
    m.add_row(row2, RowSense::GreaterEqual, -1.0);
    const auto sol = solve_lp(m);
    REQUIRE(sol.optimal());
    CHECK(sol.primal[0] == doctest::Approx(3.0));
    CHECK(sol.objective == doctest::Approx(3.0));
    check_optimality_certificate(m, sol);
  }
}

TEST_CASE("random small LPs agree with vertex enumeration") {
  std::mt19937_64 rng(20240611);
  int unique_dual_cases = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto model = random_lp(rng, 6, 4);
    const auto expected = oracle::enumerate_vertices(model);
    const auto sol = solve_lp(model);
    REQUIRE(expected.feasible);
    REQUIRE(sol.optimal());
    CHECK(sol.objective == doctest::Approx(expected.objective).epsilon(1e-9).scale(1.0));
    CHECK(std::abs(sol.objective - expected.objective) <= 1e-7);
    check_optimality_certificate(model, sol);
    if (expected.unique_duals) {
      ++unique_dual_cases;
      for (int r = 0; r < model.num_rows(); ++r) CHECK(std::abs(sol.row_duals[r] - expected.row_duals[r]) <= 1e-7);
      for (int j = 0; j < model.num_vars(); ++j) {
        CHECK(std::abs(sol.upper_bound_duals[j] - expected.upper_duals[j]) <= 1e-7);
      }
    }
  }
  CHECK(unique_dual_cases > 150);
}

TEST_CASE("larger sparse LP satisfies the optimality certificate") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 400, m = 250;
  MixedModel model;
  std::vector<double> x0(n);
  for (int j = 0; j < n; ++j) {
    model.add_variable(coef(rng), VarDomain::continuous(0.0, 1.0 + 3.0 * unit(rng)));
    x0[j] = unit(rng);
  }
  for (int r = 0; r < m; ++r) {
    std::vector<std::pair<int, double>> row;
    double act = 0.0;
    for (int k = 0; k < 6; ++k) {
      const int j = static_cast<int>(unit(rng) * n);
      const double a = coef(rng);
      row.emplace_back(j, a);
      act += a * x0[j];
    }
    model.add_row(row, RowSense::GreaterEqual, act - unit(rng));
  }
  const auto sol = solve_lp(model);
  check_optimality_certificate(model, sol);
}

TEST_CASE("re-solving is bitwise deterministic") {
  std::mt19937_64 rng(99);
  const auto model = random_lp(rng, 12, 8);
  const auto a = solve_lp(model);
  const auto b = solve_lp(model);
  CHECK(a.primal == b.primal);
  CHECK(a.row_duals == b.row_duals);
}

TEST_CASE("warm start after bound change and appended row") {
  std::mt19937_64 rng(5);
  const auto model = random_lp(rng, 8, 5);
  SimplexSolver solver(model);
  REQUIRE(solver.solve() == LpStatus::Optimal);
  const double root = solver.objective();

  MixedModel changed = model;
  changed.domains[2].upper = 0.5 * changed.domains[2].upper;
  solver.set_bounds(2, changed.domains[2].lower, changed.domains[2].upper);
  REQUIRE(solver.solve() == LpStatus::Optimal);
  CHECK(solver.objective() >= root - 1e-9);
  CHECK(solver.objective() == doctest::Approx(solve_lp(changed).objective));

  const std::pair<int, double> row[] = {{0, 1.0}, {1, 1.0}};
  solver.add_row(row, RowSense::LessEqual, 0.25);
  changed.add_row(row, RowSense::LessEqual, 0.25);
  REQUIRE(solver.solve() == LpStatus::Optimal);
  const auto fresh = solve_lp(changed);
  CHECK(solver.objective() == doctest::Approx(fresh.objective));
  check_optimality_certificate(changed, solver.solution());
}

TEST_CASE("degenerate LP terminates") {
  // Many redundant constraints through the same vertex.
  MixedModel m;
  for (int j = 0; j < 4; ++j) m.add_variable(-1.0, VarDomain::continuous(0.0, kInf));
  for (int r = 0; r < 12; ++r) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < 4; ++j) row.emplace_back(j, 1.0 + ((r + j) % 3));
    m.add_row(row, RowSense::LessEqual, 0.0);
  }
  const auto sol = solve_lp(m);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(0.0));
}

TEST_CASE("relaxed subproblem: zero objective") {
  Scenario sc;
  sc.q = {0.0, 0.0};
  sc.W = SparseMatrix::identity(2);
  sc.T = SparseMatrix(2, 1);
  sc.h = {0.3, 0.6};
  sc.y_domain = {VarDomain::binary(), VarDomain::binary()};
  const std::vector<double> x{1.0};
  const auto r = solve_relaxed_subproblem(sc, x);
  CHECK(r.value == doctest::Approx(0.0));
  for (double v : r.phi) CHECK(v == doctest::Approx(0.0));
  for (double v : r.psi) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("relaxed subproblem: diagonal system") {
  const int n = 4;
  Scenario sc;
  sc.q.assign(n, 1.0);
  sc.W = SparseMatrix::identity(n);
  sc.T = SparseMatrix(n, 2);
  for (int i = 0; i < n; ++i) sc.T.add(i, 0, 0.5);  // h - T x = 0.5 at x = (1, 0)
  sc.h.assign(n, 1.0);
  sc.y_domain.assign(n, VarDomain::binary());
  const std::vector<double> x{1.0, 0.0};
  const auto r = solve_relaxed_subproblem(sc, x);
  CHECK(r.value == doctest::Approx(0.5 * n));
  for (double v : r.y) CHECK(v == doctest::Approx(0.5));
  for (double v : r.phi) CHECK(v == doctest::Approx(1.0));
  for (double v : r.psi) CHECK(v == doctest::Approx(0.0));
  // value = phi (h - T x) - 1'psi
  double dual = 0.0;
  const auto rhs = scenario_rhs(sc, x);
  for (int i = 0; i < n; ++i) dual += r.phi[i] * rhs[i] - r.psi[i];
  CHECK(dual == doctest::Approx(r.value));
}

TEST_CASE("relaxed subproblem: infeasible recourse is an error") {
  Scenario sc;
  sc.q = {1.0};
  sc.W = SparseMatrix(1, 1);  // 0 y >= 1
  sc.T = SparseMatrix(1, 1);
  sc.h = {1.0};
  sc.y_domain = {VarDomain::binary()};
  const std::vector<double> x{0.0};
  CHECK_THROWS_AS(solve_relaxed_subproblem(sc, x), RecourseError);
  const std::vector<double> bad{0.0, 1.0};
  CHECK_THROWS_AS(solve_relaxed_subproblem(sc, bad), PreconditionError);
}
