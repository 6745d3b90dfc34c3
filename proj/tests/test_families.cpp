#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "mlb/branch_and_bound.hpp"
#include "mlb/error.hpp"
#include "mlb/families.hpp"
#include "mlb/lshaped.hpp"
#include "oracles.hpp"

using namespace mlb;

// A present client must be served, by the server or by overflow, so the
// server opens iff its cost is below the overflow charge for the demand.
TEST_CASE("one server, one client: open iff cheaper than overflow") {
  int opened = 0, closed = 0;
  for (std::uint64_t family = 1; family <= 16; ++family) {
    SSLPParams params;
    params.a = params.b = params.c = 1;
    params.presence = 1.0;
    params.cost_min = 1;
    params.cost_max = 60;
    params.overflow_penalty = 2.0;
    params.family_seed = family;
    const auto p = gen_sslp_instance(params, 1);
    const double revenue = -p.scenarios[0].q[0];
    const double demand = -p.scenarios[0].W.to_dense()[2][0];
    const double cost = p.c[0];
    const auto expected = oracle::two_stage_optimum(p);
    REQUIRE(expected);
    CHECK(expected->first == doctest::Approx(std::min(cost, 2.0 * demand) - revenue));
    const auto r = solve(p, SolveConfig{});
    CHECK(std::abs(r.objective - expected->first) <= 1e-6);
    if (cost != 2.0 * demand) {
      CHECK(r.x[0] == (cost < 2.0 * demand ? 1.0 : 0.0));
      ++(r.x[0] == 1.0 ? opened : closed);
    }
  }
  CHECK(opened > 0);
  CHECK(closed > 0);
}

TEST_CASE("SSLP generator") {
  SUBCASE("both ends of the capacity range occur") {
    std::set<double> seen;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
      for (double u : sslp_capacities(gen_sslp_instance(SSLPParams{}, seed))) seen.insert(u);
    }
    CHECK(seen.count(75.0) == 1);
    CHECK(seen.count(300.0) == 1);
    CHECK(*seen.begin() >= 75.0);
    CHECK(*seen.rbegin() <= 300.0);
  }
  SUBCASE("complete recourse, determinism, shared family data") {
    const auto a = gen_sslp_instance(SSLPParams{}, 17);
    CHECK(check_relatively_complete_recourse(a, 100, 1).complete);
    CHECK(problem_to_json_string(a) == problem_to_json_string(gen_sslp_instance(SSLPParams{}, 17)));
    const auto b = gen_sslp_instance(SSLPParams{}, 18);
    CHECK(a.c == b.c);
    CHECK(a.scenarios[3].h == b.scenarios[3].h);
    CHECK(sslp_capacities(a) != sslp_capacities(b));
    CHECK(problem_to_json_string(sslp_with_capacities(a, sslp_capacities(b))) == problem_to_json_string(b));
  }
  SUBCASE("invalid parameters") {
    SSLPParams p;
    p.a = 0;
    CHECK_THROWS_AS(gen_sslp_instance(p, 1), PreconditionError);
    p = SSLPParams{};
    p.capacity_min = 400;
    CHECK_THROWS_AS(gen_sslp_instance(p, 1), PreconditionError);
  }
}

TEST_CASE("SMKP generator") {
  SUBCASE("rhs stays below the slack fraction of W 1") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto p = gen_smkp_instance(SMKPParams{}, seed);
      const auto& s = p.scenarios[0];
      const auto w1 = s.W.multiply(std::vector<double>(s.num_y(), 1.0));
      for (int i = 0; i < s.num_rows(); ++i) CHECK(s.h[i] <= 0.9 * w1[i] + 1e-9);
      CHECK(p.deterministic_h_and_T());
    }
  }
  SUBCASE("complete recourse and determinism") {
    const auto p = gen_smkp_instance(SMKPParams{}, 5);
    CHECK(check_relatively_complete_recourse(p, 100, 2).complete);
    CHECK(problem_to_json_string(p) == problem_to_json_string(gen_smkp_instance(SMKPParams{}, 5)));
  }
  SUBCASE("one scenario: L-shaped optimum equals the extensive form") {
    SMKPParams params;
    params.c = 1;
    params.n1 = 10;
    const auto p = gen_smkp_instance(params, 6);
    const auto ef = solve_mip(build_extensive_form(p));
    REQUIRE(ef.status == MipStatus::Optimal);
    CHECK(std::abs(solve(p, SolveConfig{}).objective - ef.objective) <= 1e-6);
  }
  SUBCASE("feature length is m however large the master") {
    SMKPParams params;
    params.n1 = 100;
    const auto p = gen_smkp_instance(params, 7);
    CHECK(smkp_featurizer(p)(std::vector<double>(100, 1.0)).size() == 5);
  }
  SUBCASE("invalid slack factor") {
    SMKPParams params;
    params.rhs_slack_factor = 1.0;
    CHECK_THROWS_AS(gen_smkp_instance(params, 1), PreconditionError);
  }
  SUBCASE("parameters round-trip through JSON") {
    SMKPParams params;
    params.T_density = 0.5;
    params.family_seed = 99;
    const nlohmann::json j = params;
    const auto back = j.get<SMKPParams>();
    CHECK(nlohmann::json(back) == j);
  }
}

TEST_CASE("labeled examples") {
  SSLPParams small;
  small.c = 4;
  SUBCASE("one scenario: full and implicit labels coincide") {
    SSLPParams one;
    one.c = 1;
    const auto full = gen_examples(one, 20, Labeling::Full, 3);
    const auto implicit = gen_examples(one, 20, Labeling::Implicit, 3);
    for (int i = 0; i < 20; ++i) {
      CHECK(full.examples[i].features == implicit.examples[i].features);
      CHECK(full.examples[i].label == implicit.examples[i].label);
    }
  }
  SUBCASE("features, labels and worker independence") {
    const auto d = gen_examples(small, 30, Labeling::Full, 4);
    CHECK(d.size() == 30);
    CHECK(d.feature_len == 10);
    CHECK(d.scaled == std::vector<bool>{true, true, true, true, true, false, false, false, false, false});
    const auto base = gen_sslp_instance(small, 4);
    for (const auto& ex : d.examples) {
      const std::vector<double> caps(ex.features.begin(), ex.features.begin() + 5);
      const std::vector<double> x(ex.features.begin() + 5, ex.features.end());
      CHECK(ex.label[0] == evaluate_Q(sslp_with_capacities(base, caps), x));
    }
    const auto parallel = gen_examples(small, 30, Labeling::Full, 4, 4);
    for (int i = 0; i < 30; ++i) CHECK(parallel.examples[i].label == d.examples[i].label);
    CHECK_THROWS_AS(gen_examples(small, 0, Labeling::Full, 4), PreconditionError);
  }
  SUBCASE("implicit labels are unbiased") {
    const auto base = gen_sslp_instance(small, 5);
    std::mt19937_64 rng(6);
    for (const auto& x : {std::vector<double>{1, 1, 0, 1, 0}, std::vector<double>{0, 1, 1, 1, 1}}) {
      const double full = evaluate_Q(base, x);
      std::vector<double> draws;
      std::uniform_int_distribution<int> pick(0, small.c - 1);
      for (int k = 0; k < 500; ++k) draws.push_back(evaluate_scenario(base, pick(rng), x));
      const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / 500;
      double ss = 0.0;
      for (double v : draws) ss += (v - mean) * (v - mean);
      const double se = std::sqrt(ss / 499) / std::sqrt(500.0);
      CHECK(std::abs(mean - full) <= 2 * se + 1e-9);
    }
  }
  SUBCASE("SMKP relaxed labels: length 7 and the duality identity") {
    const auto d = gen_examples_relaxed(SMKPParams{}, 40, 7);
    CHECK(d.label_len == 7);
    CHECK(d.feature_len == 5);
    for (const auto& ex : d.examples) {
      // features are h - T x, the label is [Q~, E[phi], E[1'psi]]
      double dual = -ex.label[6];
      for (int i = 0; i < 5; ++i) dual += ex.label[1 + i] * ex.features[i];
      CHECK(std::abs(ex.label[0] - dual) <= 1e-6 * std::max(1.0, std::abs(ex.label[0])));
    }
  }
  SUBCASE("zero scenario costs give zero relaxed labels") {
    SMKPParams params;
    params.q_min = params.q_max = 0;
    const auto d = gen_examples_relaxed(params, 10, 8);
    for (const auto& ex : d.examples) {
      for (double v : ex.label) CHECK(v == 0.0);
    }
  }
  SUBCASE("SSLP relaxed labels use the general layout") {
    const auto d = gen_examples_relaxed(small, 10, 9);
    CHECK(d.label_len == small.a + 3);
  }
}

TEST_CASE("derived seeds") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(1, 5) != derive_seed(2, 5));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
  CHECK(labeling_from_string("implicit") == Labeling::Implicit);
  CHECK_THROWS_AS(labeling_from_string("partial"), PreconditionError);
}
