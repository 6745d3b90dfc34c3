#pragma once

// Small hand-built problems shared by the tests.

#include <random>

#include "mlb/model.hpp"

namespace fixture {

/// n_x binaries, `scenarios` equiprobable scenarios with `ny` binary y and
/// `rows` covering rows W y >= h - T x with random small integer data. An
/// extra continuous slack column with cost 50 per row keeps every scenario
/// feasible.
inline mlb::TwoStageProblem random_problem(std::mt19937_64& rng, int n_x, int scenarios, int ny, int rows,
                                           bool shared_hT = false) {
  std::uniform_int_distribution<int> coef(0, 6);
  std::uniform_int_distribution<int> cost(-8, 12);
  mlb::TwoStageProblem p;
  p.n_x = n_x;
  for (int j = 0; j < n_x; ++j) p.c.push_back(cost(rng));
  p.A = mlb::SparseMatrix(0, n_x);
  p.C = mlb::SparseMatrix(0, 0);
  mlb::SparseMatrix T(rows, n_x);
  std::vector<double> h(rows);
  auto draw_hT = [&] {
    T = mlb::SparseMatrix(rows, n_x);
    for (int r = 0; r < rows; ++r) {
      h[r] = coef(rng) + 2;
      for (int j = 0; j < n_x; ++j) {
        const int v = coef(rng) - 2;
        if (v != 0) T.add(r, j, v);
      }
    }
  };
  draw_hT();
  for (int s = 0; s < scenarios; ++s) {
    if (!shared_hT && s > 0) draw_hT();
    mlb::Scenario sc;
    sc.W = mlb::SparseMatrix(rows, ny + rows);
    for (int j = 0; j < ny; ++j) {
      sc.q.push_back(cost(rng));
      sc.y_domain.push_back(mlb::VarDomain::binary());
    }
    for (int r = 0; r < rows; ++r) {
      for (int j = 0; j < ny; ++j) {
        const int v = coef(rng);
        if (v != 0) sc.W.add(r, j, v);
      }
      sc.q.push_back(50.0);
      sc.y_domain.push_back(mlb::VarDomain::continuous(0.0, 100.0));
      sc.W.add(r, ny + r, 1.0);
    }
    sc.T = T;
    sc.h = h;
    p.scenarios.push_back(std::move(sc));
  }
  p.probabilities.assign(scenarios, 1.0 / scenarios);
  p.validate();
  return p;
}

}  // namespace fixture
