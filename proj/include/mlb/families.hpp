#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "mlb/dataset.hpp"
#include "mlb/model.hpp"
#include "mlb/predictor.hpp"

namespace mlb {

/// Stochastic server location. The family seed fixes costs, demands,
/// revenues and the scenario set; the instance seed draws the capacities.
struct SSLPParams {
  int a = 5;   ///< servers
  int b = 10;  ///< clients
  int c = 10;  ///< scenarios
  int capacity_min = 75;
  int capacity_max = 300;
  int cost_min = 40;
  int cost_max = 80;
  int revenue_min = 1;
  int revenue_max = 25;
  int demand_min = 1;
  int demand_max = 25;
  double presence = 0.5;
  double overflow_penalty = 1000.0;
  std::uint64_t family_seed = 1;

  void validate() const;
};

/// Stochastic multiple knapsack. The family seed fixes c, A, W and the
/// scenario costs q; the instance seed draws T and h, which are shared by all
/// scenarios.
struct SMKPParams {
  int n1 = 20;  ///< first-stage binaries
  int m1 = 5;   ///< first-stage covering rows
  int n2 = 15;  ///< second-stage binaries
  int m = 5;    ///< coupling rows
  int c = 10;   ///< scenarios
  int T_min = 1;
  int T_max = 40;
  double T_density = 1.0;
  int W_min = 1;
  int W_max = 40;
  int A_min = 1;
  int A_max = 20;
  int cost_min = 1;
  int cost_max = 100;
  int q_min = 1;
  int q_max = 100;
  double rhs_slack_factor = 0.9;
  std::uint64_t family_seed = 2;

  void validate() const;
};

void to_json(nlohmann::json& j, const SSLPParams& p);
void from_json(const nlohmann::json& j, SSLPParams& p);
void to_json(nlohmann::json& j, const SMKPParams& p);
void from_json(const nlohmann::json& j, SMKPParams& p);

TwoStageProblem gen_sslp_instance(const SSLPParams& params, std::uint64_t seed);
TwoStageProblem gen_smkp_instance(const SMKPParams& params, std::uint64_t seed);

/// Server capacities of an SSLP instance, read back from T.
std::vector<double> sslp_capacities(const TwoStageProblem& problem);
/// Copy of an SSLP instance with different capacities.
TwoStageProblem sslp_with_capacities(const TwoStageProblem& problem, std::span<const double> capacities);

/// [capacities; x]
Featurizer sslp_featurizer(const TwoStageProblem& problem);
/// h - T x, the right-hand side seen by the second stage.
Featurizer smkp_featurizer(const TwoStageProblem& problem);

enum class Labeling { Full, Implicit };

Labeling labeling_from_string(const std::string& name);

/// Integral-value examples with one label: Q(x) under Full, one uniformly
/// drawn scenario's optimum under Implicit. Example i depends only on
/// (seed, i); `jobs` workers fill the dataset in index order.
Dataset gen_examples(const SSLPParams& params, int n, Labeling labeling, std::uint64_t seed, int jobs = 1);
Dataset gen_examples(const SMKPParams& params, int n, Labeling labeling, std::uint64_t seed, int jobs = 1);

/// Relaxed examples labeled by evaluate_Q_relaxed in the instance's layout
/// (reduced for SMKP, general for SSLP).
Dataset gen_examples_relaxed(const SSLPParams& params, int n, std::uint64_t seed, int jobs = 1);
Dataset gen_examples_relaxed(const SMKPParams& params, int n, std::uint64_t seed, int jobs = 1);

/// 64-bit mix used to derive per-example and per-instance seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace mlb
