#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mlb/lshaped.hpp"
#include "mlb/network.hpp"

namespace mlb {

/// Maps a first-stage x of a fixed instance to network features.
using Featurizer = std::function<std::vector<double>(std::span<const double>)>;

/// Relaxed-label layouts. Reduced: [Q~, E[phi] (m entries), E[1'psi]], for
/// instances whose h and T are deterministic. General: [Q~, E[phi h],
/// E[phi T] (n_x entries), E[1'psi]].
enum class RelaxedLayout { Reduced, General };

RelaxedLayout relaxed_layout(const TwoStageProblem& problem);
int relaxed_label_len(const TwoStageProblem& problem);

/// Label vector of `r` in the layout of `problem`.
std::vector<double> relaxed_label(const TwoStageProblem& problem, const Reductions& r);
/// Inverse of relaxed_label; the reduced layout recomputes E[phi h] and
/// E[phi T] from the instance's h and T.
Reductions reductions_from_label(const TwoStageProblem& problem, std::span<const double> label);

/// Predictor backed by trained networks. Either network may be null when the
/// solve never asks for that quantity.
class NetworkPredictor : public Predictor {
 public:
  NetworkPredictor(const TwoStageProblem& problem, Featurizer featurizer, const Network* q_network,
                   const Network* relaxed_network);

  double predict_Q(std::span<const double> x) const override;
  Reductions predict_relaxed(std::span<const double> x) const override;

 private:
  const TwoStageProblem& problem_;
  Featurizer featurizer_;
  const Network* q_network_;
  const Network* relaxed_network_;
};

}  // namespace mlb
