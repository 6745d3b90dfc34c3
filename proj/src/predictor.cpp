#include "mlb/predictor.hpp"

#include "mlb/error.hpp"

namespace mlb {

RelaxedLayout relaxed_layout(const TwoStageProblem& problem) {
  return problem.deterministic_h_and_T() ? RelaxedLayout::Reduced : RelaxedLayout::General;
}

int relaxed_label_len(const TwoStageProblem& problem) {
  if (relaxed_layout(problem) == RelaxedLayout::Reduced) return problem.scenarios.at(0).num_rows() + 2;
  return problem.n_x + 3;
}

std::vector<double> relaxed_label(const TwoStageProblem& problem, const Reductions& r) {
  std::vector<double> label{r.q_tilde};
  if (relaxed_layout(problem) == RelaxedLayout::Reduced) {
    label.insert(label.end(), r.e_phi.begin(), r.e_phi.end());
  } else {
    label.push_back(r.e_phi_h);
    label.insert(label.end(), r.e_phi_T.begin(), r.e_phi_T.end());
  }
  label.push_back(r.e_one_psi);
  return label;
}

Reductions reductions_from_label(const TwoStageProblem& problem, std::span<const double> label) {
  if (static_cast<int>(label.size()) != relaxed_label_len(problem)) {
    throw StructuralError("relaxed label has length " + std::to_string(label.size()) + ", expected " +
                          std::to_string(relaxed_label_len(problem)));
  }
  Reductions r;
  r.q_tilde = label.front();
  r.e_one_psi = label.back();
  if (relaxed_layout(problem) == RelaxedLayout::Reduced) {
    const Scenario& sc = problem.scenarios[0];
    r.e_phi.assign(label.begin() + 1, label.end() - 1);
    r.e_phi_T = sc.T.left_multiply(r.e_phi);
    for (int i = 0; i < sc.num_rows(); ++i) r.e_phi_h += r.e_phi[i] * sc.h[i];
  } else {
    r.e_phi_h = label[1];
    r.e_phi_T.assign(label.begin() + 2, label.end() - 1);
  }
  return r;
}

NetworkPredictor::NetworkPredictor(const TwoStageProblem& problem, Featurizer featurizer,
                                   const Network* q_network, const Network* relaxed_network)
    : problem_(problem),
      featurizer_(std::move(featurizer)),
      q_network_(q_network),
      relaxed_network_(relaxed_network) {
  if (q_network_ != nullptr && q_network_->spec().output_len != 1) {
    throw StructuralError("Q network must have a single output");
  }
  if (relaxed_network_ != nullptr && relaxed_network_->spec().output_len != relaxed_label_len(problem_)) {
    throw StructuralError("relaxed network output does not match the instance's label layout");
  }
}

double NetworkPredictor::predict_Q(std::span<const double> x) const {
  if (q_network_ == nullptr) throw PreconditionError("predictor has no Q network");
  return q_network_->forward(featurizer_(x))[0];
}

Reductions NetworkPredictor::predict_relaxed(std::span<const double> x) const {
  if (relaxed_network_ == nullptr) throw PreconditionError("predictor has no relaxed network");
  const auto out = relaxed_network_->forward(featurizer_(x));
  return reductions_from_label(problem_, out);
}

}  // namespace mlb
