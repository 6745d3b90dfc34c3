#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlb/dataset.hpp"
#include "mlb/sparse.hpp"

namespace mlb {

/// Hidden layers use rectified-linear units except the last one, which is
/// linear like the output layer. A single hidden layer is rectified.
struct NetworkSpec {
  int input_len = 1;
  int output_len = 1;
  int hidden_layers = 4;
  int units_per_layer = 64;

  void validate() const;
  bool operator==(const NetworkSpec&) const = default;
};

/// Affine rescaling of one feature into [0, 1] from training-set extremes.
struct FeatureScale {
  int index = 0;
  double min = 0.0;
  double max = 1.0;
};

/// Feed-forward predictor. Inputs flagged in the scale block are mapped to
/// [0, 1]; the raw network output o is returned as shift + scale * o per
/// output. Immutable once trained and safe to share across threads.
class Network {
 public:
  Network() = default;
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }

  /// Glorot-uniform weights, zero biases.
  void initialize(std::uint64_t seed);

  std::vector<double> forward(std::span<const double> features) const;
  /// Row-wise forward over a batch (rows are examples).
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

  int num_layers() const { return static_cast<int>(weights_.size()); }
  /// Layer l maps activations of width in_l to width out_l: W is out_l x in_l.
  Eigen::MatrixXd& weight(int layer) { return weights_[layer]; }
  const Eigen::MatrixXd& weight(int layer) const { return weights_[layer]; }
  Eigen::VectorXd& bias(int layer) { return biases_[layer]; }
  const Eigen::VectorXd& bias(int layer) const { return biases_[layer]; }
  /// True when layer l's output passes through a rectifier.
  bool rectified(int layer) const {
    return layer < num_layers() - 2 || (num_layers() == 2 && layer == 0);
  }
  std::size_t parameter_count() const;

  std::vector<FeatureScale> input_scaling;
  std::vector<double> output_shift;
  std::vector<double> output_scale;
  /// Per-output L1 weights used during training.
  std::vector<double> output_weights;

  /// Inputs after the scaling block, as fed to the first layer.
  Eigen::VectorXd scale_input(std::span<const double> features) const;

  bool operator==(const Network& other) const;

 private:
  NetworkSpec spec_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// L1 fits the conditional median, L2 the conditional mean. Noisy
/// single-scenario labels need the mean.
enum class Loss { L1, L2 };

struct TrainConfig {
  Loss loss = Loss::L1;
  int batch_size = 128;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int patience = 50;
  int max_epochs = 500;
  std::uint64_t seed = 0;
  /// Optional wall-clock cap in seconds; 0 disables it.
  double time_limit = 0.0;

  void validate() const;
};

struct TrainReport {
  int epochs_run = 0;
  int best_epoch = -1;
  double best_validation_loss = 0.0;
  double final_validation_loss = 0.0;
  std::vector<double> validation_history;
};

/// Fills scaling and output weights from `train_set` and initializes weights.
Network prepare_network(const Dataset& train_set, const NetworkSpec& spec, std::uint64_t seed);

/// Adam on the weighted L1 loss (or, with Loss::L2, the weighted squared
/// error of residuals divided by the output scale) with early stopping on
/// validation loss.
/// Returns the best snapshot. Throws NumericalError when the loss diverges.
Network train(const Dataset& train_set, const Dataset& val_set, const NetworkSpec& spec,
              const TrainConfig& config, TrainReport* report = nullptr);

/// Mean over rows of sum_k w_k |f_k(x) - y_k|.
double weighted_l1_loss(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels);

/// Mean over rows of sum_k w_k ((f_k(x) - y_k) / scale_k)^2.
double weighted_l2_loss(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels);

/// Gradient of weighted_l1_loss (or weighted_l2_loss) with respect to every
/// parameter, flattened as in get_parameters(). The subgradient of |.| at 0
/// is taken as 0.
std::vector<double> loss_gradient(const Network& net, const Eigen::MatrixXd& inputs,
                                  const Eigen::MatrixXd& labels, Loss loss = Loss::L1);

/// Flattened parameters: per layer, W column-major then b.
std::vector<double> get_parameters(const Network& net);
void set_parameters(Network& net, std::span<const double> params);

/// Average absolute relative error per output over a dataset, in percent.
std::vector<double> relative_errors(const Network& net, const Dataset& data);

void save_network(const Network& net, const std::string& path);
/// Throws IoError on missing/corrupt files or unsupported versions, and
/// StructuralError when `expected` is given and does not match.
Network load_network(const std::string& path, const NetworkSpec* expected = nullptr);
std::string network_to_string(const Network& net);
Network network_from_string(const std::string& text, const NetworkSpec* expected = nullptr);

/// [capacities; x]
std::vector<double> featurize_sslp(std::span<const double> capacities, std::span<const double> x);
/// h + T x
std::vector<double> featurize_smkp(std::span<const double> h, const SparseMatrix& T,
                                   std::span<const double> x);

}  // namespace mlb
