#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "mlb/error.hpp"
#include "mlb/model.hpp"
#include "mlb/network.hpp"

namespace mlb {

namespace {

struct Gradient {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;
};

// Columns are examples.
Eigen::MatrixXd scaled_inputs(const Network& net, const Eigen::MatrixXd& inputs) {
  Eigen::MatrixXd a = inputs.transpose();
  for (const auto& s : net.input_scaling) {
    const double range = s.max - s.min;
    if (range > 0.0) {
      a.row(s.index) = (a.row(s.index).array() - s.min) / range;
    } else {
      a.row(s.index).setZero();
    }
  }
  return a;
}

Gradient backprop(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels, Loss loss) {
  const int L = net.num_layers();
  const double n = static_cast<double>(inputs.rows());
  std::vector<Eigen::MatrixXd> acts;  // acts[l] feeds layer l
  acts.reserve(L + 1);
  acts.push_back(scaled_inputs(net, inputs));
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd z = net.weight(l) * acts.back();
    z.colwise() += net.bias(l);
    if (net.rectified(l)) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  const int out = net.spec().output_len;
  Eigen::MatrixXd g(out, inputs.rows());
  Gradient grad;
  for (int k = 0; k < out; ++k) {
    for (Eigen::Index c = 0; c < inputs.rows(); ++c) {
      const double r = net.output_shift[k] + net.output_scale[k] * acts[L](k, c) - labels(c, k);
      if (loss == Loss::L2) {
        const double u = r / net.output_scale[k];
        grad.loss += net.output_weights[k] * u * u;
        g(k, c) = 2.0 * net.output_weights[k] * u / n;
      } else {
        grad.loss += net.output_weights[k] * std::abs(r);
        const double sign = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
        g(k, c) = net.output_weights[k] * net.output_scale[k] * sign / n;
      }
    }
  }
  grad.loss /= n;
  grad.dW.resize(L);
  grad.db.resize(L);
  for (int l = L - 1; l >= 0; --l) {
    // g is dLoss/d(output of layer l) after its activation; undo the rectifier.
    if (net.rectified(l)) g = g.cwiseProduct((acts[l + 1].array() > 0.0).cast<double>().matrix());
    grad.dW[l] = g * acts[l].transpose();
    grad.db[l] = g.rowwise().sum();
    if (l > 0) g = net.weight(l).transpose() * g;
  }
  return grad;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw PreconditionError("batch_size must be >= 1");
  if (patience < 1) throw PreconditionError("patience must be >= 1");
  if (max_epochs < 0) throw PreconditionError("max_epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw PreconditionError("learning rate must be positive");
}

double weighted_l1_loss(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels) {
  if (inputs.rows() == 0) return 0.0;
  const Eigen::MatrixXd pred = net.forward_batch(inputs);
  double loss = 0.0;
  for (int k = 0; k < net.spec().output_len; ++k) {
    loss += net.output_weights[k] * (pred.col(k) - labels.col(k)).cwiseAbs().sum();
  }
  return loss / static_cast<double>(inputs.rows());
}

double weighted_l2_loss(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels) {
  if (inputs.rows() == 0) return 0.0;
  const Eigen::MatrixXd pred = net.forward_batch(inputs);
  double loss = 0.0;
  for (int k = 0; k < net.spec().output_len; ++k) {
    loss += net.output_weights[k] * ((pred.col(k) - labels.col(k)) / net.output_scale[k]).squaredNorm();
  }
  return loss / static_cast<double>(inputs.rows());
}

std::vector<double> loss_gradient(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& labels,
                                  Loss loss) {
  const Gradient g = backprop(net, inputs, labels, loss);
  std::vector<double> flat;
  flat.reserve(net.parameter_count());
  for (int l = 0; l < net.num_layers(); ++l) {
    flat.insert(flat.end(), g.dW[l].data(), g.dW[l].data() + g.dW[l].size());
    flat.insert(flat.end(), g.db[l].data(), g.db[l].data() + g.db[l].size());
  }
  return flat;
}

Network prepare_network(const Dataset& train_set, const NetworkSpec& spec, std::uint64_t seed) {
  if (train_set.size() == 0) throw PreconditionError("training set is empty");
  if (spec.input_len != train_set.feature_len || spec.output_len != train_set.label_len) {
    throw StructuralError("network spec does not match the dataset dimensions");
  }
  Network net(spec);
  for (int i = 0; i < train_set.feature_len; ++i) {
    if (i >= static_cast<int>(train_set.scaled.size()) || !train_set.scaled[i]) continue;
    FeatureScale s{i, kInf, -kInf};
    for (const auto& ex : train_set.examples) {
      s.min = std::min(s.min, ex.features[i]);
      s.max = std::max(s.max, ex.features[i]);
    }
    net.input_scaling.push_back(s);
  }
  for (int k = 0; k < spec.output_len; ++k) {
    std::vector<double> col;
    col.reserve(train_set.size());
    double mean_abs = 0.0;
    for (const auto& ex : train_set.examples) {
      col.push_back(ex.label[k]);
      mean_abs += std::abs(ex.label[k]);
    }
    mean_abs /= train_set.size();
    const double center = median(col);
    std::vector<double> dev;
    dev.reserve(col.size());
    double mean_dev = 0.0;
    for (double v : col) {
      dev.push_back(std::abs(v - center));
      mean_dev += std::abs(v - center);
    }
    mean_dev /= train_set.size();
    double scale = median(dev);
    if (!(scale > 0.0)) scale = mean_dev;
    if (!(scale > 0.0)) scale = 1.0;
    net.output_shift[k] = center;
    net.output_scale[k] = scale;
    net.output_weights[k] = spec.output_len > 1 && mean_abs > 0.0 ? 1.0 / mean_abs : 1.0;
  }
  net.initialize(seed);
  return net;
}

Network train(const Dataset& train_set, const Dataset& val_set, const NetworkSpec& spec, const TrainConfig& config,
              TrainReport* report) {
  config.validate();
  if (val_set.size() == 0) throw PreconditionError("validation set is empty");
  if (val_set.feature_len != train_set.feature_len || val_set.label_len != train_set.label_len) {
    throw StructuralError("training and validation sets have different shapes");
  }
  const auto start = std::chrono::steady_clock::now();
  Network net = prepare_network(train_set, spec, config.seed);
  const Eigen::MatrixXd X = train_set.feature_matrix();
  const Eigen::MatrixXd Y = train_set.label_matrix();
  const Eigen::MatrixXd Xv = val_set.feature_matrix();
  const Eigen::MatrixXd Yv = val_set.label_matrix();

  TrainReport local;
  TrainReport& rep = report != nullptr ? *report : local;
  rep = TrainReport{};
  Network best = net;
  auto validation_loss = [&](const Network& m) {
    return config.loss == Loss::L2 ? weighted_l2_loss(m, Xv, Yv) : weighted_l1_loss(m, Xv, Yv);
  };
  rep.best_validation_loss = validation_loss(net);
  rep.final_validation_loss = rep.best_validation_loss;

  const int L = net.num_layers();
  std::vector<Eigen::MatrixXd> mW(L), vW(L);
  std::vector<Eigen::VectorXd> mb(L), vb(L);
  for (int l = 0; l < L; ++l) {
    mW[l] = Eigen::MatrixXd::Zero(net.weight(l).rows(), net.weight(l).cols());
    vW[l] = mW[l];
    mb[l] = Eigen::VectorXd::Zero(net.bias(l).size());
    vb[l] = mb[l];
  }
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  long step = 0;
  int since_best = 0;
  const int n = train_set.size();
  const int bs = std::min(config.batch_size, n);
  Eigen::MatrixXd xb, yb;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int first = 0; first < n; first += bs) {
      const int count = std::min(bs, n - first);
      xb.resize(count, X.cols());
      yb.resize(count, Y.cols());
      for (int r = 0; r < count; ++r) {
        xb.row(r) = X.row(order[first + r]);
        yb.row(r) = Y.row(order[first + r]);
      }
      const Gradient g = backprop(net, xb, yb, config.loss);
      if (!std::isfinite(g.loss)) {
        throw NumericalError("training diverged in epoch " + std::to_string(epoch));
      }
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      const double lr = config.learning_rate * std::sqrt(c2) / c1;
      for (int l = 0; l < L; ++l) {
        mW[l] = config.beta1 * mW[l] + (1.0 - config.beta1) * g.dW[l];
        vW[l] = config.beta2 * vW[l] + (1.0 - config.beta2) * g.dW[l].cwiseAbs2();
        mb[l] = config.beta1 * mb[l] + (1.0 - config.beta1) * g.db[l];
        vb[l] = config.beta2 * vb[l] + (1.0 - config.beta2) * g.db[l].cwiseAbs2();
        net.weight(l).array() -= lr * mW[l].array() / (vW[l].array().sqrt() + config.epsilon);
        net.bias(l).array() -= lr * mb[l].array() / (vb[l].array().sqrt() + config.epsilon);
      }
    }
    const double val = validation_loss(net);
    if (!std::isfinite(val)) throw NumericalError("training diverged in epoch " + std::to_string(epoch));
    rep.validation_history.push_back(val);
    rep.final_validation_loss = val;
    rep.epochs_run = epoch + 1;
    if (val < rep.best_validation_loss) {
      rep.best_validation_loss = val;
      rep.best_epoch = epoch;
      best = net;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
    if (config.time_limit > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > config.time_limit) {
      break;
    }
  }
  return best;
}

std::vector<double> relative_errors(const Network& net, const Dataset& data) {
  const int out = net.spec().output_len;
  std::vector<double> err(out, 0.0);
  std::vector<int> count(out, 0);
  if (data.size() == 0) return err;
  const Eigen::MatrixXd pred = net.forward_batch(data.feature_matrix());
  for (int i = 0; i < data.size(); ++i) {
    for (int k = 0; k < out; ++k) {
      const double y = data.examples[i].label[k];
      if (std::abs(y) < 1e-9) continue;
      err[k] += std::abs(pred(i, k) - y) / std::abs(y);
      ++count[k];
    }
  }
  for (int k = 0; k < out; ++k) err[k] = count[k] > 0 ? 100.0 * err[k] / count[k] : 0.0;
  return err;
}

}  // namespace mlb
