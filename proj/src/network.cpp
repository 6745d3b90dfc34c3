#include "mlb/network.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mlb/error.hpp"

namespace mlb {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "mlb-network";

}  // namespace

void NetworkSpec::validate() const {
  if (input_len < 1 || output_len < 1) throw PreconditionError("network input and output lengths must be >= 1");
  if (hidden_layers < 1) throw PreconditionError("network needs at least one hidden layer");
  if (units_per_layer < 1) throw PreconditionError("network needs at least one unit per layer");
}

Network::Network(NetworkSpec spec) : spec_(spec) {
  spec_.validate();
  int in = spec_.input_len;
  for (int l = 0; l <= spec_.hidden_layers; ++l) {
    const int out = l == spec_.hidden_layers ? spec_.output_len : spec_.units_per_layer;
    weights_.push_back(Eigen::MatrixXd::Zero(out, in));
    biases_.push_back(Eigen::VectorXd::Zero(out));
    in = out;
  }
  output_shift.assign(spec_.output_len, 0.0);
  output_scale.assign(spec_.output_len, 1.0);
  output_weights.assign(spec_.output_len, 1.0);
}

void Network::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int l = 0; l < num_layers(); ++l) {
    auto& w = weights_[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
    }
    biases_[l].setZero();
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < num_layers(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

Eigen::VectorXd Network::scale_input(std::span<const double> features) const {
  if (static_cast<int>(features.size()) != spec_.input_len) {
    throw StructuralError("network expects " + std::to_string(spec_.input_len) + " features, got " +
                          std::to_string(features.size()));
  }
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(features.data(), spec_.input_len);
  for (const auto& s : input_scaling) {
    const double range = s.max - s.min;
    v[s.index] = range > 0.0 ? (v[s.index] - s.min) / range : 0.0;
  }
  return v;
}

std::vector<double> Network::forward(std::span<const double> features) const {
  Eigen::VectorXd a = scale_input(features);
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::VectorXd z = weights_[l] * a + biases_[l];
    if (rectified(l)) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  std::vector<double> out(spec_.output_len);
  for (int k = 0; k < spec_.output_len; ++k) out[k] = output_shift[k] + output_scale[k] * a[k];
  return out;
}

Eigen::MatrixXd Network::forward_batch(const Eigen::MatrixXd& inputs) const {
  if (inputs.cols() != spec_.input_len) throw StructuralError("batch has the wrong number of features");
  Eigen::MatrixXd a = inputs.transpose();
  for (const auto& s : input_scaling) {
    const double range = s.max - s.min;
    if (range > 0.0) {
      a.row(s.index) = (a.row(s.index).array() - s.min) / range;
    } else {
      a.row(s.index).setZero();
    }
  }
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weights_[l] * a;
    z.colwise() += biases_[l];
    if (rectified(l)) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  for (int k = 0; k < spec_.output_len; ++k) {
    a.row(k) = (a.row(k).array() * output_scale[k] + output_shift[k]).matrix();
  }
  return a.transpose();
}

bool Network::operator==(const Network& other) const {
  if (!(spec_ == other.spec_)) return false;
  if (output_shift != other.output_shift || output_scale != other.output_scale ||
      output_weights != other.output_weights || input_scaling.size() != other.input_scaling.size()) {
    return false;
  }
  for (std::size_t i = 0; i < input_scaling.size(); ++i) {
    const auto& a = input_scaling[i];
    const auto& b = other.input_scaling[i];
    if (a.index != b.index || a.min != b.min || a.max != b.max) return false;
  }
  for (int l = 0; l < num_layers(); ++l) {
    if (weights_[l] != other.weights_[l] || biases_[l] != other.biases_[l]) return false;
  }
  return true;
}

std::vector<double> get_parameters(const Network& net) {
  std::vector<double> p;
  p.reserve(net.parameter_count());
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto& w = net.weight(l);
    p.insert(p.end(), w.data(), w.data() + w.size());
    const auto& b = net.bias(l);
    p.insert(p.end(), b.data(), b.data() + b.size());
  }
  return p;
}

void set_parameters(Network& net, std::span<const double> params) {
  if (params.size() != net.parameter_count()) throw StructuralError("parameter vector has the wrong length");
  std::size_t at = 0;
  for (int l = 0; l < net.num_layers(); ++l) {
    auto& w = net.weight(l);
    std::copy(params.begin() + at, params.begin() + at + w.size(), w.data());
    at += w.size();
    auto& b = net.bias(l);
    std::copy(params.begin() + at, params.begin() + at + b.size(), b.data());
    at += b.size();
  }
}

std::string network_to_string(const Network& net) {
  nlohmann::ordered_json j;
  j["format"] = kFormatName;
  j["version"] = kFormatVersion;
  const auto& s = net.spec();
  j["spec"] = {{"input_len", s.input_len},
               {"output_len", s.output_len},
               {"hidden_layers", s.hidden_layers},
               {"units_per_layer", s.units_per_layer}};
  auto scaling = nlohmann::ordered_json::array();
  for (const auto& f : net.input_scaling) scaling.push_back({f.index, f.min, f.max});
  j["input_scaling"] = scaling;
  j["output_shift"] = net.output_shift;
  j["output_scale"] = net.output_scale;
  j["output_weights"] = net.output_weights;
  auto layers = nlohmann::ordered_json::array();
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto& w = net.weight(l);
    const auto& b = net.bias(l);
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"weights", std::vector<double>(w.data(), w.data() + w.size())},
                      {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  j["layers"] = layers;
  return j.dump();
}

Network network_from_string(const std::string& text, const NetworkSpec* expected) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt network file: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormatName) throw IoError("not a network file");
    const int version = j.at("version").get<int>();
    if (version != kFormatVersion) {
      throw IoError("unsupported network file version " + std::to_string(version));
    }
    NetworkSpec spec;
    const auto& js = j.at("spec");
    spec.input_len = js.at("input_len").get<int>();
    spec.output_len = js.at("output_len").get<int>();
    spec.hidden_layers = js.at("hidden_layers").get<int>();
    spec.units_per_layer = js.at("units_per_layer").get<int>();
    if (expected != nullptr && !(spec == *expected)) {
      throw StructuralError("network file spec does not match the expected predictor");
    }
    Network net(spec);
    for (const auto& f : j.at("input_scaling")) {
      net.input_scaling.push_back({f.at(0).get<int>(), f.at(1).get<double>(), f.at(2).get<double>()});
    }
    net.output_shift = j.at("output_shift").get<std::vector<double>>();
    net.output_scale = j.at("output_scale").get<std::vector<double>>();
    net.output_weights = j.at("output_weights").get<std::vector<double>>();
    const auto& layers = j.at("layers");
    if (static_cast<int>(layers.size()) != net.num_layers()) throw IoError("corrupt network file: layer count");
    for (int l = 0; l < net.num_layers(); ++l) {
      auto& w = net.weight(l);
      auto& b = net.bias(l);
      const auto weights = layers[l].at("weights").get<std::vector<double>>();
      const auto bias = layers[l].at("bias").get<std::vector<double>>();
      if (layers[l].at("rows").get<Eigen::Index>() != w.rows() ||
          layers[l].at("cols").get<Eigen::Index>() != w.cols() ||
          static_cast<Eigen::Index>(weights.size()) != w.size() ||
          static_cast<Eigen::Index>(bias.size()) != b.size()) {
        throw IoError("corrupt network file: layer " + std::to_string(l) + " has the wrong shape");
      }
      std::copy(weights.begin(), weights.end(), w.data());
      std::copy(bias.begin(), bias.end(), b.data());
    }
    const auto out = static_cast<std::size_t>(spec.output_len);
    if (net.output_shift.size() != out || net.output_scale.size() != out || net.output_weights.size() != out) {
      throw IoError("corrupt network file: output block");
    }
    for (const auto& f : net.input_scaling) {
      if (f.index < 0 || f.index >= spec.input_len) throw IoError("corrupt network file: scaling index");
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt network file: ") + e.what());
  }
}

void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << network_to_string(net) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

Network load_network(const std::string& path, const NetworkSpec* expected) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return network_from_string(buf.str(), expected);
}

std::vector<double> featurize_sslp(std::span<const double> capacities, std::span<const double> x) {
  if (capacities.size() != x.size()) throw StructuralError("featurize_sslp: one capacity per server expected");
  std::vector<double> f(capacities.begin(), capacities.end());
  f.insert(f.end(), x.begin(), x.end());
  return f;
}

std::vector<double> featurize_smkp(std::span<const double> h, const SparseMatrix& T, std::span<const double> x) {
  if (T.rows() != static_cast<int>(h.size()) || T.cols() != static_cast<int>(x.size())) {
    throw StructuralError("featurize_smkp: dimensions of h, T and x disagree");
  }
  std::vector<double> f(h.begin(), h.end());
  const auto tx = T.multiply(x);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += tx[i];
  return f;
}

}  // namespace mlb
