#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mlb {

struct LabeledExample {
  std::vector<double> features;
  std::vector<double> label;
};

/// Fixed-width examples. `scaled` flags the features that are rescaled into
/// [0, 1] before entering a network; the others (binaries, already reduced
/// inputs) pass through.
struct Dataset {
  int feature_len = 0;
  int label_len = 0;
  std::vector<bool> scaled;
  std::vector<LabeledExample> examples;

  int size() const { return static_cast<int>(examples.size()); }
  void add(LabeledExample example);
  Dataset subset(const std::vector<int>& indices) const;
  Eigen::MatrixXd feature_matrix() const;
  Eigen::MatrixXd label_matrix() const;
};

struct Split {
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

/// Shuffled 64/16/20 partition of [0, n).
Split split_indices(int n, std::uint64_t seed);

/// CSV with a leading comment line "# mlb-dataset v1 <feature_len> <label_len>
/// <count> <scaled mask>", a header row and one row per example, written with
/// 17 significant digits. read_dataset also accepts a plain CSV whose header
/// names columns f* and l*.
void write_dataset(const Dataset& data, const std::string& path);
Dataset read_dataset(const std::string& path);

}  // namespace mlb
