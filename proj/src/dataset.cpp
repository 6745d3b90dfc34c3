#include "mlb/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mlb/error.hpp"

namespace mlb {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& cell, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size() && cell.find_first_not_of(" \r\t", used) != std::string::npos) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw IoError("dataset line " + std::to_string(line_no) + ": bad number '" + cell + "'");
  }
}

}  // namespace

void Dataset::add(LabeledExample example) {
  if (static_cast<int>(example.features.size()) != feature_len ||
      static_cast<int>(example.label.size()) != label_len) {
    throw StructuralError("example does not match the dataset shape");
  }
  examples.push_back(std::move(example));
}

Dataset Dataset::subset(const std::vector<int>& indices) const {
  Dataset out;
  out.feature_len = feature_len;
  out.label_len = label_len;
  out.scaled = scaled;
  out.examples.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || i >= size()) throw PreconditionError("subset index out of range");
    out.examples.push_back(examples[i]);
  }
  return out;
}

Eigen::MatrixXd Dataset::feature_matrix() const {
  Eigen::MatrixXd m(size(), feature_len);
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < feature_len; ++j) m(i, j) = examples[i].features[j];
  }
  return m;
}

Eigen::MatrixXd Dataset::label_matrix() const {
  Eigen::MatrixXd m(size(), label_len);
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < label_len; ++j) m(i, j) = examples[i].label[j];
  }
  return m;
}

Split split_indices(int n, std::uint64_t seed) {
  if (n < 0) throw PreconditionError("split_indices: negative size");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const int n_train = static_cast<int>(0.64 * n);
  const int n_val = static_cast<int>(0.16 * n);
  Split s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  return s;
}

void write_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  out << "# mlb-dataset v1 " << data.feature_len << ' ' << data.label_len << ' ' << data.size() << ' ';
  for (int j = 0; j < data.feature_len; ++j) {
    out << (j < static_cast<int>(data.scaled.size()) && data.scaled[j] ? '1' : '0');
  }
  out << '\n';
  for (int j = 0; j < data.feature_len; ++j) out << (j > 0 ? "," : "") << 'f' << j;
  for (int k = 0; k < data.label_len; ++k) out << ",l" << k;
  out << '\n';
  for (const auto& ex : data.examples) {
    for (int j = 0; j < data.feature_len; ++j) out << (j > 0 ? "," : "") << ex.features[j];
    for (int k = 0; k < data.label_len; ++k) out << ',' << ex.label[k];
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  Dataset data;
  std::string line;
  int line_no = 0;
  int expected_count = -1;
  bool have_meta = false;
  std::string mask;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind('#', 0) != 0) break;
    std::istringstream meta(line.substr(1));
    std::string tag, version;
    meta >> tag >> version;
    if (tag == "mlb-dataset") {
      if (version != "v1") throw IoError("unsupported dataset version " + version);
      if (!(meta >> data.feature_len >> data.label_len >> expected_count)) throw IoError("corrupt dataset header");
      meta >> mask;
      have_meta = true;
    }
  }
  if (line_no == 0 || line.empty()) throw IoError("dataset " + path + " has no header row");
  const auto header = split_csv(line);
  int nf = 0;
  int nl = 0;
  for (const auto& name : header) {
    if (!name.empty() && name[0] == 'f' && nl == 0) {
      ++nf;
    } else if (!name.empty() && name[0] == 'l') {
      ++nl;
    } else {
      throw IoError("unexpected dataset column '" + name + "'");
    }
  }
  if (have_meta && (nf != data.feature_len || nl != data.label_len)) {
    throw IoError("dataset header disagrees with its column names");
  }
  data.feature_len = nf;
  data.label_len = nl;
  data.scaled.assign(nf, false);
  if (!mask.empty()) {
    if (static_cast<int>(mask.size()) != nf) throw IoError("dataset scale mask has the wrong length");
    for (int j = 0; j < nf; ++j) data.scaled[j] = mask[j] == '1';
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (static_cast<int>(cells.size()) != nf + nl) {
      throw IoError("dataset line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                    " columns, expected " + std::to_string(nf + nl));
    }
    LabeledExample ex;
    ex.features.reserve(nf);
    ex.label.reserve(nl);
    for (int j = 0; j < nf; ++j) ex.features.push_back(parse_double(cells[j], line_no));
    for (int k = 0; k < nl; ++k) ex.label.push_back(parse_double(cells[nf + k], line_no));
    data.examples.push_back(std::move(ex));
  }
  if (expected_count >= 0 && expected_count != data.size()) {
    throw IoError("dataset is truncated: expected " + std::to_string(expected_count) + " rows, found " +
                  std::to_string(data.size()));
  }
  return data;
}

}  // namespace mlb
