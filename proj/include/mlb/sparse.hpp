#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mlb {

/// Coordinate-format sparse matrix. Duplicate coordinates are summed when the
/// matrix is multiplied or compressed.
class SparseMatrix {
 public:
  struct Entry {
    int row;
    int col;
    double value;
  };

  SparseMatrix() = default;
  SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t nonzeros() const { return entries_.size(); }

  /// Appends an entry; throws StructuralError when out of range.
  void add(int row, int col, double value);
  void resize(int rows, int cols);

  /// y = M x
  std::vector<double> multiply(std::span<const double> x) const;
  /// y = x' M
  std::vector<double> left_multiply(std::span<const double> x) const;

  /// Dense row-major copy, for tests and small problems.
  std::vector<std::vector<double>> to_dense() const;
  static SparseMatrix from_dense(const std::vector<std::vector<double>>& dense);
  static SparseMatrix identity(int n);

  bool operator==(const SparseMatrix& other) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Entry> entries_;
};

}  // namespace mlb
