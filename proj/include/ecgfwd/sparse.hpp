#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ecgfwd/kernels.hpp"

namespace ecgfwd {

struct Triplet {
  std::int32_t row;
  std::int32_t col;
  double value;
};

/// Compressed-sparse-row matrix with sorted column indices.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  /// Duplicate (row, col) entries are summed in input order, so two entries
  /// fed the same sequence of contributions end up bit-identical.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);

  [[nodiscard]] std::size_t rows() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  [[nodiscard]] std::size_t cols() const { return cols_count_; }
  [[nodiscard]] std::size_t nnz() const { return vals_.size(); }

  [[nodiscard]] std::span<const std::int32_t> row_ptr() const { return row_ptr_; }
  [[nodiscard]] std::span<const std::int32_t> col_index() const { return col_; }
  [[nodiscard]] std::span<const double> values() const { return vals_; }

  [[nodiscard]] kernels::CsrView view() const { return {row_ptr_, col_, vals_}; }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;

  [[nodiscard]] double at(std::size_t row, std::size_t col) const;
  [[nodiscard]] std::vector<double> diagonal() const;
  [[nodiscard]] double max_abs() const;
  /// max |A_ij - A_ji| over stored entries (a missing mirror counts as 0).
  [[nodiscard]] double max_asymmetry() const;

  [[nodiscard]] CsrMatrix scaled(double factor) const;

 private:
  std::vector<std::int32_t> row_ptr_;
  std::vector<std::int32_t> col_;
  std::vector<double> vals_;
  std::size_t cols_count_ = 0;
};

}  // namespace ecgfwd
