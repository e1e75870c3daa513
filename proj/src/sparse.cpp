#include "ecgfwd/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "ecgfwd/errors.hpp"

namespace ecgfwd {

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row < 0 || static_cast<std::size_t>(t.row) >= rows || t.col < 0 ||
        static_cast<std::size_t>(t.col) >= cols) {
      throw InvalidArgument("triplet index out of range");
    }
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  CsrMatrix m;
  m.cols_count_ = cols;
  m.row_ptr_.assign(rows + 1, 0);
  for (std::size_t k = 0; k < triplets.size();) {
    const Triplet& first = triplets[k];
    double sum = 0.0;
    std::size_t j = k;
    for (; j < triplets.size() && triplets[j].row == first.row && triplets[j].col == first.col; ++j) {
      sum += triplets[j].value;
    }
    m.col_.push_back(first.col);
    m.vals_.push_back(sum);
    ++m.row_ptr_[first.row + 1];
    k = j;
  }
  for (std::size_t i = 0; i < rows; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
  return m;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols() || y.size() != rows()) throw InvalidArgument("matvec size mismatch");
  kernels::active().csr_matvec(view(), x, y);
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(rows());
  multiply(x, y);
  return y;
}

double CsrMatrix::at(std::size_t row, std::size_t col) const {
  const auto begin = col_.begin() + row_ptr_[row];
  const auto end = col_.begin() + row_ptr_[row + 1];
  const auto it = std::lower_bound(begin, end, static_cast<std::int32_t>(col));
  return (it != end && *it == static_cast<std::int32_t>(col)) ? vals_[it - col_.begin()] : 0.0;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(rows(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) d[i] = at(i, i);
  return d;
}

double CsrMatrix::max_abs() const {
  double m = 0.0;
  for (double v : vals_) m = std::max(m, std::abs(v));
  return m;
}

double CsrMatrix::max_asymmetry() const {
  double m = 0.0;
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::int32_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      m = std::max(m, std::abs(vals_[k] - at(static_cast<std::size_t>(col_[k]), i)));
    }
  }
  return m;
}

CsrMatrix CsrMatrix::scaled(double factor) const {
  CsrMatrix m = *this;
  for (double& v : m.vals_) v *= factor;
  return m;
}

}  // namespace ecgfwd
