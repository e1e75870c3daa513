#include "ecgfwd/kernels.hpp"

namespace ecgfwd::kernels {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double weighted_dot(std::span<const double> w, std::span<const double> a,
                    std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * a[i] * b[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + beta * y[i];
}

void scale_by(std::span<const double> d, std::span<const double> r, std::span<double> z) {
  for (std::size_t i = 0; i < r.size(); ++i) z[i] = d[i] * r[i];
}

void csr_matvec(const CsrView& a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::int32_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) s += a.vals[k] * x[a.cols[k]];
    y[i] = s;
  }
}

void ms_current(std::span<const double> v, std::span<const double> h, double tau_in,
                double tau_out, std::span<double> out) {
  const double inv_in = 1.0 / tau_in;
  const double inv_out = 1.0 / tau_out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double vi = v[i];
    out[i] = h[i] * vi * vi * (1.0 - vi) * inv_in - vi * inv_out;
  }
}

}  // namespace

const Table& scalar_table() {
  static const Table table{dot, weighted_dot, axpy, xpby, scale_by, csr_matvec, ms_current};
  return table;
}

}  // namespace ecgfwd::kernels
