#include <immintrin.h>

#include "ecgfwd/kernels.hpp"

namespace ecgfwd::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i + 4]), _mm256_loadu_pd(&b[i + 4]), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_dot(std::span<const double> w, std::span<const double> a,
                    std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d wa = _mm256_mul_pd(_mm256_loadu_pd(&w[i]), _mm256_loadu_pd(&a[i]));
    acc = _mm256_fmadd_pd(wa, _mm256_loadu_pd(&b[i]), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(&y[i], _mm256_fmadd_pd(va, _mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i])));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(&y[i], _mm256_fmadd_pd(vb, _mm256_loadu_pd(&y[i]), _mm256_loadu_pd(&x[i])));
  }
  for (; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void scale_by(std::span<const double> d, std::span<const double> r, std::span<double> z) {
  const std::size_t n = r.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(&z[i], _mm256_mul_pd(_mm256_loadu_pd(&d[i]), _mm256_loadu_pd(&r[i])));
  }
  for (; i < n; ++i) z[i] = d[i] * r[i];
}

void csr_matvec(const CsrView& a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = a.rows();
  const double* xp = x.data();
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t begin = a.row_ptr[i];
    const std::int32_t end = a.row_ptr[i + 1];
    __m256d acc = _mm256_setzero_pd();
    std::int32_t k = begin;
    for (; k + 4 <= end; k += 4) {
      const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&a.cols[k]));
      const __m256d xv = _mm256_i32gather_pd(xp, idx, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(&a.vals[k]), xv, acc);
    }
    double s = hsum(acc);
    for (; k < end; ++k) s += a.vals[k] * xp[a.cols[k]];
    y[i] = s;
  }
}

void ms_current(std::span<const double> v, std::span<const double> h, double tau_in,
                double tau_out, std::span<double> out) {
  const std::size_t n = v.size();
  const __m256d inv_in = _mm256_set1_pd(1.0 / tau_in);
  const __m256d inv_out = _mm256_set1_pd(1.0 / tau_out);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vi = _mm256_loadu_pd(&v[i]);
    const __m256d hi = _mm256_loadu_pd(&h[i]);
    const __m256d gain = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(hi, vi), vi),
                                       _mm256_mul_pd(_mm256_sub_pd(one, vi), inv_in));
    _mm256_storeu_pd(&out[i], _mm256_fnmadd_pd(vi, inv_out, gain));
  }
  const double s_in = 1.0 / tau_in;
  const double s_out = 1.0 / tau_out;
  for (; i < n; ++i) {
    const double vi = v[i];
    out[i] = h[i] * vi * vi * (1.0 - vi) * s_in - vi * s_out;
  }
}

}  // namespace

const Table& avx2_table_impl() {
  static const Table table{dot, weighted_dot, axpy, xpby, scale_by, csr_matvec, ms_current};
  return table;
}

}  // namespace ecgfwd::kernels
