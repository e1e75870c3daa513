#pragma once

// Data-parallel inner loops used by the solvers. Every routine has a scalar
// reference implementation; an AVX2/FMA variant is selected at runtime when
// the CPU supports it. Variants agree to rounding, not bit-for-bit.

#include <cstdint>
#include <span>
#include <string_view>

namespace ecgfwd::kernels {

enum class Level { Scalar, Avx2 };

std::string_view to_string(Level level);

// Read-only view of a compressed-sparse-row matrix.
struct CsrView {
  std::span<const std::int32_t> row_ptr;  // size rows + 1
  std::span<const std::int32_t> cols;
  std::span<const double> vals;
  [[nodiscard]] std::size_t rows() const { return row_ptr.size() - 1; }
};

struct Table {
  double (*dot)(std::span<const double> a, std::span<const double> b);
  // sum_i w_i a_i b_i
  double (*weighted_dot)(std::span<const double> w, std::span<const double> a,
                         std::span<const double> b);
  // y += alpha x
  void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);
  // y = x + beta y
  void (*xpby)(std::span<const double> x, double beta, std::span<double> y);
  // z = d .* r
  void (*scale_by)(std::span<const double> d, std::span<const double> r,
                   std::span<double> z);
  // y = A x
  void (*csr_matvec)(const CsrView& a, std::span<const double> x, std::span<double> y);
  // out = h v^2 (1 - v) / tau_in - v / tau_out
  void (*ms_current)(std::span<const double> v, std::span<const double> h, double tau_in,
                     double tau_out, std::span<double> out);
};

const Table& scalar_table();
// nullptr when the AVX2 variant was not compiled in.
const Table* avx2_table();

bool cpu_has_avx2();

// Best level supported by this build and CPU, unless overridden by the
// ECGFWD_KERNELS environment variable ("scalar" or "avx2").
Level detect_level();

// Table used by the library. Resolved once on first use.
const Table& active();
Level active_level();
// Forces a level; throws if it is unavailable. Intended for tests and
// benchmarking; not thread-safe with concurrent solves.
void set_level(Level level);

}  // namespace ecgfwd::kernels
