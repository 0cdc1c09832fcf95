#include "placemap/simd/kernels.hpp"

namespace placemap::simd {
namespace {

double dot_f64(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Reference: widened to double before multiplying, so this is the most
// accurate of the variants and the yardstick in equivalence tests.
void dot_block_f32(const float* cols, std::size_t ncols, const float* queries, std::size_t nq,
                   std::size_t n, double* out) {
  for (std::size_t c = 0; c < ncols; ++c) {
    const float* col = cols + c * n;
    for (std::size_t q = 0; q < nq; ++q) {
      const float* x = queries + q * n;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(col[i]) * x[i];
      out[c * nq + q] = s;
    }
  }
}

}  // namespace

const KernelTable& detail::scalar_table() {
  static const KernelTable table{Isa::Scalar, &dot_f64, &axpy_f64, &dot_block_f32};
  return table;
}

}  // namespace placemap::simd
