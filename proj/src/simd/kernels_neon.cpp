// AArch64 only; NEON is part of the baseline ISA there.
#include <arm_neon.h>

#include <algorithm>

#include "placemap/simd/kernels.hpp"

namespace placemap::simd {
namespace {

inline float64x2_t widen_add(float32x4_t v, float64x2_t acc) {
  return vaddq_f64(acc, vaddq_f64(vcvt_f64_f32(vget_low_f32(v)), vcvt_high_f64_f32(v)));
}

inline double tail_dot(const float* a, const float* b, std::size_t from, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = from; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

double dot_f64(const double* x, const double* y, std::size_t n) {
  float64x2_t a0 = vdupq_n_f64(0.0), a1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
    a1 = vfmaq_f64(a1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  float64x2_t a = vaddq_f64(a0, a1);
  double s = vgetq_lane_f64(a, 0) + vgetq_lane_f64(a, 1);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Lanes accumulate in float for one 32-element block, then fold into double,
// as in the AVX2 variant.
constexpr std::size_t kBlock = 32;

template <int NQ>
inline void strip(const float* col, const float* queries, std::size_t n, std::size_t nq,
                  double* out) {
  float64x2_t total[NQ];
  for (int q = 0; q < NQ; ++q) total[q] = vdupq_n_f64(0.0);
  const std::size_t n8 = n & ~std::size_t{7};
  for (std::size_t b = 0; b < n8; b += kBlock) {
    const std::size_t e = std::min(b + kBlock, n8);
    float32x4_t lo[NQ], hi[NQ];
    for (int q = 0; q < NQ; ++q) lo[q] = hi[q] = vdupq_n_f32(0.0f);
    for (std::size_t i = b; i < e; i += 8) {
      const float32x4_t c0 = vld1q_f32(col + i), c1 = vld1q_f32(col + i + 4);
      for (int q = 0; q < NQ; ++q) {
        lo[q] = vfmaq_f32(lo[q], c0, vld1q_f32(queries + q * n + i));
        hi[q] = vfmaq_f32(hi[q], c1, vld1q_f32(queries + q * n + i + 4));
      }
    }
    for (int q = 0; q < NQ; ++q) total[q] = widen_add(hi[q], widen_add(lo[q], total[q]));
  }
  for (int q = 0; q < NQ; ++q) {
    out[q] = vgetq_lane_f64(total[q], 0) + vgetq_lane_f64(total[q], 1) +
             tail_dot(col, queries + q * n, n8, n);
  }
  (void)nq;
}

void dot_block_f32(const float* cols, std::size_t ncols, const float* queries, std::size_t nq,
                   std::size_t n, double* out) {
  for (std::size_t c = 0; c < ncols; ++c) {
    std::size_t q = 0;
    for (; q + 4 <= nq; q += 4) strip<4>(cols + c * n, queries + q * n, n, nq, out + c * nq + q);
    for (; q < nq; ++q) strip<1>(cols + c * n, queries + q * n, n, nq, out + c * nq + q);
  }
}

}  // namespace

const KernelTable& detail::neon_table() {
  static const KernelTable table{Isa::Neon, &dot_f64, &axpy_f64, &dot_block_f32};
  return table;
}

}  // namespace placemap::simd
