// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>

#include "placemap/simd/kernels.hpp"

namespace placemap::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

inline __m256d widen_add(__m256 v, __m256d acc) {
  const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
  const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
  return _mm256_add_pd(acc, _mm256_add_pd(lo, hi));
}

inline double tail_dot(const float* a, const float* b, std::size_t from, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = from; i < n; ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

double dot_f64(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    a2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), a2);
    a3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), a3);
  }
  for (; i + 4 <= n; i += 4) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Lanes accumulate in float for one 32-element block, then fold into double.
// Bounding the float run keeps rounding near that of four products instead of
// n/8.
constexpr std::size_t kBlock = 32;

// Register tile: NC columns x NQ queries. Every block shape in dot_block_f32
// funnels through this with the same per-pair operation order, so results
// are bit-identical however the caller tiles.
template <int NC, int NQ>
inline void tile(const float* cols, const float* queries, std::size_t n, std::size_t nq,
                 double* out) {
  __m256d total[NC][NQ];
  for (int c = 0; c < NC; ++c)
    for (int q = 0; q < NQ; ++q) total[c][q] = _mm256_setzero_pd();

  const std::size_t n8 = n & ~std::size_t{7};
  for (std::size_t b = 0; b < n8; b += kBlock) {
    const std::size_t e = std::min(b + kBlock, n8);
    __m256 acc[NC][NQ];
    for (int c = 0; c < NC; ++c)
      for (int q = 0; q < NQ; ++q) acc[c][q] = _mm256_setzero_ps();
    for (std::size_t i = b; i < e; i += 8) {
      __m256 col[NC];
      for (int c = 0; c < NC; ++c) col[c] = _mm256_loadu_ps(cols + c * n + i);
      for (int q = 0; q < NQ; ++q) {
        const __m256 x = _mm256_loadu_ps(queries + q * n + i);
        for (int c = 0; c < NC; ++c) acc[c][q] = _mm256_fmadd_ps(col[c], x, acc[c][q]);
      }
    }
    for (int c = 0; c < NC; ++c)
      for (int q = 0; q < NQ; ++q) total[c][q] = widen_add(acc[c][q], total[c][q]);
  }
  for (int c = 0; c < NC; ++c) {
    for (int q = 0; q < NQ; ++q) {
      out[c * nq + q] = hsum(total[c][q]) + tail_dot(cols + c * n, queries + q * n, n8, n);
    }
  }
}

// Four columns stay in L1 while query pairs stream from L2; wider column
// tiles halve the query traffic, which bounds throughput at large n.
template <int NC>
inline void column_strip(const float* cols, const float* queries, std::size_t nq, std::size_t n,
                         double* out) {
  std::size_t q = 0;
  for (; q + 2 <= nq; q += 2) tile<NC, 2>(cols, queries + q * n, n, nq, out + q);
  if (q < nq) tile<NC, 1>(cols, queries + q * n, n, nq, out + q);
}

void dot_block_f32(const float* cols, std::size_t ncols, const float* queries, std::size_t nq,
                   std::size_t n, double* out) {
  std::size_t c = 0;
  for (; c + 4 <= ncols; c += 4) column_strip<4>(cols + c * n, queries, nq, n, out + c * nq);
  switch (ncols - c) {
    case 3: column_strip<3>(cols + c * n, queries, nq, n, out + c * nq); break;
    case 2: column_strip<2>(cols + c * n, queries, nq, n, out + c * nq); break;
    case 1: column_strip<1>(cols + c * n, queries, nq, n, out + c * nq); break;
    default: break;
  }
}

}  // namespace

const KernelTable& detail::avx2_table() {
  static const KernelTable table{Isa::Avx2, &dot_f64, &axpy_f64, &dot_block_f32};
  return table;
}

}  // namespace placemap::simd
