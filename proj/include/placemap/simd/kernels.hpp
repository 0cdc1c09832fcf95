#pragma once

// Data-parallel inner loops used by factorization and matching.
//
// Every kernel has a scalar reference implementation and optional SIMD
// variants. The variant is chosen once at first use from the CPU's feature
// set; PLACEMAP_SIMD=scalar|avx2|neon forces a specific one (falling back to
// scalar when the request is not supported on this machine).

#include <cstddef>
#include <string_view>
#include <vector>

namespace placemap::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;

  // sum_i x[i] * y[i]
  double (*dot_f64)(const double* x, const double* y, std::size_t n);

  // y[i] += alpha * x[i]
  void (*axpy_f64)(double alpha, const double* x, double* y, std::size_t n);

  // out[c * nq + q] = <cols[c * n .. c * n + n), queries[q * n .. q * n + n)>
  //
  // The value for a given (column, query) pair does not depend on ncols, nq,
  // or the position of the pair inside the block, so callers may tile freely.
  void (*dot_block_f32)(const float* cols, std::size_t ncols, const float* queries,
                        std::size_t nq, std::size_t n, double* out);
};

std::string_view isa_name(Isa isa) noexcept;

// Kernels for the best ISA available (or the PLACEMAP_SIMD override).
const KernelTable& kernels();

// Kernels for a specific ISA, or nullptr if this build or CPU cannot run it.
const KernelTable* kernels_for(Isa isa);

// All ISAs runnable here, scalar first.
std::vector<Isa> available_isas();

namespace detail {
const KernelTable& scalar_table();
#if defined(PLACEMAP_HAVE_AVX2_TABLE)
const KernelTable& avx2_table();
#endif
#if defined(PLACEMAP_HAVE_NEON_TABLE)
const KernelTable& neon_table();
#endif
}  // namespace detail

}  // namespace placemap::simd
