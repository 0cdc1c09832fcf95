#include <cstdlib>
#include <string>

#include "placemap/simd/kernels.hpp"

namespace placemap::simd {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

const KernelTable* kernels_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &detail::scalar_table();
    case Isa::Avx2:
#if defined(PLACEMAP_HAVE_AVX2_TABLE)
      if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return &detail::avx2_table();
      }
#endif
      return nullptr;
    case Isa::Neon:
#if defined(PLACEMAP_HAVE_NEON_TABLE)
      return &detail::neon_table();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
    if (kernels_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

namespace {

const KernelTable& select() {
  if (const char* env = std::getenv("PLACEMAP_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == isa_name(isa)) {
        if (const KernelTable* t = kernels_for(isa)) return *t;
      }
    }
  }
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (const KernelTable* t = kernels_for(isa)) return *t;
  }
  return detail::scalar_table();
}

}  // namespace

const KernelTable& kernels() {
  static const KernelTable& active = select();
  return active;
}

}  // namespace placemap::simd
