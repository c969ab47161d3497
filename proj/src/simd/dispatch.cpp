#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "qaoi/simd/kernels.hpp"

namespace qaoi::simd {

std::string_view name(Isa isa) {
    switch (isa) {
    case Isa::Scalar:
        return "scalar";
    case Isa::Avx2:
        return "avx2";
    }
    return "unknown";
}

bool available(Isa isa) {
    switch (isa) {
    case Isa::Scalar:
        return true;
    case Isa::Avx2:
#if defined(QAOI_HAVE_AVX2)
        return __builtin_cpu_supports("avx2");
#else
        return false;
#endif
    }
    return false;
}

const KernelTable& kernels(Isa isa) {
    if (!available(isa)) {
        throw std::runtime_error("SIMD variant '" + std::string(name(isa)) + "' is not available");
    }
#if defined(QAOI_HAVE_AVX2)
    if (isa == Isa::Avx2) {
        return avx2_kernels();
    }
#endif
    return scalar_kernels();
}

const KernelTable& active_kernels() {
    static const KernelTable& chosen = [] () -> const KernelTable& {
        const char* forced = std::getenv("QAOI_SIMD");
        if (forced != nullptr && std::strcmp(forced, "scalar") == 0) {
            return scalar_kernels();
        }
        return available(Isa::Avx2) ? kernels(Isa::Avx2) : scalar_kernels();
    }();
    return chosen;
}

} // namespace qaoi::simd
