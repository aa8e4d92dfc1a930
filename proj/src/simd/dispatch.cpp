#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "szc/simd/kernels.hpp"

namespace szc::simd {
namespace {

constexpr KernelTable kScalar{Backend::scalar, &scalar::dot, &scalar::axpy, &scalar::convolve_add};
#if defined(SZC_HAVE_AVX2_TU)
constexpr KernelTable kAvx2{Backend::avx2, &avx2::dot, &avx2::axpy, &avx2::convolve_add};
#endif

const KernelTable* detect() {
    if (const char* env = std::getenv("SZC_SIMD"); env != nullptr && std::string(env) == "scalar") {
        return &kScalar;
    }
#if defined(SZC_HAVE_AVX2_TU)
    if (cpu_has_avx2()) return &kAvx2;
#endif
    return &kScalar;
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> current{detect()};
    return current;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(SZC_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& table_for(Backend backend) {
    switch (backend) {
        case Backend::scalar:
            return kScalar;
        case Backend::avx2:
#if defined(SZC_HAVE_AVX2_TU)
            if (cpu_has_avx2()) return kAvx2;
#endif
            throw std::invalid_argument("AVX2 kernels are not available on this CPU");
    }
    return kScalar;
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void select(Backend backend) { slot().store(&table_for(backend), std::memory_order_release); }

std::string_view name(Backend backend) { return backend == Backend::avx2 ? "avx2" : "scalar"; }

void convolve_add(std::span<const double> x, std::span<const double> h, std::span<double> out) {
    if (x.empty() || h.empty()) return;
    if (out.size() < x.size() + h.size() - 1) {
        throw std::invalid_argument("convolve_add: output buffer too short");
    }
    active().convolve_add(x.data(), x.size(), h.data(), h.size(), out.data());
}

}  // namespace szc::simd
