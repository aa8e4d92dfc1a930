#pragma once

// Inner-loop arithmetic shared by the frame engine, covariance assembly and
// the tracker. Each kernel has a portable scalar reference and, on x86-64,
// an AVX2/FMA variant. The active table is picked once at first use from
// the running CPU; SZC_SIMD=scalar in the environment forces the reference.

#include <cstddef>
#include <span>
#include <string_view>

namespace szc::simd {

enum class Backend { scalar, avx2 };

struct KernelTable {
    Backend backend;
    /// sum_i a[i] * b[i]; a and b must have equal length.
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    /// out[i + j] += x[i] * h[j] for the full linear convolution of x and h.
    /// out must hold at least nx + nh - 1 samples.
    void (*convolve_add)(const double* x, std::size_t nx, const double* h, std::size_t nh,
                         double* out);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void convolve_add(const double* x, std::size_t nx, const double* h, std::size_t nh, double* out);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void convolve_add(const double* x, std::size_t nx, const double* h, std::size_t nh, double* out);
}  // namespace avx2

bool cpu_has_avx2();
const KernelTable& table_for(Backend backend);

/// The table used by the library. Selected once; thread-safe.
const KernelTable& active();

/// Overrides the process-wide selection. Throws std::invalid_argument when
/// the requested backend cannot run on this CPU.
void select(Backend backend);

std::string_view name(Backend backend);

// Convenience wrappers over the active table.
inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

/// out += x * h; out.size() must be >= x.size() + h.size() - 1.
void convolve_add(std::span<const double> x, std::span<const double> h, std::span<double> out);

}  // namespace szc::simd
