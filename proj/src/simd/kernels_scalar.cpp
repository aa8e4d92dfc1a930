#include "szc/simd/kernels.hpp"

namespace szc::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void convolve_add(const double* x, std::size_t nx, const double* h, std::size_t nh, double* out) {
    for (std::size_t i = 0; i < nx; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        axpy(xi, h, out + i, nh);
    }
}

}  // namespace szc::simd::scalar
