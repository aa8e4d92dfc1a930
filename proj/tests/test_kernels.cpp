#include "doctest.h"

#include <random>
#include <vector>

#include "szc/simd/kernels.hpp"
#include "szc/verify.hpp"

using namespace szc;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& e : v) e = g(rng);
    return v;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("scalar kernels against textbook loops") {
    std::mt19937_64 rng(3);
    const auto& s = simd::table_for(simd::Backend::scalar);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 257u}) {
        const auto a = random_vec(rng, n), b = random_vec(rng, n);
        double ref = 0.0;
        for (std::size_t i = 0; i < n; ++i) ref += a[i] * b[i];
        CHECK(rel_err(s.dot(a.data(), b.data(), n), ref) < 1e-13);

        auto y = random_vec(rng, n);
        auto y_ref = y;
        s.axpy(0.75, a.data(), y.data(), n);
        for (std::size_t i = 0; i < n; ++i) y_ref[i] += 0.75 * a[i];
        CHECK(y == y_ref);
    }
    const auto x = random_vec(rng, 50), h = random_vec(rng, 13);
    std::vector<double> out(62, 0.0);
    s.convolve_add(x.data(), x.size(), h.data(), h.size(), out.data());
    const auto ref = verify::direct_convolution(x, h);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(out[i] - ref[i]) < 1e-12);
}

TEST_CASE("avx2 kernels match scalar reference") {
    if (!simd::cpu_has_avx2()) {
        MESSAGE("AVX2 not available; skipped");
        return;
    }
    std::mt19937_64 rng(11);
    const auto& s = simd::table_for(simd::Backend::scalar);
    const auto& v = simd::table_for(simd::Backend::avx2);
    CHECK(v.backend == simd::Backend::avx2);
    for (std::size_t n = 0; n < 70; ++n) {
        const auto a = random_vec(rng, n), b = random_vec(rng, n);
        CHECK(rel_err(v.dot(a.data(), b.data(), n), s.dot(a.data(), b.data(), n)) < 1e-13);

        auto y1 = random_vec(rng, n);
        auto y2 = y1;
        s.axpy(-1.25, a.data(), y1.data(), n);
        v.axpy(-1.25, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) < 1e-14);
    }
    for (std::size_t nx : {1u, 5u, 64u, 256u}) {
        for (std::size_t nh : {1u, 3u, 8u, 32u, 256u}) {
            const auto x = random_vec(rng, nx), h = random_vec(rng, nh);
            std::vector<double> o1(nx + nh - 1, 0.5), o2(nx + nh - 1, 0.5);
            s.convolve_add(x.data(), nx, h.data(), nh, o1.data());
            v.convolve_add(x.data(), nx, h.data(), nh, o2.data());
            double worst = 0.0;
            for (std::size_t i = 0; i < o1.size(); ++i) worst = std::max(worst, std::abs(o1[i] - o2[i]));
            CHECK(worst < 1e-12);
        }
    }
}

TEST_CASE("convolve_add wrapper checks output size") {
    std::vector<double> x(4, 1.0), h(3, 1.0), out(5, 0.0);
    CHECK_THROWS(simd::convolve_add(x, h, out));
    out.resize(6);
    simd::convolve_add(x, h, out);
    CHECK(out == std::vector<double>{1, 2, 3, 3, 2, 1});
}

TEST_CASE("backend selection") {
    const auto before = simd::active().backend;
    simd::select(simd::Backend::scalar);
    CHECK(simd::active().backend == simd::Backend::scalar);
    if (simd::cpu_has_avx2()) {
        simd::select(simd::Backend::avx2);
        CHECK(simd::active().backend == simd::Backend::avx2);
    } else {
        CHECK_THROWS(simd::select(simd::Backend::avx2));
    }
    simd::select(before);
    CHECK(simd::name(simd::Backend::scalar) == "scalar");
}
