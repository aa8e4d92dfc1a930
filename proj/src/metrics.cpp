#include "szc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

#include <fftw3.h>

#include "szc/errors.hpp"
#include "szc/simd/kernels.hpp"

namespace szc {

double clamped_db_ratio(double num, double den) {
    const double db = 10.0 * std::log10(std::max(num, kEnergyFloor) / std::max(den, kEnergyFloor));
    return std::clamp(db, -kDbClamp, kDbClamp);
}

double frame_energy(const Frames& frames) {
    double e = 0.0;
    for (const auto& f : frames) e += simd::dot(f, f);
    return e;
}

double td_ac(const Frames& bright, const Frames& dark) {
    if (bright.empty() || dark.empty()) throw ValidationError("td_ac needs bright and dark frames");
    const double mb = static_cast<double>(bright.size());
    const double md = static_cast<double>(dark.size());
    return clamped_db_ratio(md * frame_energy(bright), mb * frame_energy(dark));
}

namespace {

Frames difference(const Frames& a, const Frames& b) {
    if (a.size() != b.size()) throw ValidationError("signal sets differ in microphone count");
    Frames out(a.size());
    for (std::size_t m = 0; m < a.size(); ++m) {
        if (a[m].size() != b[m].size()) throw ValidationError("signals differ in length");
        out[m].resize(a[m].size());
        for (std::size_t n = 0; n < a[m].size(); ++n) out[m][n] = a[m][n] - b[m][n];
    }
    return out;
}

std::size_t common_length(const Frames& a, const Frames& b) {
    std::size_t n = 0;
    for (const auto* set : {&a, &b}) {
        for (const auto& row : *set) {
            if (n == 0) n = row.size();
            if (row.size() != n) throw ValidationError("all signals must share one length");
        }
    }
    if (n == 0) throw ValidationError("signals are empty");
    return n;
}

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<double> bin_frequencies(std::size_t nfft, std::size_t sample_rate_hz) {
    std::vector<double> f(nfft / 2);
    for (std::size_t k = 1; k <= nfft / 2; ++k) {
        f[k - 1] = static_cast<double>(k) * static_cast<double>(sample_rate_hz) / static_cast<double>(nfft);
    }
    return f;
}

}  // namespace

double td_nsdp(const Frames& bright, const Frames& desired) {
    if (bright.empty()) throw ValidationError("td_nsdp needs bright frames");
    return clamped_db_ratio(frame_energy(difference(bright, desired)), frame_energy(desired));
}

std::size_t fft_size_for(std::size_t n) {
    std::size_t nfft = 1;
    while (nfft < n) nfft <<= 1;
    return std::max<std::size_t>(nfft, 2);
}

std::vector<double> summed_power_spectrum(const Frames& signals, std::size_t nfft) {
    const std::size_t bins = nfft / 2 + 1;
    std::vector<double> power(bins, 0.0);
    double* in = fftw_alloc_real(nfft);
    fftw_complex* out = fftw_alloc_complex(bins);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in, out, FFTW_ESTIMATE);
    }
    for (const auto& row : signals) {
        if (row.size() > nfft) {
            fftw_destroy_plan(plan);
            fftw_free(in);
            fftw_free(out);
            throw ValidationError("signal longer than the FFT size");
        }
        std::fill(in, in + nfft, 0.0);
        std::copy(row.begin(), row.end(), in);
        fftw_execute(plan);
        for (std::size_t k = 0; k < bins; ++k) power[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return power;
}

Spectrum fd_ac(const Frames& bright, const Frames& dark, std::size_t sample_rate_hz) {
    const std::size_t nfft = fft_size_for(common_length(bright, dark));
    const auto pb = summed_power_spectrum(bright, nfft);
    const auto pd = summed_power_spectrum(dark, nfft);
    const double mb = static_cast<double>(bright.size());
    const double md = static_cast<double>(dark.size());
    Spectrum s{bin_frequencies(nfft, sample_rate_hz), {}};
    s.db.reserve(s.freq_hz.size());
    for (std::size_t k = 1; k < pb.size(); ++k) s.db.push_back(clamped_db_ratio(md * pb[k], mb * pd[k]));
    return s;
}

Spectrum fd_nsdp(const Frames& bright, const Frames& desired, std::size_t sample_rate_hz) {
    const std::size_t nfft = fft_size_for(common_length(bright, desired));
    const auto pe = summed_power_spectrum(difference(bright, desired), nfft);
    const auto pd = summed_power_spectrum(desired, nfft);
    Spectrum s{bin_frequencies(nfft, sample_rate_hz), {}};
    s.db.reserve(s.freq_hz.size());
    for (std::size_t k = 1; k < pe.size(); ++k) s.db.push_back(clamped_db_ratio(pe[k], pd[k]));
    return s;
}

}  // namespace szc
