#pragma once

// Acoustic contrast (AC) and normalized signal distortion power (nSDP), per
// frame in the time domain and per bin over the whole run in the frequency
// domain. All values in dB, clamped to [-200, 200] with a 1e-300 floor on
// the energies so that degenerate inputs stay finite.

#include <cstddef>
#include <vector>

#include "szc/runtime.hpp"

namespace szc {

inline constexpr double kDbClamp = 200.0;
inline constexpr double kEnergyFloor = 1e-300;

/// 10 log10(num / den) with both floored at kEnergyFloor and the result
/// clamped to +-kDbClamp.
double clamped_db_ratio(double num, double den);

double frame_energy(const Frames& frames);

/// (M_D * sum_b |p_b|^2) / (M_B * sum_d |p_d|^2) in dB.
double td_ac(const Frames& bright, const Frames& dark);

/// sum_b |p_b - d_b|^2 / sum_b |d_b|^2 in dB.
double td_nsdp(const Frames& bright, const Frames& desired);

/// Smallest power of two >= n.
std::size_t fft_size_for(std::size_t n);

/// sum over rows of |X(k)|^2 for k = 0..nfft/2, rows zero-padded to nfft.
std::vector<double> summed_power_spectrum(const Frames& signals, std::size_t nfft);

struct Spectrum {
    std::vector<double> freq_hz;  // bins 1..nfft/2, strictly increasing, ends at fs/2
    std::vector<double> db;
};

Spectrum fd_ac(const Frames& bright, const Frames& dark, std::size_t sample_rate_hz);
Spectrum fd_nsdp(const Frames& bright, const Frames& desired, std::size_t sample_rate_hz);

struct MetricsSeries {
    std::vector<double> td_ac;
    std::vector<double> td_nsdp;
    std::vector<double> freq_hz;
    std::vector<double> fd_ac;
    std::vector<double> fd_nsdp;
};

}  // namespace szc
