#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "szc/harness.hpp"
#include "szc/metrics.hpp"
#include "szc/roomsim.hpp"
#include "szc/verify.hpp"

using namespace szc;

namespace {

Frames noise_rows(std::uint64_t seed, std::size_t rows, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Frames f(rows, std::vector<double>(n));
    for (auto& r : f) {
        for (auto& v : r) v = g(rng);
    }
    return f;
}

Frames scaled(const Frames& f, double a) {
    Frames out = f;
    for (auto& r : out) {
        for (auto& v : r) v *= a;
    }
    return out;
}

}  // namespace

TEST_CASE("clamped dB ratio") {
    CHECK(clamped_db_ratio(10.0, 1.0) == doctest::Approx(10.0));
    CHECK(clamped_db_ratio(1.0, 0.0) == kDbClamp);
    CHECK(clamped_db_ratio(0.0, 1.0) == -kDbClamp);
    CHECK(clamped_db_ratio(0.0, 0.0) == 0.0);
}

TEST_CASE("time-domain metric examples") {
    const auto b = noise_rows(1, 2, 64);
    CHECK(td_ac(b, b) == doctest::Approx(0.0).epsilon(1e-15));
    const Frames silent(2, std::vector<double>(64, 0.0));
    CHECK(td_ac(b, silent) == kDbClamp);
    CHECK(td_nsdp(b, b) == -kDbClamp);
    CHECK(td_nsdp(silent, b) == doctest::Approx(0.0));
    CHECK(td_nsdp(scaled(b, 2.0), b) == doctest::Approx(0.0));

    // Mic-count normalization: one bright mic against two identical dark mics.
    const Frames one{b[0]};
    const Frames two{b[0], b[0]};
    CHECK(td_ac(one, two) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("frequency axis") {
    const auto b = noise_rows(2, 2, 300);
    const auto s = fd_ac(b, b, 8000);
    CHECK(fft_size_for(300) == 512);
    CHECK(fft_size_for(512) == 512);
    REQUIRE(s.freq_hz.size() == 256);
    CHECK(s.freq_hz.front() > 0.0);
    CHECK(s.freq_hz.back() == 4000.0);
    for (std::size_t i = 1; i < s.freq_hz.size(); ++i) CHECK(s.freq_hz[i] > s.freq_hz[i - 1]);
    for (double v : s.db) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("FD clamps and zero reproduction") {
    const std::size_t n = 256;
    Frames tone(1, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) tone[0][i] = std::sin(2.0 * std::numbers::pi * 16.0 * static_cast<double>(i) / n);
    const Frames silent(1, std::vector<double>(n, 0.0));
    const auto ac = fd_ac(tone, silent, 8000);
    CHECK(ac.db[15] == kDbClamp);  // bin 16 is the 16th reported bin

    const auto d = noise_rows(3, 2, n);
    const Frames zeros(2, std::vector<double>(n, 0.0));
    for (double v : fd_nsdp(zeros, d, 8000).db) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
    for (double v : fd_nsdp(d, d, 8000).db) CHECK(v == -kDbClamp);
}

TEST_CASE("FD nSDP matches direct DFT bins") {
    const auto p = noise_rows(4, 2, 200), d = noise_rows(5, 2, 200);
    const std::size_t nfft = fft_size_for(200);
    const auto s = fd_nsdp(p, d, 8000);
    for (std::size_t k : {1u, 7u, 64u, 127u, 128u}) {
        double err = 0.0, ref = 0.0;
        for (std::size_t m = 0; m < 2; ++m) {
            const auto P = verify::naive_dft_bin(p[m], nfft, k);
            const auto D = verify::naive_dft_bin(d[m], nfft, k);
            err += std::norm(P - D);
            ref += std::norm(D);
        }
        CHECK(std::abs(s.db[k - 1] - 10.0 * std::log10(err / ref)) <= 1e-9);
    }
}

TEST_CASE("Parseval: FD power totals equal TD energies") {
    const auto b = noise_rows(6, 3, 1000);
    const std::size_t nfft = fft_size_for(1000);
    const auto spec = summed_power_spectrum(b, nfft);
    REQUIRE(spec.size() == nfft / 2 + 1);
    double weighted = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k) weighted += (k == 0 || k == nfft / 2 ? 1.0 : 2.0) * spec[k];
    CHECK(std::abs(weighted / (static_cast<double>(nfft) * frame_energy(b)) - 1.0) <= 1e-12);
}

TEST_CASE("common positive gain leaves every metric unchanged") {
    const auto b = noise_rows(7, 2, 256), dk = noise_rows(8, 2, 256), d = noise_rows(9, 2, 256);
    const double g = 123.456;
    CHECK(std::abs(td_ac(b, dk) - td_ac(scaled(b, g), scaled(dk, g))) <= 1e-12);
    CHECK(std::abs(td_nsdp(b, d) - td_nsdp(scaled(b, g), scaled(d, g))) <= 1e-12);
    const auto a1 = fd_ac(b, dk, 8000), a2 = fd_ac(scaled(b, g), scaled(dk, g), 8000);
    const auto n1 = fd_nsdp(b, d, 8000), n2 = fd_nsdp(scaled(b, g), scaled(d, g), 8000);
    for (std::size_t k = 0; k < a1.db.size(); ++k) {
        CHECK(std::abs(a1.db[k] - a2.db[k]) <= 1e-12);
        CHECK(std::abs(n1.db[k] - n2.db[k]) <= 1e-12);
    }
}

TEST_CASE("D1 fixed-filter run: TD AC from full-convolution energies") {
    const Scene scene = desk_scene_d1();
    const IrSet set = build_scene_irset(scene.room, scene.geometry);
    ExperimentConfig config = desk_config();
    config.schemes = {Scheme::start_pos};
    config.num_frames = 6;
    const auto traj = trajectory_preset("static", 6);
    const auto run = run_case_i(config, set, traj);
    const auto& series = run.scheme(Scheme::start_pos).metrics.td_ac;

    const std::size_t N = config.frame_length, T = 6;
    const auto x = make_input_signal(config, config.seed, N * T, 8000);
    const auto q = design_for_position(set, traj.position_at(0), config.method, config.design);
    auto zone = [&](MicGroup g) {
        Frames out;
        for (std::size_t m = 0; m < set.mic_count(g); ++m) {
            std::vector<double> acc(N * T, 0.0);
            for (std::size_t l = 0; l < 3; ++l) {
                const auto y = verify::direct_convolution(x, q.filter(l));
                const auto p = verify::direct_convolution(y, set.ir(traj.position_at(0), g, m, l));
                for (std::size_t n = 0; n < N * T; ++n) acc[n] += p[n];
            }
            out.push_back(acc);
        }
        return out;
    };
    const auto bright = zone(MicGroup::bright), dark = zone(MicGroup::dark);
    REQUIRE(series.size() == T);
    for (std::size_t tau = 0; tau < T; ++tau) {
        double eb = 0.0, ed = 0.0;
        for (const auto& r : bright) for (std::size_t n = tau * N; n < (tau + 1) * N; ++n) eb += r[n] * r[n];
        for (const auto& r : dark) for (std::size_t n = tau * N; n < (tau + 1) * N; ++n) ed += r[n] * r[n];
        CHECK(std::abs(series[tau] - 10.0 * std::log10(eb / ed)) <= 1e-9);
    }
}
