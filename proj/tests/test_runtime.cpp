#include "doctest.h"

#include <random>

#include "szc/errors.hpp"
#include "szc/roomsim.hpp"
#include "szc/runtime.hpp"
#include "szc/simd/kernels.hpp"
#include "szc/verify.hpp"

using namespace szc;

namespace {

const IrSet& d1_set() {
    static const IrSet set = [] {
        const Scene scene = desk_scene_d1();
        return build_scene_irset(scene.room, scene.geometry);
    }();
    return set;
}

std::vector<double> noise(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& e : v) e = g(rng);
    return v;
}

ControlFilterSet filters_from(std::vector<double> coeffs, std::size_t L, std::size_t J) {
    ControlFilterSet q;
    q.coefficients = std::move(coeffs);
    q.num_loudspeakers = L;
    q.filter_length = J;
    return q;
}

ControlFilterSet identity_filters(std::size_t L, std::size_t J) {
    std::vector<double> c(L * J, 0.0);
    for (std::size_t l = 0; l < L; ++l) c[l * J] = 1.0;
    return filters_from(std::move(c), L, J);
}

EngineShape d1_shape(std::size_t S = 9) {
    return {256, 256, 32, 3, {2, 2, 2}, S};
}

// Adds `part` into `acc` starting at `offset`, dropping samples past the end.
void add_at(std::vector<double>& acc, const std::vector<double>& part, std::size_t offset) {
    for (std::size_t i = 0; i < part.size() && offset + i < acc.size(); ++i) acc[offset + i] += part[i];
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace

TEST_CASE("kernel backend in use") { MESSAGE("kernels: " << simd::name(simd::active().backend)); }

TEST_CASE("frame_input") {
    std::vector<double> sig(8);
    for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = static_cast<double>(i + 1);
    CHECK(frame_input(sig, 1, 4) == std::vector<double>{5, 6, 7, 8});
    const std::vector<double> short_sig{1, 2, 3, 4, 5, 6, 7};
    CHECK(frame_input(short_sig, 1, 4) == std::vector<double>{5, 6, 7, 0});
    CHECK(frame_input(short_sig, 5, 4) == std::vector<double>(4, 0.0));
    CHECK_THROWS_AS(frame_input(sig, -1, 4), ValidationError);
    const std::vector<double> constant(12, 0.25);
    CHECK(frame_input(constant, 0, 4) == frame_input(constant, 2, 4));
}

TEST_CASE("overlap-add tail helper") {
    OverlapAddTail tail(2);
    std::vector<double> out(3);
    tail.emit(std::vector<double>{1, 2, 3, 4, 5}, out);
    CHECK(out == std::vector<double>{1, 2, 3});
    tail.emit(std::vector<double>{1, 1, 1, 1, 1}, out);
    CHECK(out == std::vector<double>{5, 6, 1});
    CHECK(std::vector<double>(tail.data().begin(), tail.data().end()) == std::vector<double>{1, 1});
    CHECK_THROWS_AS(tail.emit(std::vector<double>{1, 2}, out), ValidationError);
}

TEST_CASE("identity and zero filters") {
    const auto x = noise(1, 4 * 256);
    FrameEngine ident(d1_shape(0), identity_filters(3, 32));
    FrameEngine zero(d1_shape(0), filters_from(std::vector<double>(96, 0.0), 3, 32));
    for (std::int64_t tau = 0; tau < 4; ++tau) {
        const auto xf = frame_input(x, tau, 256);
        const auto y = ident.apply_filters(xf);
        for (const auto& row : y) CHECK(row == xf);
        const auto y0 = zero.apply_filters(xf);
        for (const auto& row : y0) CHECK(row == std::vector<double>(256, 0.0));
        for (std::size_t l = 0; l < 3; ++l) {
            for (double v : zero.filter_tail(l)) CHECK(v == 0.0);
        }
        const auto p = zero.propagate_true(y0, d1_set(), PositionId{0});
        for (MicGroup g : kAllGroups) {
            for (const auto& row : p.of(g)) CHECK(row == std::vector<double>(256, 0.0));
        }
        ident.finish_frame();
        zero.finish_frame();
    }
}

TEST_CASE("delta room: pressure equals loudspeaker signal") {
    Manifest m;
    m.sample_rate_hz = 8000;
    m.ir_length = 4;
    m.num_loudspeakers = 1;
    m.mics = {1, 1, 1};
    m.grid = {{1, 1, 1}};
    IrSet set = IrSet::zeros(m);
    for (MicGroup g : kAllGroups) set.mutable_ir(PositionId{0}, g, 0, 0)[0] = 1.0;
    FrameEngine engine({16, 4, 3, 1, {1, 1, 1}, 1}, identity_filters(1, 3));
    const auto x = noise(2, 48);
    for (std::int64_t tau = 0; tau < 3; ++tau) {
        const auto xf = frame_input(x, tau, 16);
        const auto y = engine.apply_filters(xf);
        const auto p = engine.propagate_true(y, set, PositionId{0});
        CHECK(p.bright[0] == y[0]);
        CHECK(p.observation[0] == y[0]);
        const auto d = engine.desired_frames(xf, set, PositionId{0}, 0, 0);
        CHECK(d[0] == xf);
        engine.finish_frame();
    }
}

TEST_CASE("fixed filters and position match the full-convolution oracle") {
    const auto& set = d1_set();
    const std::size_t N = 256, T = 6;
    const auto x = noise(3, T * N);
    const auto q = filters_from(noise(4, 96), 3, 32);
    FrameEngine engine(d1_shape(), q);
    const ObservationIrView view(set);
    Frames y_all(3);
    std::vector<Frames> z_all(9, Frames(2));
    Frames dark_all(2), d_all(2);
    for (std::size_t tau = 0; tau < T; ++tau) {
        const auto xf = frame_input(x, static_cast<std::int64_t>(tau), N);
        const auto y = engine.apply_filters(xf);
        const auto p = engine.propagate_true(y, set, PositionId{5});
        const auto z = engine.estimate_observations(y, view);
        const auto d = engine.desired_frames(xf, set, PositionId{5}, 2, 16);
        for (std::size_t l = 0; l < 3; ++l) y_all[l].insert(y_all[l].end(), y[l].begin(), y[l].end());
        for (std::size_t s = 0; s < 9; ++s) {
            for (std::size_t m = 0; m < 2; ++m) z_all[s][m].insert(z_all[s][m].end(), z[s][m].begin(), z[s][m].end());
        }
        for (std::size_t m = 0; m < 2; ++m) {
            dark_all[m].insert(dark_all[m].end(), p.dark[m].begin(), p.dark[m].end());
            d_all[m].insert(d_all[m].end(), d[m].begin(), d[m].end());
            // The true position's estimate follows the identical arithmetic path.
            CHECK(z[5][m] == p.observation[m]);
        }
        engine.finish_frame();
    }
    for (std::size_t l = 0; l < 3; ++l) {
        auto ref = verify::direct_convolution(x, q.filter(l));
        ref.resize(T * N);
        CHECK(max_diff(y_all[l], ref) <= 1e-10);
    }
    auto pressure = [&](PositionId pos, MicGroup g, std::size_t m) {
        std::vector<double> acc(T * N, 0.0);
        for (std::size_t l = 0; l < 3; ++l) add_at(acc, verify::direct_convolution(y_all[l], set.ir(pos, g, m, l)), 0);
        return acc;
    };
    for (std::size_t m = 0; m < 2; ++m) {
        CHECK(max_diff(dark_all[m], pressure(PositionId{5}, MicGroup::dark, m)) <= 1e-10);
        for (std::size_t s = 0; s < 9; ++s) {
            CHECK(max_diff(z_all[s][m], pressure(PositionId{s}, MicGroup::observation, m)) <= 1e-10);
        }
        std::vector<double> delayed(T * N, 0.0);
        for (std::size_t n = 16; n < T * N; ++n) delayed[n] = x[n - 16];
        auto ref = verify::direct_convolution(delayed, set.ir(PositionId{5}, MicGroup::bright, m, 2));
        ref.resize(T * N);
        CHECK(max_diff(d_all[m], ref) <= 1e-10);
    }
}

TEST_CASE("switching filters and positions follow the stale-tail rule") {
    const auto& set = d1_set();
    const std::size_t N = 256, T = 8;
    const auto x = noise(5, T * N);
    std::vector<ControlFilterSet> bank;
    for (std::uint64_t k = 0; k < 3; ++k) bank.push_back(filters_from(noise(10 + k, 96), 3, 32));
    const std::size_t filter_seq[T] = {0, 0, 1, 2, 2, 0, 1, 1};
    const std::size_t pos_seq[T] = {0, 0, 0, 4, 4, 8, 8, 3};

    FrameEngine engine(d1_shape(0), bank[filter_seq[0]]);
    Frames y_all(3), bright_all(2);
    std::vector<Frames> y_frames;
    for (std::size_t tau = 0; tau < T; ++tau) {
        engine.set_filters(bank[filter_seq[tau]]);
        const auto xf = frame_input(x, static_cast<std::int64_t>(tau), N);
        const auto y = engine.apply_filters(xf);
        const auto p = engine.propagate_true(y, set, PositionId{pos_seq[tau]});
        y_frames.push_back(y);
        for (std::size_t l = 0; l < 3; ++l) y_all[l].insert(y_all[l].end(), y[l].begin(), y[l].end());
        for (std::size_t m = 0; m < 2; ++m) bright_all[m].insert(bright_all[m].end(), p.bright[m].begin(), p.bright[m].end());
        for (const auto& row : p.bright) {
            for (double v : row) REQUIRE(std::isfinite(v));
        }
        engine.finish_frame();
    }
    // Replay: each frame's full convolution lands at offset tau*N under the
    // filter and position active in that frame.
    for (std::size_t l = 0; l < 3; ++l) {
        std::vector<double> ref(T * N, 0.0);
        for (std::size_t tau = 0; tau < T; ++tau) {
            const auto xf = frame_input(x, static_cast<std::int64_t>(tau), N);
            add_at(ref, verify::direct_convolution(xf, bank[filter_seq[tau]].filter(l)), tau * N);
        }
        CHECK(max_diff(y_all[l], ref) <= 1e-10);
    }
    for (std::size_t m = 0; m < 2; ++m) {
        std::vector<double> ref(T * N, 0.0);
        for (std::size_t tau = 0; tau < T; ++tau) {
            for (std::size_t l = 0; l < 3; ++l) {
                add_at(ref, verify::direct_convolution(y_frames[tau][l], set.ir(PositionId{pos_seq[tau]}, MicGroup::bright, m, l)),
                       tau * N);
            }
        }
        CHECK(max_diff(bright_all[m], ref) <= 1e-10);
    }
}

TEST_CASE("linearity in the input") {
    const auto& set = d1_set();
    const auto x = noise(6, 3 * 256);
    const auto q = filters_from(noise(7, 96), 3, 32);
    const double alpha = -2.5;
    FrameEngine a(d1_shape(), q), b(d1_shape(), q);
    const ObservationIrView view(set);
    double worst = 0.0;
    for (std::int64_t tau = 0; tau < 3; ++tau) {
        const auto xf = frame_input(x, tau, 256);
        auto xs = xf;
        for (auto& v : xs) v *= alpha;
        const auto ya = a.apply_filters(xf);
        const auto yb = b.apply_filters(xs);
        const auto pa = a.propagate_true(ya, set, PositionId{1});
        const auto pb = b.propagate_true(yb, set, PositionId{1});
        const auto za = a.estimate_observations(ya, view);
        const auto zb = b.estimate_observations(yb, view);
        auto check = [&](const std::vector<double>& u, const std::vector<double>& v) {
            double scale = 0.0;
            for (double e : u) scale = std::max(scale, std::abs(alpha * e));
            for (std::size_t i = 0; i < u.size(); ++i) worst = std::max(worst, std::abs(alpha * u[i] - v[i]) / scale);
        };
        for (std::size_t l = 0; l < 3; ++l) check(ya[l], yb[l]);
        for (MicGroup g : kAllGroups) {
            for (std::size_t m = 0; m < 2; ++m) check(pa.of(g)[m], pb.of(g)[m]);
        }
        for (std::size_t s = 0; s < 9; ++s) check(za[s][0], zb[s][0]);
        a.finish_frame();
        b.finish_frame();
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("estimation buffers are isolated per position") {
    const auto& set = d1_set();
    FrameEngine engine(d1_shape(), identity_filters(3, 32));
    const ObservationIrView view(set);
    auto tail = engine.estimation_tail(PositionId{3}, 1);
    for (std::size_t i = 0; i < tail.size(); ++i) tail[i] = 1000.0 + static_cast<double>(i);
    const Frames silent(3, std::vector<double>(256, 0.0));
    const auto z = engine.estimate_observations(silent, view);
    for (std::size_t s = 0; s < 9; ++s) {
        for (std::size_t m = 0; m < 2; ++m) {
            if (s == 3 && m == 1) {
                CHECK(z[s][m][0] == 1000.0);
                CHECK(z[s][m][254] == 1254.0);
                CHECK(z[s][m][255] == 0.0);
            } else {
                CHECK(z[s][m] == std::vector<double>(256, 0.0));
            }
        }
    }
    const auto p = engine.propagate_true(silent, set, PositionId{3});
    CHECK(p.observation[1] == std::vector<double>(256, 0.0));
}

TEST_CASE("engine shape checks") {
    EngineShape shape = d1_shape();
    shape.frame_length = 254;
    CHECK_THROWS_AS(FrameEngine(shape, identity_filters(3, 32)), ValidationError);
    shape.frame_length = 255;
    CHECK_NOTHROW(FrameEngine(shape, identity_filters(3, 32)));
    CHECK_THROWS_AS(FrameEngine(d1_shape(), identity_filters(3, 16)), ValidationError);
    FrameEngine engine(d1_shape(), identity_filters(3, 32));
    CHECK_THROWS_AS(engine.set_filters(identity_filters(2, 32)), ValidationError);
    CHECK_THROWS_AS(engine.apply_filters(std::vector<double>(100, 0.0)), ValidationError);
    const Frames y(3, std::vector<double>(256, 0.0));
    CHECK_THROWS_AS(engine.propagate_true(y, d1_set(), PositionId{9}), ValidationError);
}

TEST_CASE("silent input gives silent desired frames") {
    FrameEngine engine(d1_shape(0), identity_filters(3, 32));
    const std::vector<double> xf(256, 0.0);
    const auto d = engine.desired_frames(xf, d1_set(), PositionId{0}, 1, 16);
    for (const auto& row : d) CHECK(row == xf);
}
