#include "szc/tracker.hpp"

#include <algorithm>
#include <cstdio>

#include "szc/errors.hpp"
#include "szc/simd/kernels.hpp"

namespace szc {

double ncs(std::span<const double> p, std::span<const double> z, double epsilon) {
    if (p.size() != z.size()) throw ValidationError("ncs: frames must have equal length");
    const double pp = simd::dot(p, p);
    const double zz = simd::dot(z, z);
    const double np = std::sqrt(pp);
    const double nz = std::sqrt(zz);
    if (np < epsilon || nz < epsilon) return 0.0;
    const double c = simd::dot(p, z) / (np * nz);
    // Rounding can push |c| a few ulps past 1.
    return std::clamp(c, -1.0, 1.0);
}

std::vector<double> total_similarity(const Frames& observed, const std::vector<Frames>& estimates,
                                     double epsilon) {
    std::vector<double> c(estimates.size(), 0.0);
    for (std::size_t s = 0; s < estimates.size(); ++s) {
        if (estimates[s].size() != observed.size()) {
            throw ValidationError("total_similarity: observation mic count mismatch");
        }
        for (std::size_t m = 0; m < observed.size(); ++m) {
            c[s] += ncs(observed[m], estimates[s][m], epsilon);
        }
    }
    return c;
}

TrackerDecision select_position(std::span<const double> similarity, PositionId previous, std::size_t tau) {
    if (similarity.empty()) throw ValidationError("select_position: empty similarity vector");
    TrackerDecision d;
    d.tau = tau;
    d.similarity.assign(similarity.begin(), similarity.end());
    if (std::all_of(similarity.begin(), similarity.end(), [](double v) { return v == 0.0; })) {
        d.selected = previous.index < similarity.size() ? previous : PositionId{0};
        d.held_previous = true;
        return d;
    }
    std::size_t best = 0;
    for (std::size_t s = 1; s < similarity.size(); ++s) {
        if (similarity[s] > similarity[best]) best = s;
    }
    if (previous.index < similarity.size() && similarity[previous.index] == similarity[best]) {
        best = previous.index;
    }
    d.selected = PositionId{best};
    return d;
}

void update_filters(const TrackerDecision& decision, const FilterDictionary& dict, FrameEngine& engine) {
    const auto& next = dict.at(decision.selected);
    if (engine.active_filters().coefficients == next.coefficients) return;
    engine.set_filters(next);
}

void write_tracker_trace(std::ostream& out, std::span<const TrackerDecision> decisions) {
    const std::size_t S = decisions.empty() ? 0 : decisions.front().similarity.size();
    out << "tau,selected,held_previous";
    for (std::size_t s = 0; s < S; ++s) out << ",c_" << s;
    out << '\n';
    char buf[32];
    for (const auto& d : decisions) {
        out << d.tau << ',' << d.selected.index << ',' << (d.held_previous ? 1 : 0);
        for (double c : d.similarity) {
            std::snprintf(buf, sizeof buf, "%.17g", c);
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace szc
