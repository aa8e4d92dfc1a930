#pragma once

// Audio-only listener tracking: normalized cosine similarity between the
// observed and the per-position estimated observation frames, summed over
// observation mics, then an argmax over dictionary positions.

#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "szc/filterdesign.hpp"
#include "szc/runtime.hpp"

namespace szc {

/// Default silence threshold for frames of `frame_length` samples.
inline double default_silence_threshold(std::size_t frame_length) {
    return 1e-9 * std::sqrt(static_cast<double>(frame_length));
}

/// p.z / (|p| |z|), or 0 when either norm is below `epsilon`.
double ncs(std::span<const double> p, std::span<const double> z, double epsilon);

/// c^{(s)} = sum_{m_o} ncs(p_{m_o}, z^{(s)}_{m_o}). `estimates` is indexed
/// [s][m_o][n] as returned by FrameEngine::estimate_observations.
std::vector<double> total_similarity(const Frames& observed, const std::vector<Frames>& estimates,
                                     double epsilon);

struct TrackerDecision {
    std::size_t tau = 0;
    std::vector<double> similarity;
    PositionId selected;
    bool held_previous = false;
};

/// Argmax of `similarity`; ties go to `previous`, then to the lowest
/// index. An all-zero vector (silence) holds `previous`.
TrackerDecision select_position(std::span<const double> similarity, PositionId previous, std::size_t tau = 0);

/// Installs dict[decision.selected] as the engine's filter for the next
/// frame.
void update_filters(const TrackerDecision& decision, const FilterDictionary& dict, FrameEngine& engine);

/// CSV trace: tau, selected, held_previous, c_0..c_{S-1}.
void write_tracker_trace(std::ostream& out, std::span<const TrackerDecision> decisions);

}  // namespace szc
