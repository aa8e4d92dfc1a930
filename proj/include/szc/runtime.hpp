#pragma once

// Frame-based deployment engine. The input is cut into non-overlapping
// frames of N samples; every convolution stage (control filters, true room
// propagation, per-position observation estimates, desired signal) keeps
// its own overlap-add tail so that concatenated frame outputs equal the
// full-signal convolution when nothing switches.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "szc/filterdesign.hpp"
#include "szc/irdata.hpp"

namespace szc {

/// Rows of equal-length frames, e.g. one per loudspeaker or microphone.
using Frames = std::vector<std::vector<double>>;

/// Carries the part of a block convolution that spills past the current
/// frame. Tail length is T-1 for a T-tap response.
class OverlapAddTail {
public:
    OverlapAddTail() = default;
    explicit OverlapAddTail(std::size_t length) : tail_(length, 0.0) {}

    /// `full` holds the frame's convolution (frame_length + tail length
    /// samples). Writes the first frame_length samples plus the stored tail
    /// to `out` and keeps the remainder as the new tail.
    void emit(std::span<const double> full, std::span<double> out);

    std::span<double> data() { return tail_; }
    std::span<const double> data() const { return tail_; }
    std::size_t size() const { return tail_.size(); }

private:
    std::vector<double> tail_;
    std::vector<double> scratch_;
};

/// The n-th (0-based) non-overlapping frame of `signal`; samples past the
/// end of the signal are zero.
std::vector<double> frame_input(std::span<const double> signal, std::int64_t tau, std::size_t frame_length);

struct PressureFrames {
    Frames bright;
    Frames dark;
    Frames observation;

    const Frames& of(MicGroup group) const;
};

struct EngineShape {
    std::size_t frame_length = 256;   // N
    std::size_t ir_length = 256;      // K
    std::size_t filter_length = 32;   // J
    std::size_t num_loudspeakers = 3; // L
    MicCounts mics{2, 2, 2};
    std::size_t dictionary_positions = 0;  // S of the observation dictionary (0: no tracking)
};

class FrameEngine {
public:
    /// Throws ValidationError when K > N + 1 or the filter shape does not
    /// match.
    FrameEngine(const EngineShape& shape, ControlFilterSet initial_filters);

    const EngineShape& shape() const { return shape_; }
    std::size_t frame_index() const { return tau_; }

    /// y_l = q_l * x through the filter tails. Tails produced under a
    /// previous filter are still added after a switch.
    Frames apply_filters(std::span<const double> x_frame);

    /// Pressures at every true microphone. The true position may change
    /// between calls; the old position's tail is still added.
    PressureFrames propagate_true(const Frames& y, const IrSet& truth, PositionId position);

    /// z^{(s)}_{m_o} for every dictionary position, each position with its
    /// own tails. Result is indexed [s][m_o][n].
    std::vector<Frames> estimate_observations(const Frames& y, const ObservationIrView& dictionary);

    /// Signal the reference loudspeaker alone would produce at the bright
    /// mics of the true position, delayed by `delay` samples.
    Frames desired_frames(std::span<const double> x_frame, const IrSet& truth, PositionId position,
                          std::size_t l_ref, std::size_t delay);

    /// Advances the frame counter; call once per processed frame.
    void finish_frame() { ++tau_; }

    const ControlFilterSet& active_filters() const { return filters_; }
    /// Installs filters for the next frame. Existing tails are kept.
    void set_filters(const ControlFilterSet& filters);

    std::span<double> filter_tail(std::size_t speaker) { return filter_tails_.at(speaker).data(); }
    std::span<double> true_tail(MicGroup group, std::size_t mic);
    std::span<double> estimation_tail(PositionId position, std::size_t mic);

private:
    void check_filters(const ControlFilterSet& filters) const;
    std::vector<double> propagate_one(const Frames& y, const IrSet& set, PositionId position,
                                      MicGroup group, std::size_t mic, OverlapAddTail& tail) const;

    EngineShape shape_;
    std::size_t tau_ = 0;
    ControlFilterSet filters_;
    std::vector<OverlapAddTail> filter_tails_;           // [L]
    std::vector<std::vector<OverlapAddTail>> true_tails_; // [group][mic]
    std::vector<std::vector<OverlapAddTail>> est_tails_;  // [s][m_o]
    OverlapAddTail delay_tail_;
    std::size_t delay_tail_length_ = 0;
    std::vector<OverlapAddTail> desired_tails_;           // [m_b]
};

}  // namespace szc
