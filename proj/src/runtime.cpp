#include "szc/runtime.hpp"

#include <algorithm>
#include <string>

#include "szc/errors.hpp"
#include "szc/simd/kernels.hpp"

namespace szc {

void OverlapAddTail::emit(std::span<const double> full, std::span<double> out) {
    const std::size_t n = out.size();
    const std::size_t t = tail_.size();
    if (full.size() != n + t) throw ValidationError("overlap-add block has the wrong length");
    scratch_.assign(full.begin(), full.end());
    for (std::size_t i = 0; i < t; ++i) scratch_[i] += tail_[i];
    std::copy_n(scratch_.begin(), n, out.begin());
    std::copy_n(scratch_.begin() + static_cast<std::ptrdiff_t>(n), t, tail_.begin());
}

std::vector<double> frame_input(std::span<const double> signal, std::int64_t tau, std::size_t frame_length) {
    if (tau < 0) throw ValidationError("frame index must be non-negative");
    if (frame_length == 0) throw ValidationError("frame length must be positive");
    std::vector<double> frame(frame_length, 0.0);
    const std::size_t start = static_cast<std::size_t>(tau) * frame_length;
    if (start < signal.size()) {
        const std::size_t count = std::min(frame_length, signal.size() - start);
        std::copy_n(signal.begin() + static_cast<std::ptrdiff_t>(start), count, frame.begin());
    }
    return frame;
}

const Frames& PressureFrames::of(MicGroup group) const {
    switch (group) {
        case MicGroup::bright: return bright;
        case MicGroup::dark: return dark;
        case MicGroup::observation: return observation;
    }
    throw ValidationError("unknown microphone group");
}

FrameEngine::FrameEngine(const EngineShape& shape, ControlFilterSet initial_filters)
    : shape_(shape), filters_(std::move(initial_filters)) {
    if (shape_.frame_length == 0 || shape_.ir_length == 0 || shape_.filter_length == 0 ||
        shape_.num_loudspeakers == 0) {
        throw ValidationError("frame engine dimensions must be positive");
    }
    if (shape_.ir_length > shape_.frame_length + 1) {
        throw ValidationError("frame length N must satisfy K <= N + 1 (K=" +
                              std::to_string(shape_.ir_length) + ", N=" +
                              std::to_string(shape_.frame_length) + ")");
    }
    check_filters(filters_);
    const std::size_t K = shape_.ir_length;
    filter_tails_.assign(shape_.num_loudspeakers, OverlapAddTail(shape_.filter_length - 1));
    true_tails_.resize(3);
    for (MicGroup g : kAllGroups) {
        true_tails_[static_cast<int>(g)].assign(shape_.mics.of(g), OverlapAddTail(K - 1));
    }
    est_tails_.assign(shape_.dictionary_positions,
                      std::vector<OverlapAddTail>(shape_.mics.observation, OverlapAddTail(K - 1)));
    desired_tails_.assign(shape_.mics.bright, OverlapAddTail(K - 1));
}

void FrameEngine::check_filters(const ControlFilterSet& filters) const {
    if (filters.num_loudspeakers != shape_.num_loudspeakers ||
        filters.filter_length != shape_.filter_length ||
        filters.coefficients.size() != shape_.num_loudspeakers * shape_.filter_length) {
        throw ValidationError("control filter shape does not match the frame engine");
    }
}

void FrameEngine::set_filters(const ControlFilterSet& filters) {
    check_filters(filters);
    filters_ = filters;
}

Frames FrameEngine::apply_filters(std::span<const double> x_frame) {
    const std::size_t N = shape_.frame_length;
    if (x_frame.size() != N) throw ValidationError("input frame must have N samples");
    const std::size_t J = shape_.filter_length;
    Frames y(shape_.num_loudspeakers, std::vector<double>(N));
    std::vector<double> full(N + J - 1);
    for (std::size_t l = 0; l < shape_.num_loudspeakers; ++l) {
        std::fill(full.begin(), full.end(), 0.0);
        simd::convolve_add(x_frame, filters_.filter(l), full);
        filter_tails_[l].emit(full, y[l]);
    }
    return y;
}

std::vector<double> FrameEngine::propagate_one(const Frames& y, const IrSet& set, PositionId position,
                                               MicGroup group, std::size_t mic,
                                               OverlapAddTail& tail) const {
    const std::size_t N = shape_.frame_length;
    std::vector<double> full(N + shape_.ir_length - 1, 0.0);
    for (std::size_t l = 0; l < shape_.num_loudspeakers; ++l) {
        simd::convolve_add(y[l], set.ir(position, group, mic, l), full);
    }
    std::vector<double> out(N);
    tail.emit(full, out);
    return out;
}

PressureFrames FrameEngine::propagate_true(const Frames& y, const IrSet& truth, PositionId position) {
    if (position.index >= truth.num_positions()) throw ValidationError("true position out of range");
    if (truth.ir_length() != shape_.ir_length || truth.num_loudspeakers() != shape_.num_loudspeakers ||
        !(truth.manifest().mics == shape_.mics)) {
        throw ValidationError("true IR set does not match the frame engine shape");
    }
    if (y.size() != shape_.num_loudspeakers) throw ValidationError("expected one frame per loudspeaker");
    PressureFrames p;
    for (MicGroup g : kAllGroups) {
        Frames& dst = g == MicGroup::bright ? p.bright : g == MicGroup::dark ? p.dark : p.observation;
        auto& tails = true_tails_[static_cast<int>(g)];
        for (std::size_t m = 0; m < tails.size(); ++m) {
            dst.push_back(propagate_one(y, truth, position, g, m, tails[m]));
        }
    }
    return p;
}

std::vector<Frames> FrameEngine::estimate_observations(const Frames& y, const ObservationIrView& dictionary) {
    if (dictionary.num_positions() == 0) throw ValidationError("observation dictionary is empty");
    if (dictionary.num_positions() != est_tails_.size()) {
        throw ValidationError("observation dictionary size does not match the engine");
    }
    if (dictionary.ir_length() != shape_.ir_length || dictionary.num_mics() != shape_.mics.observation ||
        dictionary.num_loudspeakers() != shape_.num_loudspeakers) {
        throw ValidationError("observation dictionary shape does not match the engine");
    }
    std::vector<Frames> z(est_tails_.size());
    for (std::size_t s = 0; s < est_tails_.size(); ++s) {
        for (std::size_t m = 0; m < shape_.mics.observation; ++m) {
            z[s].push_back(propagate_one(y, dictionary.irset(), PositionId{s}, MicGroup::observation, m,
                                         est_tails_[s][m]));
        }
    }
    return z;
}

Frames FrameEngine::desired_frames(std::span<const double> x_frame, const IrSet& truth, PositionId position,
                                   std::size_t l_ref, std::size_t delay) {
    const std::size_t N = shape_.frame_length;
    if (x_frame.size() != N) throw ValidationError("input frame must have N samples");
    if (l_ref >= shape_.num_loudspeakers) throw ValidationError("reference loudspeaker out of range");
    if (position.index >= truth.num_positions()) throw ValidationError("true position out of range");
    if (tau_ == 0 && delay_tail_.size() == 0 && delay > 0) {
        delay_tail_ = OverlapAddTail(delay);
        delay_tail_length_ = delay;
    }
    if (delay != delay_tail_length_) throw ValidationError("modeling delay cannot change during a run");

    std::vector<double> shifted(N + delay, 0.0);
    std::copy(x_frame.begin(), x_frame.end(), shifted.begin() + static_cast<std::ptrdiff_t>(delay));
    std::vector<double> delayed(N);
    delay_tail_.emit(shifted, delayed);

    Frames d;
    std::vector<double> full(N + shape_.ir_length - 1);
    for (std::size_t m = 0; m < shape_.mics.bright; ++m) {
        std::fill(full.begin(), full.end(), 0.0);
        simd::convolve_add(delayed, truth.ir(position, MicGroup::bright, m, l_ref), full);
        std::vector<double> out(N);
        desired_tails_[m].emit(full, out);
        d.push_back(std::move(out));
    }
    return d;
}

std::span<double> FrameEngine::true_tail(MicGroup group, std::size_t mic) {
    return true_tails_.at(static_cast<int>(group)).at(mic).data();
}

std::span<double> FrameEngine::estimation_tail(PositionId position, std::size_t mic) {
    return est_tails_.at(position.index).at(mic).data();
}

}  // namespace szc
