#pragma once

// Experiment orchestration: trajectories, the four deployment schemes, the
// full-grid (Case I) and subset-dictionary Monte-Carlo (Case II) protocols.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "szc/filterdesign.hpp"
#include "szc/irdata.hpp"
#include "szc/metrics.hpp"
#include "szc/tracker.hpp"

namespace szc {

enum class Scheme { proposed, mix, start_pos, optimal };
inline constexpr Scheme kAllSchemes[] = {Scheme::proposed, Scheme::mix, Scheme::start_pos, Scheme::optimal};
std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& text);

struct TrajectorySegment {
    PositionId position;
    std::size_t frames = 0;
};

struct TrajectorySpec {
    std::vector<TrajectorySegment> segments;

    std::size_t total_frames() const;
    PositionId position_at(std::size_t tau) const;
    /// Frame indices at which the position changes (excludes frame 0).
    std::vector<std::size_t> change_frames() const;
    void validate(std::size_t num_true_positions) const;

    /// `positions` visited for equal numbers of frames; the remainder of
    /// total_frames goes to the last segment.
    static TrajectorySpec equal_intervals(const std::vector<std::size_t>& positions, std::size_t total_frames);
};

/// Reads "position,frames" lines; a non-numeric first line is a header.
TrajectorySpec load_trajectory(const std::filesystem::path& path);

/// Named trajectories: "case1" is the desk-grid Case I walk 1 -> 4 -> 5 -> 8.
TrajectorySpec trajectory_preset(const std::string& name, std::size_t total_frames);

enum class InputKind { noise, sweep, file };
std::string to_string(InputKind kind);

struct ExperimentConfig {
    DesignMethod method = DesignMethod::pm;
    std::vector<Scheme> schemes{kAllSchemes, kAllSchemes + 4};
    DesignParams design{32, 1e-5, 0.5, 1, std::nullopt};
    std::size_t frame_length = 256;  // N
    std::size_t num_frames = 40;     // T
    InputKind input = InputKind::noise;
    std::filesystem::path input_file;
    std::uint64_t seed = 1;
    /// Dictionary positions as ids into the true grid; empty means all.
    std::vector<std::size_t> dictionary_subset;
    std::size_t mc_iterations = 50;
    std::uint64_t mc_seed = 7;
    std::optional<double> silence_threshold;

    double effective_silence_threshold() const;
};

/// Desk-scale defaults for scene D1.
ExperimentConfig desk_config();
/// Lab-scale design and framing: J=1000, N=9600, lambda=1e-5, zeta=0.5,
/// sixth loudspeaker as reference.
ExperimentConfig lab_config();

std::vector<double> make_input_signal(const ExperimentConfig& config, std::uint64_t seed,
                                      std::size_t length, std::size_t sample_rate_hz);
/// FNV-1a over the raw bytes of a signal.
std::uint64_t signal_digest(const std::vector<double>& signal);

/// Designs shared by all schemes of a run: per-position filters on the
/// true grid (optimal and start-position schemes) and the tracking
/// dictionary with its mix filter on the dictionary subset.
struct DesignBank {
    IrSet dictionary_set;
    FilterDictionary true_filters;
    Dictionaries dictionary;  // references dictionary_set

    DesignBank(const IrSet& truth, const ExperimentConfig& config);
    DesignBank(const DesignBank&) = delete;
    DesignBank& operator=(const DesignBank&) = delete;
};

struct SchemeResult {
    Scheme scheme = Scheme::proposed;
    MetricsSeries metrics;
    std::vector<TrackerDecision> trace;  // proposed scheme only
    /// Frames from each position change until the tracker selects the new
    /// position; nullopt for changes to positions outside the dictionary or
    /// never reached before the next change.
    std::vector<std::optional<std::size_t>> lock_latency;
    /// True-grid id of the filter active in each frame; nullopt while the
    /// mix filter is active.
    std::vector<std::optional<std::size_t>> active_filter;
    Frames bright_signal, dark_signal, desired_signal;  // concatenated frames
};

/// Runs one scheme over a trajectory on a shared input signal.
SchemeResult run_scheme(const ExperimentConfig& config, Scheme scheme, const IrSet& truth,
                        const DesignBank& bank, const TrajectorySpec& trajectory,
                        const std::vector<double>& input);

struct IterationRecord {
    std::size_t iteration = 0;
    std::uint64_t input_seed = 0;
    TrajectorySpec trajectory;
    std::uint64_t input_digest = 0;
    std::vector<std::optional<std::size_t>> lock_latency;  // proposed scheme
    std::vector<std::vector<TrackerDecision>> traces;     // proposed scheme only
};

struct RunResult {
    std::string case_name;  // "i" or "ii"
    ExperimentConfig config;
    std::size_t sample_rate_hz = 0;
    std::vector<SchemeResult> schemes;  // metrics averaged over iterations for Case II
    std::vector<IterationRecord> iterations;

    const SchemeResult& scheme(Scheme s) const;
};

/// Full-grid dictionary, one trajectory, every configured scheme.
RunResult run_case_i(const ExperimentConfig& config, const IrSet& truth, const TrajectorySpec& trajectory);

/// Subset dictionary, Monte-Carlo over random four-position trajectories
/// drawn from the full grid; metrics averaged frame- and bin-wise.
RunResult run_case_ii(const ExperimentConfig& config, const IrSet& truth);

/// Per-iteration seed derived from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Writes td_metrics.csv, fd_metrics.csv, summary.json and, when the
/// proposed scheme ran, tracker_trace.csv.
void emit_report(const RunResult& result, const std::filesystem::path& out_dir);

}  // namespace szc
