#include "szc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <mutex>
#include <thread>

#include "szc/errors.hpp"
#include "szc/runtime.hpp"

namespace szc {

std::string to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::proposed: return "proposed";
        case Scheme::mix: return "mix";
        case Scheme::start_pos: return "start_pos";
        case Scheme::optimal: return "optimal";
    }
    return "?";
}

Scheme parse_scheme(const std::string& text) {
    for (Scheme s : kAllSchemes) {
        if (to_string(s) == text) return s;
    }
    throw ValidationError("unknown scheme '" + text + "'");
}

std::string to_string(InputKind kind) {
    switch (kind) {
        case InputKind::noise: return "noise";
        case InputKind::sweep: return "sweep";
        case InputKind::file: return "file";
    }
    return "?";
}

std::size_t TrajectorySpec::total_frames() const {
    std::size_t t = 0;
    for (const auto& s : segments) t += s.frames;
    return t;
}

PositionId TrajectorySpec::position_at(std::size_t tau) const {
    std::size_t end = 0;
    for (const auto& s : segments) {
        end += s.frames;
        if (tau < end) return s.position;
    }
    if (segments.empty()) throw ValidationError("trajectory is empty");
    return segments.back().position;
}

std::vector<std::size_t> TrajectorySpec::change_frames() const {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0 && segments[i].position != segments[i - 1].position) out.push_back(start);
        start += segments[i].frames;
    }
    return out;
}

void TrajectorySpec::validate(std::size_t num_true_positions) const {
    if (segments.empty()) throw ValidationError("trajectory has no segments");
    for (const auto& s : segments) {
        if (s.frames == 0) throw ValidationError("trajectory segment durations must be >= 1 frame");
        if (s.position.index >= num_true_positions) {
            throw ValidationError("trajectory position " + std::to_string(s.position.index) +
                                  " is not in the true grid");
        }
    }
}

TrajectorySpec TrajectorySpec::equal_intervals(const std::vector<std::size_t>& positions,
                                               std::size_t total_frames) {
    if (positions.empty()) throw ValidationError("trajectory needs at least one position");
    if (total_frames < positions.size()) throw ValidationError("fewer frames than trajectory segments");
    TrajectorySpec spec;
    const std::size_t each = total_frames / positions.size();
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const std::size_t frames = i + 1 == positions.size() ? total_frames - each * i : each;
        spec.segments.push_back({PositionId{positions[i]}, frames});
    }
    return spec;
}

TrajectorySpec load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "missing file");
    TrajectorySpec spec;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        long long pos = -1;
        long long frames = -1;
        if (!(row >> pos >> frames)) {
            if (first) {
                first = false;
                continue;
            }
            throw ValidationError(path.string() + ": malformed trajectory line '" + line + "'");
        }
        first = false;
        if (pos < 0 || frames < 1) throw ValidationError(path.string() + ": invalid trajectory values");
        spec.segments.push_back({PositionId{static_cast<std::size_t>(pos)}, static_cast<std::size_t>(frames)});
    }
    if (spec.segments.empty()) throw ValidationError(path.string() + ": trajectory is empty");
    return spec;
}

TrajectorySpec trajectory_preset(const std::string& name, std::size_t total_frames) {
    if (name == "case1") return TrajectorySpec::equal_intervals({1, 4, 5, 8}, total_frames);
    if (name == "static") return TrajectorySpec::equal_intervals({1}, total_frames);
    throw ValidationError("unknown trajectory preset '" + name + "'");
}

double ExperimentConfig::effective_silence_threshold() const {
    return silence_threshold.value_or(default_silence_threshold(frame_length));
}

ExperimentConfig desk_config() { return ExperimentConfig{}; }

ExperimentConfig lab_config() {
    ExperimentConfig c;
    c.design = DesignParams{1000, 1e-5, 0.5, 5, std::nullopt};
    c.frame_length = 9600;
    return c;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(master ^ mix(stream + 1));
}

std::vector<double> make_input_signal(const ExperimentConfig& config, std::uint64_t seed,
                                      std::size_t length, std::size_t sample_rate_hz) {
    std::vector<double> x(length, 0.0);
    switch (config.input) {
        case InputKind::noise: {
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (auto& v : x) v = normal(rng);
            break;
        }
        case InputKind::sweep: {
            // Exponential sine sweep from 50 Hz to 0.45 fs over the signal.
            const double fs = static_cast<double>(sample_rate_hz);
            const double f1 = 50.0;
            const double f2 = 0.45 * fs;
            const double duration = static_cast<double>(length) / fs;
            const double rate = std::log(f2 / f1);
            for (std::size_t n = 0; n < length; ++n) {
                const double t = static_cast<double>(n) / fs;
                x[n] = std::sin(2.0 * std::numbers::pi * f1 * duration / rate *
                                (std::exp(t / duration * rate) - 1.0));
            }
            break;
        }
        case InputKind::file: {
            const auto data = read_f64_file(config.input_file);
            for (double v : data) {
                if (!std::isfinite(v)) throw ValidationError(config.input_file.string() + ": non-finite sample");
            }
            std::copy_n(data.begin(), std::min(length, data.size()), x.begin());
            break;
        }
    }
    return x;
}

std::uint64_t signal_digest(const std::vector<double>& signal) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(signal.data());
    for (std::size_t i = 0; i < signal.size() * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

IrSet dictionary_positions(const IrSet& truth, const std::vector<std::size_t>& subset) {
    if (subset.empty()) return truth;
    std::vector<PositionId> keep;
    for (std::size_t id : subset) keep.push_back(PositionId{id});
    return subset_positions(truth, keep);
}

}  // namespace

DesignBank::DesignBank(const IrSet& truth, const ExperimentConfig& config)
    : dictionary_set(dictionary_positions(truth, config.dictionary_subset)),
      dictionary(build_dictionaries(dictionary_set, config.method, config.design)) {
    if (config.dictionary_subset.empty()) {
        true_filters = dictionary.filters;
    } else {
        true_filters = build_dictionaries(truth, config.method, config.design).filters;
    }
}

SchemeResult run_scheme(const ExperimentConfig& config, Scheme scheme, const IrSet& truth,
                        const DesignBank& bank, const TrajectorySpec& trajectory,
                        const std::vector<double>& input) {
    trajectory.validate(truth.num_positions());
    const std::size_t N = config.frame_length;
    const std::size_t T = trajectory.total_frames();
    const auto& dict = bank.dictionary.filters;
    const auto& dict_ids = dict.source_ids;
    const double eps = config.effective_silence_threshold();
    const std::size_t l_ref = config.design.l_ref;
    const std::size_t delay = config.design.effective_delay();

    EngineShape shape{N,
                      truth.ir_length(),
                      config.design.filter_length,
                      truth.num_loudspeakers(),
                      truth.manifest().mics,
                      scheme == Scheme::proposed ? bank.dictionary_set.num_positions() : 0};

    ControlFilterSet initial;
    std::optional<std::size_t> active;
    switch (scheme) {
        case Scheme::proposed:
        case Scheme::mix:
            initial = bank.dictionary.mix;
            break;
        case Scheme::start_pos:
        case Scheme::optimal:
            active = trajectory.position_at(0).index;
            initial = bank.true_filters.at(PositionId{*active});
            break;
    }
    FrameEngine engine(shape, initial);

    SchemeResult result;
    result.scheme = scheme;
    result.bright_signal.assign(truth.mic_count(MicGroup::bright), {});
    result.dark_signal.assign(truth.mic_count(MicGroup::dark), {});
    result.desired_signal.assign(truth.mic_count(MicGroup::bright), {});
    PositionId previous{0};

    for (std::size_t tau = 0; tau < T; ++tau) {
        const PositionId pos = trajectory.position_at(tau);
        if (scheme == Scheme::optimal && active != pos.index) {
            engine.set_filters(bank.true_filters.at(pos));
            active = pos.index;
        }
        result.active_filter.push_back(active);

        const auto x = frame_input(input, static_cast<std::int64_t>(tau), N);
        const auto y = engine.apply_filters(x);
        const auto p = engine.propagate_true(y, truth, pos);
        const auto d = engine.desired_frames(x, truth, pos, l_ref, delay);
        result.metrics.td_ac.push_back(td_ac(p.bright, p.dark));
        result.metrics.td_nsdp.push_back(td_nsdp(p.bright, d));
        for (std::size_t m = 0; m < p.bright.size(); ++m) {
            result.bright_signal[m].insert(result.bright_signal[m].end(), p.bright[m].begin(), p.bright[m].end());
            result.desired_signal[m].insert(result.desired_signal[m].end(), d[m].begin(), d[m].end());
        }
        for (std::size_t m = 0; m < p.dark.size(); ++m) {
            result.dark_signal[m].insert(result.dark_signal[m].end(), p.dark[m].begin(), p.dark[m].end());
        }

        if (scheme == Scheme::proposed) {
            const auto z = engine.estimate_observations(y, bank.dictionary.observation);
            const auto c = total_similarity(p.observation, z, eps);
            auto decision = select_position(c, previous, tau);
            update_filters(decision, dict, engine);
            previous = decision.selected;
            active = dict_ids.at(decision.selected.index);
            result.trace.push_back(std::move(decision));
        }
        engine.finish_frame();
    }

    const auto fs = truth.manifest().sample_rate_hz;
    auto ac = fd_ac(result.bright_signal, result.dark_signal, fs);
    auto nsdp = fd_nsdp(result.bright_signal, result.desired_signal, fs);
    result.metrics.freq_hz = std::move(ac.freq_hz);
    result.metrics.fd_ac = std::move(ac.db);
    result.metrics.fd_nsdp = std::move(nsdp.db);

    if (scheme == Scheme::proposed) {
        const auto changes = trajectory.change_frames();
        for (std::size_t i = 0; i < changes.size(); ++i) {
            const std::size_t start = changes[i];
            const std::size_t end = i + 1 < changes.size() ? changes[i + 1] : T;
            const std::size_t target = trajectory.position_at(start).index;
            std::optional<std::size_t> latency;
            if (std::find(dict_ids.begin(), dict_ids.end(), target) != dict_ids.end()) {
                for (std::size_t tau = start; tau < end; ++tau) {
                    if (dict_ids[result.trace[tau].selected.index] == target) {
                        latency = tau - start;
                        break;
                    }
                }
            }
            result.lock_latency.push_back(latency);
        }
    }
    return result;
}

const SchemeResult& RunResult::scheme(Scheme s) const {
    for (const auto& r : schemes) {
        if (r.scheme == s) return r;
    }
    throw ValidationError("scheme " + to_string(s) + " was not part of this run");
}

namespace {

void validate_config(const ExperimentConfig& config, const IrSet& truth) {
    config.design.validate(truth.num_loudspeakers());
    if (config.frame_length == 0) throw ValidationError("frame length must be positive");
    if (truth.ir_length() > config.frame_length + 1) {
        throw ValidationError("frame length N must satisfy K <= N + 1");
    }
    if (config.schemes.empty()) throw ValidationError("no schemes selected");
    for (std::size_t id : config.dictionary_subset) {
        if (id >= truth.num_positions()) throw ValidationError("dictionary subset id out of range");
    }
}

}  // namespace

RunResult run_case_i(const ExperimentConfig& config, const IrSet& truth, const TrajectorySpec& trajectory) {
    validate_config(config, truth);
    if (!config.dictionary_subset.empty()) {
        throw ValidationError("Case I uses the full grid as dictionary; drop the subset");
    }
    trajectory.validate(truth.num_positions());
    const DesignBank bank(truth, config);
    const auto input = make_input_signal(config, config.seed, trajectory.total_frames() * config.frame_length,
                                         truth.manifest().sample_rate_hz);

    RunResult result;
    result.case_name = "i";
    result.config = config;
    result.sample_rate_hz = truth.manifest().sample_rate_hz;
    IterationRecord record;
    record.input_seed = config.seed;
    record.trajectory = trajectory;
    record.input_digest = signal_digest(input);
    for (Scheme s : config.schemes) {
        result.schemes.push_back(run_scheme(config, s, truth, bank, trajectory, input));
        if (s == Scheme::proposed) {
            record.lock_latency = result.schemes.back().lock_latency;
            record.traces.push_back(result.schemes.back().trace);
        }
    }
    result.iterations.push_back(std::move(record));
    return result;
}

RunResult run_case_ii(const ExperimentConfig& config, const IrSet& truth) {
    validate_config(config, truth);
    if (config.mc_iterations == 0) throw ValidationError("Monte-Carlo iteration count must be >= 1");
    const DesignBank bank(truth, config);
    const std::size_t S = truth.num_positions();
    const std::size_t T = config.num_frames;
    const std::size_t segments = 4;

    std::vector<IterationRecord> records(config.mc_iterations);
    std::vector<std::vector<SchemeResult>> per_iteration(config.mc_iterations);

    auto run_iteration = [&](std::size_t it) {
        std::mt19937_64 rng(derive_seed(config.mc_seed, it));
        std::vector<std::size_t> pool(S);
        for (std::size_t i = 0; i < S; ++i) pool[i] = i;
        std::vector<std::size_t> picks;
        if (S >= segments) {
            // Partial Fisher-Yates: four distinct positions.
            for (std::size_t i = 0; i < segments; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, S - 1);
                std::swap(pool[i], pool[pick(rng)]);
                picks.push_back(pool[i]);
            }
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, S - 1);
            for (std::size_t i = 0; i < segments; ++i) {
                std::size_t p = pick(rng);
                while (S > 1 && !picks.empty() && p == picks.back()) p = pick(rng);
                picks.push_back(p);
            }
        }
        auto& rec = records[it];
        rec.iteration = it;
        rec.input_seed = derive_seed(config.seed, it);
        rec.trajectory = TrajectorySpec::equal_intervals(picks, T);
        const auto input = make_input_signal(config, rec.input_seed, T * config.frame_length,
                                             truth.manifest().sample_rate_hz);
        rec.input_digest = signal_digest(input);
        for (Scheme s : config.schemes) {
            auto r = run_scheme(config, s, truth, bank, rec.trajectory, input);
            if (s == Scheme::proposed) {
                rec.lock_latency = r.lock_latency;
                rec.traces.push_back(r.trace);
            }
            r.bright_signal.clear();
            r.dark_signal.clear();
            r.desired_signal.clear();
            per_iteration[it].push_back(std::move(r));
        }
    };

    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), config.mc_iterations));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t it = next++; it < config.mc_iterations; it = next++) {
                try {
                    run_iteration(it);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    // Deterministic reduction in iteration order.
    RunResult result;
    result.case_name = "ii";
    result.config = config;
    result.sample_rate_hz = truth.manifest().sample_rate_hz;
    const double inv = 1.0 / static_cast<double>(config.mc_iterations);
    for (std::size_t k = 0; k < config.schemes.size(); ++k) {
        SchemeResult agg;
        agg.scheme = config.schemes[k];
        agg.metrics = per_iteration[0][k].metrics;
        for (std::size_t it = 1; it < config.mc_iterations; ++it) {
            const auto& m = per_iteration[it][k].metrics;
            for (std::size_t i = 0; i < m.td_ac.size(); ++i) {
                agg.metrics.td_ac[i] += m.td_ac[i];
                agg.metrics.td_nsdp[i] += m.td_nsdp[i];
            }
            for (std::size_t i = 0; i < m.fd_ac.size(); ++i) {
                agg.metrics.fd_ac[i] += m.fd_ac[i];
                agg.metrics.fd_nsdp[i] += m.fd_nsdp[i];
            }
        }
        for (auto* series : {&agg.metrics.td_ac, &agg.metrics.td_nsdp, &agg.metrics.fd_ac, &agg.metrics.fd_nsdp}) {
            for (double& v : *series) v *= inv;
        }
        for (std::size_t it = 0; it < config.mc_iterations; ++it) {
            const auto& r = per_iteration[it][k];
            agg.lock_latency.insert(agg.lock_latency.end(), r.lock_latency.begin(), r.lock_latency.end());
        }
        result.schemes.push_back(std::move(agg));
    }
    result.iterations = std::move(records);
    return result;
}

}  // namespace szc
