#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "szc/errors.hpp"
#include "szc/harness.hpp"

namespace szc {
namespace {

using nlohmann::ordered_json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError(path.string(), "write failed");
}

ordered_json latency_json(const std::vector<std::optional<std::size_t>>& latencies) {
    ordered_json arr = ordered_json::array();
    for (const auto& l : latencies) {
        if (l) arr.push_back(*l);
        else arr.push_back(nullptr);
    }
    return arr;
}

ordered_json config_json(const RunResult& r) {
    const auto& c = r.config;
    ordered_json schemes = ordered_json::array();
    for (Scheme s : c.schemes) schemes.push_back(to_string(s));
    return ordered_json{{"method", to_string(c.method)},
                        {"schemes", schemes},
                        {"filter_length_J", c.design.filter_length},
                        {"lambda", c.design.lambda},
                        {"zeta", c.design.zeta},
                        {"l_ref", c.design.l_ref},
                        {"delta", c.design.effective_delay()},
                        {"frame_length_N", c.frame_length},
                        {"num_frames", c.num_frames},
                        {"input", to_string(c.input)},
                        {"input_file", c.input_file.string()},
                        {"seed", c.seed},
                        {"dictionary_subset", c.dictionary_subset},
                        {"mc_iterations", c.mc_iterations},
                        {"mc_seed", c.mc_seed},
                        {"silence_threshold", c.effective_silence_threshold()},
                        {"sample_rate_hz", r.sample_rate_hz}};
}

}  // namespace

void emit_report(const RunResult& result, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError(out_dir.string(), "cannot create directory: " + ec.message());
    const std::string method = to_string(result.config.method);

    {
        const auto path = out_dir / "td_metrics.csv";
        auto out = open_out(path);
        out << "tau,td_ac_db,td_nsdp_db,scheme,method\n";
        for (const auto& s : result.schemes) {
            for (std::size_t t = 0; t < s.metrics.td_ac.size(); ++t) {
                out << t << ',' << fmt(s.metrics.td_ac[t]) << ',' << fmt(s.metrics.td_nsdp[t]) << ','
                    << to_string(s.scheme) << ',' << method << '\n';
            }
        }
        finish(out, path);
    }
    {
        const auto path = out_dir / "fd_metrics.csv";
        auto out = open_out(path);
        out << "freq_hz,fd_ac_db,fd_nsdp_db,scheme,method\n";
        for (const auto& s : result.schemes) {
            for (std::size_t k = 0; k < s.metrics.fd_ac.size(); ++k) {
                out << fmt(s.metrics.freq_hz[k]) << ',' << fmt(s.metrics.fd_ac[k]) << ','
                    << fmt(s.metrics.fd_nsdp[k]) << ',' << to_string(s.scheme) << ',' << method << '\n';
            }
        }
        finish(out, path);
    }

    const bool has_proposed =
        std::find(result.config.schemes.begin(), result.config.schemes.end(), Scheme::proposed) !=
        result.config.schemes.end();
    if (has_proposed) {
        const auto path = out_dir / "tracker_trace.csv";
        auto out = open_out(path);
        if (result.iterations.size() == 1) {
            write_tracker_trace(out, result.iterations.front().traces.front());
        } else {
            // Monte-Carlo runs prefix each trace row with its iteration.
            bool header = true;
            for (const auto& rec : result.iterations) {
                std::ostringstream block;
                write_tracker_trace(block, rec.traces.front());
                std::istringstream lines(block.str());
                std::string line;
                bool first = true;
                while (std::getline(lines, line)) {
                    if (first) {
                        first = false;
                        if (header) out << "iteration," << line << '\n';
                        header = false;
                        continue;
                    }
                    out << rec.iteration << ',' << line << '\n';
                }
            }
        }
        finish(out, path);
    }

    ordered_json schemes = ordered_json::object();
    std::size_t first_change = 0;
    if (result.iterations.size() == 1) {
        const auto changes = result.iterations.front().trajectory.change_frames();
        if (!changes.empty()) first_change = changes.front();
    }
    for (const auto& s : result.schemes) {
        const auto& m = s.metrics;
        std::vector<double> after(m.td_ac.begin() + static_cast<std::ptrdiff_t>(std::min(first_change, m.td_ac.size())),
                                  m.td_ac.end());
        ordered_json entry{{"td_ac_mean_db", mean(m.td_ac)},
                           {"td_ac_median_db", median(m.td_ac)},
                           {"td_nsdp_mean_db", mean(m.td_nsdp)},
                           {"td_nsdp_median_db", median(m.td_nsdp)},
                           {"fd_ac_mean_db", mean(m.fd_ac)},
                           {"fd_ac_median_db", median(m.fd_ac)},
                           {"fd_nsdp_mean_db", mean(m.fd_nsdp)},
                           {"fd_nsdp_median_db", median(m.fd_nsdp)}};
        if (result.iterations.size() == 1) entry["td_ac_mean_after_first_change_db"] = mean(after);
        if (s.scheme == Scheme::proposed) entry["lock_latency_frames"] = latency_json(s.lock_latency);
        schemes[to_string(s.scheme)] = entry;
    }
    ordered_json iterations = ordered_json::array();
    for (const auto& rec : result.iterations) {
        ordered_json traj = ordered_json::array();
        for (const auto& seg : rec.trajectory.segments) {
            traj.push_back({{"position", seg.position.index}, {"frames", seg.frames}});
        }
        char digest[20];
        std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(rec.input_digest));
        iterations.push_back({{"iteration", rec.iteration},
                              {"input_seed", rec.input_seed},
                              {"input_digest", digest},
                              {"trajectory", traj},
                              {"lock_latency_frames", latency_json(rec.lock_latency)}});
    }
    ordered_json summary{{"case", result.case_name},
                         {"config", config_json(result)},
                         {"schemes", schemes},
                         {"iterations", iterations}};
    const auto path = out_dir / "summary.json";
    auto out = open_out(path);
    out << summary.dump(2) << '\n';
    finish(out, path);
}

}  // namespace szc
