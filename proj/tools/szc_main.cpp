// szc: scene generation, filter design, experiment runs and the acceptance suite.

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "szc/errors.hpp"
#include "szc/filterdesign.hpp"
#include "szc/harness.hpp"
#include "szc/irdata.hpp"
#include "szc/roomsim.hpp"
#include "szc/simd/kernels.hpp"
#include "szc/verify.hpp"

namespace fs = std::filesystem;
using namespace szc;

namespace {

struct DesignFlags {
    std::string method = "pm";
    std::optional<double> zeta, lambda;
    std::optional<std::size_t> lref, delta, filter_len;

    void attach(CLI::App* app) {
        app->add_option("--method", method, "acc or pm")->check(CLI::IsMember({"acc", "pm"}));
        app->add_option("--zeta", zeta, "PM bright/dark weight in [0,1]");
        app->add_option("--lambda", lambda, "Tikhonov regularization");
        app->add_option("--lref", lref, "reference loudspeaker (0-based)");
        app->add_option("--delta", delta, "modeling delay in samples (default J/2)");
        app->add_option("--filter-len", filter_len, "control filter length J");
    }

    void apply(DesignParams& p) const {
        if (zeta) p.zeta = *zeta;
        if (lambda) p.lambda = *lambda;
        if (lref) p.l_ref = *lref;
        if (delta) p.delay = *delta;
        if (filter_len) p.filter_length = *filter_len;
    }
};

std::vector<std::size_t> parse_ids(const std::string& text) {
    std::vector<std::size_t> ids;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw ValidationError("bad position id '" + item + "'");
        ids.push_back(static_cast<std::size_t>(v));
    }
    return ids;
}

Scene scene_for(const std::string& scene_file, const std::string& preset) {
    if (!scene_file.empty()) return load_scene(scene_file);
    if (preset == "d1") return desk_scene_d1();
    throw ValidationError("unknown scene preset '" + preset + "'");
}

void dump_frames(const RunResult& result, const fs::path& dir) {
    fs::create_directories(dir);
    for (const auto& s : result.schemes) {
        const std::string base = to_string(s.scheme);
        auto dump = [&](const Frames& rows, const char* tag) {
            for (std::size_t m = 0; m < rows.size(); ++m) {
                write_f64_file(dir / (base + "_" + tag + "_m" + std::to_string(m) + ".f64"), rows[m]);
            }
        };
        dump(s.bright_signal, "bright");
        dump(s.dark_signal, "dark");
        dump(s.desired_signal, "desired");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dictionary-based sound zone control with listener tracking"};
    app.require_subcommand(1);
    std::string simd = "auto";
    app.add_option("--simd", simd, "kernel backend: auto, scalar or avx2")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    // gen-scene
    auto* gen = app.add_subcommand("gen-scene", "simulate the IrSet of a scene");
    std::string gen_scene, gen_preset = "d1", gen_out;
    gen->add_option("--scene", gen_scene, "scene.json")->check(CLI::ExistingFile);
    gen->add_option("--preset", gen_preset, "built-in scene when --scene is absent (d1)");
    gen->add_option("--out", gen_out, "output IrSet directory")->required();

    // design
    auto* design = app.add_subcommand("design", "design the filter dictionary of an IrSet");
    std::string design_irset, design_out;
    DesignFlags design_flags;
    design->add_option("--irset", design_irset, "IrSet directory")->required();
    design->add_option("--out", design_out, "dictionary directory")->required();
    design_flags.attach(design);

    // run
    auto* run = app.add_subcommand("run", "run a Case I or Case II experiment");
    std::string run_irset, run_scene, run_case = "i", run_scheme = "all", run_traj = "case1", run_input = "noise";
    std::string run_input_file, run_subset, run_out, run_preset = "desk", run_dump;
    std::optional<std::uint64_t> run_seed, run_mc_seed;
    std::optional<std::size_t> run_mc, run_frames, run_frame_len;
    DesignFlags run_flags;
    auto* irset_opt = run->add_option("--irset", run_irset, "IrSet directory");
    auto* scene_opt = run->add_option("--scene", run_scene, "scene.json simulated on the fly")->check(CLI::ExistingFile);
    irset_opt->excludes(scene_opt);
    run->add_option("--case", run_case, "i or ii")->check(CLI::IsMember({"i", "ii"}));
    run->add_option("--scheme", run_scheme, "all|proposed|mix|start_pos|optimal");
    run->add_option("--traj", run_traj, "trajectory CSV file or preset (case1, static)");
    run->add_option("--input", run_input, "noise|sweep|file")->check(CLI::IsMember({"noise", "sweep", "file"}));
    run->add_option("--input-file", run_input_file, "raw f64 mono input for --input file");
    run->add_option("--seed", run_seed, "input signal seed");
    run->add_option("--mc", run_mc, "Monte-Carlo iterations (Case II)");
    run->add_option("--mc-seed", run_mc_seed, "trajectory master seed (Case II)");
    run->add_option("--subset", run_subset, "dictionary position ids, comma separated");
    run->add_option("--frames", run_frames, "number of frames T");
    run->add_option("--frame-len", run_frame_len, "frame length N");
    run->add_option("--preset", run_preset, "desk or lab defaults")->check(CLI::IsMember({"desk", "lab"}));
    run->add_option("--dump-frames", run_dump, "write per-scheme signals as raw f64");
    run->add_option("--out", run_out, "output directory")->required();
    run_flags.attach(run);

    // verify
    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    std::string verify_scratch = "szc_verify_scratch";
    bool verify_cli = false;
    verify->add_option("--scratch", verify_scratch, "scratch directory");
    verify->add_flag("--with-cli", verify_cli, "also rerun this executable for the determinism check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simd == "scalar") simd::select(simd::Backend::scalar);
        if (simd == "avx2") simd::select(simd::Backend::avx2);

        if (*gen) {
            const Scene scene = scene_for(gen_scene, gen_preset);
            save_irset(build_scene_irset(scene.room, scene.geometry), gen_out);
            std::cout << "wrote " << gen_out << "\n";
        } else if (*design) {
            const IrSet set = load_irset(design_irset);
            DesignParams params = desk_config().design;
            design_flags.apply(params);
            const auto dicts = build_dictionaries(set, parse_design_method(design_flags.method), params);
            save_dictionary(dicts.filters, design_out);
            std::cout << "wrote " << dicts.filters.entries.size() << " filters to " << design_out << "\n";
        } else if (*run) {
            ExperimentConfig config = run_preset == "lab" ? lab_config() : desk_config();
            config.method = parse_design_method(run_flags.method);
            run_flags.apply(config.design);
            if (run_scheme != "all") config.schemes = {parse_scheme(run_scheme)};
            if (run_input == "sweep") config.input = InputKind::sweep;
            if (run_input == "file") {
                if (run_input_file.empty()) throw ValidationError("--input file needs --input-file");
                config.input = InputKind::file;
                config.input_file = run_input_file;
            }
            if (run_seed) config.seed = *run_seed;
            if (run_mc) config.mc_iterations = *run_mc;
            if (run_mc_seed) config.mc_seed = *run_mc_seed;
            if (run_frames) config.num_frames = *run_frames;
            if (run_frame_len) config.frame_length = *run_frame_len;
            if (!run_subset.empty()) config.dictionary_subset = parse_ids(run_subset);

            IrSet truth = [&] {
                if (!run_irset.empty()) return load_irset(run_irset);
                if (!run_scene.empty()) {
                    const Scene scene = load_scene(run_scene);
                    return build_scene_irset(scene.room, scene.geometry);
                }
                const Scene scene = desk_scene_d1();
                return build_scene_irset(scene.room, scene.geometry);
            }();

            RunResult result;
            if (run_case == "i") {
                const TrajectorySpec traj = fs::exists(run_traj) ? load_trajectory(run_traj)
                                                                 : trajectory_preset(run_traj, config.num_frames);
                if (!run_frames) config.num_frames = traj.total_frames();
                result = run_case_i(config, truth, traj);
            } else {
                result = run_case_ii(config, truth);
            }
            emit_report(result, run_out);
            if (!run_dump.empty()) dump_frames(result, run_dump);
            std::cout << "wrote " << run_out << "\n";
        } else if (*verify) {
            verify::AcceptanceOptions options;
            options.scratch_dir = verify_scratch;
            if (verify_cli) options.cli_path = fs::canonical("/proc/self/exe").string();
            std::size_t failed = 0;
            verify::run_acceptance(options, [&](const verify::CriterionResult& r) {
                std::printf("[%s] %2d %s: %s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str());
                std::fflush(stdout);
                if (!r.passed) ++failed;
            });
            return failed == 0 ? 0 : 1;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
