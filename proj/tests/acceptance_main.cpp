// One line per acceptance criterion; non-zero exit if any fails.

#include <cstdio>
#include <cstring>
#include <string>

#include "szc/verify.hpp"

int main(int argc, char** argv) {
    szc::verify::AcceptanceOptions options;
    for (int i = 1; i + 1 < argc; i += 2) {
        if (std::strcmp(argv[i], "--cli") == 0) options.cli_path = argv[i + 1];
        else if (std::strcmp(argv[i], "--scratch") == 0) options.scratch_dir = argv[i + 1];
    }
    int failed = 0;
    const auto results = szc::verify::run_acceptance(options, [&](const szc::verify::CriterionResult& r) {
        std::printf("[%s] criterion %2d: %s -- %s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(),
                    r.detail.c_str());
        std::fflush(stdout);
        if (!r.passed) ++failed;
    });
    std::printf("%zu/%zu criteria passed\n", results.size() - static_cast<std::size_t>(failed), results.size());
    return failed == 0 ? 0 : 1;
}
