#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "szc/errors.hpp"
#include "szc/irdata.hpp"

using namespace szc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("szc_irdata_" + name);
    fs::remove_all(dir);
    return dir;
}

Manifest small_manifest(std::size_t positions, std::size_t K, std::size_t L, MicCounts mics) {
    Manifest m;
    m.sample_rate_hz = 8000;
    m.ir_length = K;
    m.num_loudspeakers = L;
    m.mics = mics;
    for (std::size_t s = 0; s < positions; ++s) m.grid.push_back({0.1 * static_cast<double>(s), 1.0, 1.2});
    return m;
}

IrSet random_set(std::mt19937_64& rng, const Manifest& m) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> samples(m.num_positions() * m.mics.total() * m.num_loudspeakers * m.ir_length);
    for (auto& v : samples) v = g(rng);
    return IrSet(m, std::move(samples));
}

}  // namespace

TEST_CASE("single-position file size") {
    std::mt19937_64 rng(1);
    const auto set = random_set(rng, small_manifest(1, 4, 1, {1, 1, 1}));
    const auto dir = scratch("size");
    save_irset(set, dir);
    CHECK(fs::file_size(dir / "pos_0.f64") == 96);
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("sample layout is [group][mic][speaker][sample]") {
    IrSet set = IrSet::zeros(small_manifest(2, 3, 2, {1, 2, 1}));
    set.mutable_ir(PositionId{1}, MicGroup::dark, 1, 0)[2] = 7.0;
    const auto block = set.position_block(PositionId{1});
    // bright: 1 mic x 2 speakers x 3, dark mic 0: 6, dark mic 1 speaker 0 starts at 12.
    CHECK(block[12 + 2] == 7.0);
    CHECK(set.samples_per_position() == 4 * 2 * 3);
}

TEST_CASE("round trip is bit exact") {
    std::mt19937_64 rng(2);
    const auto set = random_set(rng, small_manifest(3, 17, 2, {2, 1, 3}));
    const auto dir = scratch("roundtrip");
    save_irset(set, dir);
    const auto loaded = load_irset(dir);
    CHECK(loaded == set);
    CHECK(loaded.samples() == set.samples());
}

TEST_CASE("randomized shapes round trip") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> pick(1, 5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = small_manifest(pick(rng), pick(rng) * 3, pick(rng), {pick(rng), pick(rng), pick(rng)});
        const auto set = random_set(rng, m);
        const auto dir = scratch("shape" + std::to_string(trial));
        save_irset(set, dir);
        const auto loaded = load_irset(dir);
        CHECK(loaded == set);
        CHECK_NOTHROW(loaded.check_finite());
        CHECK_NOTHROW(loaded.manifest().validate());
    }
}

TEST_CASE("non-finite samples are rejected before writing") {
    IrSet set = IrSet::zeros(small_manifest(1, 4, 1, {1, 1, 1}));
    set.mutable_ir(PositionId{0}, MicGroup::observation, 0, 0)[1] = std::nan("");
    const auto dir = scratch("nan");
    CHECK_THROWS_AS(save_irset(set, dir), ValidationError);
    CHECK_FALSE(fs::exists(dir / "pos_0.f64"));
    CHECK_FALSE(fs::exists(dir / "manifest.json"));

    auto m = small_manifest(1, 2, 1, {1, 1, 1});
    std::vector<double> samples(6, 0.0);
    samples[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(IrSet(m, samples), ValidationError);
}

TEST_CASE("missing and truncated position files") {
    std::mt19937_64 rng(3);
    const auto set = random_set(rng, small_manifest(2, 8, 1, {1, 1, 1}));
    const auto dir = scratch("missing");
    save_irset(set, dir);
    fs::remove(dir / "pos_1.f64");
    CHECK_THROWS_AS(load_irset(dir), IoError);

    const auto dir2 = scratch("truncated");
    save_irset(set, dir2);
    fs::resize_file(dir2 / "pos_0.f64", fs::file_size(dir2 / "pos_0.f64") - 8);
    CHECK_THROWS_AS(load_irset(dir2), ValidationError);

    CHECK_THROWS_AS(load_irset(scratch("nothing")), IoError);
}

TEST_CASE("unknown schema version") {
    std::mt19937_64 rng(4);
    const auto set = random_set(rng, small_manifest(1, 4, 1, {1, 1, 1}));
    const auto dir = scratch("schema");
    save_irset(set, dir);
    std::string text;
    {
        std::ifstream in(dir / "manifest.json");
        text.assign(std::istreambuf_iterator<char>(in), {});
    }
    const auto at = text.find("\"schema_version\": 1");
    REQUIRE(at != std::string::npos);
    text.replace(at, 19, "\"schema_version\": 9");
    std::ofstream(dir / "manifest.json") << text;
    CHECK_THROWS_AS(load_irset(dir), ValidationError);
}

TEST_CASE("subset_positions") {
    std::mt19937_64 rng(6);
    const auto set = random_set(rng, small_manifest(5, 6, 2, {1, 2, 1}));

    std::vector<PositionId> all{{0}, {1}, {2}, {3}, {4}};
    CHECK(subset_positions(set, all) == set);

    std::vector<PositionId> keep{{4}, {1}, {3}};
    const auto sub = subset_positions(set, keep);
    REQUIRE(sub.num_positions() == 3);
    CHECK(sub.source_ids() == std::vector<std::size_t>{4, 1, 3});
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const auto a = sub.position_block(PositionId{i});
        const auto b = set.position_block(keep[i]);
        CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
        CHECK(sub.manifest().grid[i] == set.manifest().grid[keep[i].index]);
    }

    // Subsetting again keeps the composed mapping to the original ids.
    std::vector<PositionId> again{{2}, {0}};
    const auto sub2 = subset_positions(sub, again);
    CHECK(sub2.source_ids() == std::vector<std::size_t>{3, 4});
    std::vector<PositionId> identity{{0}, {1}};
    CHECK(subset_positions(sub2, identity) == sub2);

    std::vector<PositionId> single{{0}};
    CHECK(subset_positions(set, single).num_positions() == 1);

    std::vector<PositionId> none;
    CHECK_THROWS_AS(subset_positions(set, none), ValidationError);
    std::vector<PositionId> bad{{9}};
    CHECK_THROWS_AS(subset_positions(set, bad), ValidationError);
    std::vector<PositionId> dup{{1}, {1}};
    CHECK_THROWS_AS(subset_positions(set, dup), ValidationError);
}

TEST_CASE("manifest validation") {
    auto m = small_manifest(2, 4, 1, {1, 1, 1});
    CHECK_NOTHROW(m.validate());
    auto no_mics = m;
    no_mics.mics.dark = 0;
    CHECK_THROWS_AS(no_mics.validate(), ValidationError);
    auto dup = m;
    dup.grid[1] = dup.grid[0];
    CHECK_THROWS_AS(dup.validate(), ValidationError);
    auto empty = m;
    empty.grid.clear();
    CHECK_THROWS_AS(empty.validate(), ValidationError);
}

TEST_CASE("accessor bounds") {
    const IrSet set = IrSet::zeros(small_manifest(1, 4, 2, {1, 1, 1}));
    CHECK_THROWS_AS(set.ir(PositionId{1}, MicGroup::bright, 0, 0), ValidationError);
    CHECK_THROWS_AS(set.ir(PositionId{0}, MicGroup::bright, 1, 0), ValidationError);
    CHECK_THROWS_AS(set.ir(PositionId{0}, MicGroup::bright, 0, 2), ValidationError);
    CHECK(set.ir(PositionId{0}, MicGroup::dark, 0, 1).size() == 4);
}
