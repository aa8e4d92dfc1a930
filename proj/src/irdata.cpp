#include "szc/irdata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "szc/errors.hpp"

namespace szc {
namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(MicGroup group) {
    switch (group) {
        case MicGroup::bright: return "bright";
        case MicGroup::dark: return "dark";
        case MicGroup::observation: return "observation";
    }
    return "?";
}

std::size_t MicCounts::of(MicGroup group) const {
    switch (group) {
        case MicGroup::bright: return bright;
        case MicGroup::dark: return dark;
        case MicGroup::observation: return observation;
    }
    throw ValidationError("unknown microphone group");
}

void Manifest::validate() const {
    if (schema_version != kSchemaVersion) {
        throw ValidationError("unsupported schema_version " + std::to_string(schema_version));
    }
    if (sample_rate_hz == 0) throw ValidationError("sample_rate_hz must be positive");
    if (ir_length == 0) throw ValidationError("ir_length_K must be positive");
    if (num_loudspeakers == 0) throw ValidationError("num_loudspeakers must be positive");
    if (mics.bright == 0 || mics.dark == 0 || mics.observation == 0) {
        throw ValidationError("every microphone group needs at least one microphone");
    }
    if (grid.empty()) throw ValidationError("grid has no positions");
    std::set<Point3> seen;
    for (const auto& p : grid) {
        for (double c : p) {
            if (!std::isfinite(c)) throw ValidationError("grid coordinate is not finite");
        }
        if (!seen.insert(p).second) throw ValidationError("grid positions are not distinct");
    }
}

IrSet::IrSet(Manifest manifest, std::vector<double> samples)
    : manifest_(std::move(manifest)), samples_(std::move(samples)) {
    manifest_.validate();
    if (samples_.size() != samples_per_position() * manifest_.num_positions()) {
        throw ValidationError("IR sample count does not match manifest extents");
    }
    check_finite();
    source_ids_.resize(manifest_.num_positions());
    for (std::size_t i = 0; i < source_ids_.size(); ++i) source_ids_[i] = i;
}

IrSet IrSet::zeros(Manifest manifest) {
    manifest.validate();
    const std::size_t n = manifest.num_positions() * manifest.mics.total() *
                          manifest.num_loudspeakers * manifest.ir_length;
    return IrSet(std::move(manifest), std::vector<double>(n, 0.0));
}

std::size_t IrSet::samples_per_position() const {
    return manifest_.mics.total() * manifest_.num_loudspeakers * manifest_.ir_length;
}

std::size_t IrSet::offset(PositionId pos, MicGroup group, std::size_t mic,
                          std::size_t speaker) const {
    if (pos.index >= num_positions()) throw ValidationError("position id out of range");
    if (mic >= mic_count(group)) throw ValidationError("microphone index out of range");
    if (speaker >= num_loudspeakers()) throw ValidationError("loudspeaker index out of range");
    std::size_t group_base = 0;
    for (MicGroup g : kAllGroups) {
        if (g == group) break;
        group_base += mic_count(g);
    }
    const std::size_t K = ir_length();
    const std::size_t L = num_loudspeakers();
    return pos.index * samples_per_position() + ((group_base + mic) * L + speaker) * K;
}

std::span<const double> IrSet::ir(PositionId pos, MicGroup group, std::size_t mic,
                                  std::size_t speaker) const {
    return {samples_.data() + offset(pos, group, mic, speaker), ir_length()};
}

std::span<double> IrSet::mutable_ir(PositionId pos, MicGroup group, std::size_t mic,
                                    std::size_t speaker) {
    return {samples_.data() + offset(pos, group, mic, speaker), ir_length()};
}

std::span<const double> IrSet::position_block(PositionId pos) const {
    if (pos.index >= num_positions()) throw ValidationError("position id out of range");
    return {samples_.data() + pos.index * samples_per_position(), samples_per_position()};
}

void IrSet::check_finite() const {
    if (!std::all_of(samples_.begin(), samples_.end(), [](double v) { return std::isfinite(v); })) {
        throw ValidationError("IR set contains a non-finite sample");
    }
}

namespace {

std::uint64_t byteswap64(std::uint64_t v) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) {
        r = (r << 8) | (v & 0xffu);
        v >>= 8;
    }
    return r;
}

json manifest_to_json(const Manifest& m) {
    json grid = json::array();
    for (std::size_t i = 0; i < m.grid.size(); ++i) {
        grid.push_back({{"id", i}, {"x", m.grid[i][0]}, {"y", m.grid[i][1]}, {"z", m.grid[i][2]}});
    }
    return json{{"schema_version", m.schema_version},
                {"sample_rate_hz", m.sample_rate_hz},
                {"ir_length_K", m.ir_length},
                {"num_loudspeakers", m.num_loudspeakers},
                {"mics",
                 {{"bright", m.mics.bright},
                  {"dark", m.mics.dark},
                  {"observation", m.mics.observation}}},
                {"grid", grid}};
}

Manifest manifest_from_json(const json& j) {
    Manifest m;
    try {
        m.schema_version = j.at("schema_version").get<int>();
        if (m.schema_version != Manifest::kSchemaVersion) {
            throw ValidationError("unknown schema_version " + std::to_string(m.schema_version));
        }
        m.sample_rate_hz = j.at("sample_rate_hz").get<std::size_t>();
        m.ir_length = j.at("ir_length_K").get<std::size_t>();
        m.num_loudspeakers = j.at("num_loudspeakers").get<std::size_t>();
        const auto& mics = j.at("mics");
        m.mics = {mics.at("bright").get<std::size_t>(), mics.at("dark").get<std::size_t>(),
                  mics.at("observation").get<std::size_t>()};
        const auto& grid = j.at("grid");
        m.grid.resize(grid.size());
        std::vector<bool> filled(grid.size(), false);
        for (const auto& entry : grid) {
            const auto id = entry.at("id").get<std::size_t>();
            if (id >= grid.size() || filled[id]) throw ValidationError("grid ids must be 0..S-1");
            filled[id] = true;
            m.grid[id] = {entry.at("x").get<double>(), entry.at("y").get<double>(),
                          entry.at("z").get<double>()};
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed manifest: ") + e.what());
    }
    m.validate();
    return m;
}

fs::path position_file(const fs::path& dir, std::size_t index) {
    return dir / ("pos_" + std::to_string(index) + ".f64");
}

}  // namespace

void write_f64_file(const fs::path& path, std::span<const double> data) {
    std::vector<std::uint64_t> words(data.size());
    std::memcpy(words.data(), data.data(), data.size() * sizeof(double));
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& w : words) w = byteswap64(w);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(words.size() * sizeof(std::uint64_t)));
    if (!out) throw IoError(path.string(), "write failed");
}

std::vector<double> read_f64_file(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw IoError(path.string(), "missing file");
    const auto bytes = fs::file_size(path, ec);
    if (ec) throw IoError(path.string(), "cannot stat");
    if (bytes % sizeof(double) != 0) {
        throw ValidationError(path.string() + ": size is not a multiple of 8 bytes");
    }
    std::vector<std::uint64_t> words(bytes / sizeof(double));
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw IoError(path.string(), "read failed");
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& w : words) w = byteswap64(w);
    }
    std::vector<double> data(words.size());
    std::memcpy(data.data(), words.data(), bytes);
    return data;
}

void save_irset(const IrSet& set, const fs::path& dir) {
    set.manifest().validate();
    set.check_finite();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());

    const auto manifest_path = dir / "manifest.json";
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw IoError(manifest_path.string(), "cannot open for writing");
    out << manifest_to_json(set.manifest()).dump(2) << '\n';
    if (!out) throw IoError(manifest_path.string(), "write failed");
    out.close();

    for (std::size_t s = 0; s < set.num_positions(); ++s) {
        write_f64_file(position_file(dir, s), set.position_block(PositionId{s}));
    }
}

IrSet load_irset(const fs::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError(manifest_path.string(), "missing file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(manifest_path.string() + ": " + e.what());
    }
    Manifest manifest = manifest_from_json(j);

    const std::size_t per_position =
        manifest.mics.total() * manifest.num_loudspeakers * manifest.ir_length;
    std::vector<double> samples;
    samples.reserve(per_position * manifest.num_positions());
    for (std::size_t s = 0; s < manifest.num_positions(); ++s) {
        const auto path = position_file(dir, s);
        auto block = read_f64_file(path);
        if (block.size() != per_position) {
            throw ValidationError(path.string() + ": size mismatch, expected " +
                                  std::to_string(per_position * 8) + " bytes, found " +
                                  std::to_string(block.size() * 8));
        }
        samples.insert(samples.end(), block.begin(), block.end());
    }
    return IrSet(std::move(manifest), std::move(samples));
}

IrSet subset_positions(const IrSet& set, std::span<const PositionId> keep) {
    if (keep.empty()) throw ValidationError("subset_positions: keep list is empty");
    std::set<std::size_t> seen;
    for (PositionId id : keep) {
        if (id.index >= set.num_positions()) {
            throw ValidationError("subset_positions: invalid position id " +
                                  std::to_string(id.index));
        }
        if (!seen.insert(id.index).second) {
            throw ValidationError("subset_positions: duplicate position id " +
                                  std::to_string(id.index));
        }
    }
    Manifest manifest = set.manifest();
    manifest.grid.clear();
    std::vector<double> samples;
    samples.reserve(keep.size() * set.samples_per_position());
    std::vector<std::size_t> source_ids;
    for (PositionId id : keep) {
        manifest.grid.push_back(set.manifest().grid[id.index]);
        const auto block = set.position_block(id);
        samples.insert(samples.end(), block.begin(), block.end());
        source_ids.push_back(set.source_ids()[id.index]);
    }
    IrSet out(std::move(manifest), std::move(samples));
    out.source_ids_ = std::move(source_ids);
    return out;
}

}  // namespace szc
