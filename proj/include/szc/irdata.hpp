#pragma once

// Impulse-response dataset: manifest, position grid, and the on-disk layout
// (manifest.json + one raw little-endian f64 file per position).

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace szc {

using Point3 = std::array<double, 3>;

enum class MicGroup : int { bright = 0, dark = 1, observation = 2 };
inline constexpr std::array<MicGroup, 3> kAllGroups{MicGroup::bright, MicGroup::dark,
                                                    MicGroup::observation};
const char* to_string(MicGroup group);

/// Dense index into a position grid.
struct PositionId {
    std::size_t index = 0;
    friend bool operator==(PositionId, PositionId) = default;
    friend auto operator<=>(PositionId, PositionId) = default;
};

struct MicCounts {
    std::size_t bright = 0;
    std::size_t dark = 0;
    std::size_t observation = 0;

    std::size_t of(MicGroup group) const;
    std::size_t total() const { return bright + dark + observation; }
    friend bool operator==(const MicCounts&, const MicCounts&) = default;
};

struct Manifest {
    static constexpr int kSchemaVersion = 1;

    int schema_version = kSchemaVersion;
    std::size_t sample_rate_hz = 0;
    std::size_t ir_length = 0;  // K
    std::size_t num_loudspeakers = 0;  // L
    MicCounts mics;
    std::vector<Point3> grid;  // indexed by PositionId

    std::size_t num_positions() const { return grid.size(); }
    /// Throws ValidationError if any invariant fails.
    void validate() const;
    friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Immutable tensor of IRs indexed [position][group][mic][loudspeaker][sample].
class IrSet {
public:
    IrSet() = default;
    /// Takes ownership of samples laid out as described above; validates
    /// shape and finiteness.
    IrSet(Manifest manifest, std::vector<double> samples);

    /// Zero-filled set with the given manifest, for builders that fill
    /// slots through mutable_ir() before sharing the set.
    static IrSet zeros(Manifest manifest);

    const Manifest& manifest() const { return manifest_; }
    std::size_t num_positions() const { return manifest_.num_positions(); }
    std::size_t ir_length() const { return manifest_.ir_length; }
    std::size_t num_loudspeakers() const { return manifest_.num_loudspeakers; }
    std::size_t mic_count(MicGroup g) const { return manifest_.mics.of(g); }

    std::span<const double> ir(PositionId pos, MicGroup group, std::size_t mic,
                               std::size_t speaker) const;
    std::span<double> mutable_ir(PositionId pos, MicGroup group, std::size_t mic,
                                 std::size_t speaker);

    /// All samples of one position in file order.
    std::span<const double> position_block(PositionId pos) const;
    std::size_t samples_per_position() const;
    const std::vector<double>& samples() const { return samples_; }

    /// For a subset, the id each dense position had in the set it came
    /// from. Identity for sets that were not subsetted.
    const std::vector<std::size_t>& source_ids() const { return source_ids_; }

    /// Throws ValidationError on any non-finite sample.
    void check_finite() const;

    friend bool operator==(const IrSet& a, const IrSet& b) {
        return a.manifest_ == b.manifest_ && a.samples_ == b.samples_;
    }

private:
    friend IrSet subset_positions(const IrSet&, std::span<const PositionId>);
    std::size_t offset(PositionId pos, MicGroup group, std::size_t mic, std::size_t speaker) const;

    Manifest manifest_;
    std::vector<double> samples_;
    std::vector<std::size_t> source_ids_;
};

void save_irset(const IrSet& set, const std::filesystem::path& dir);
IrSet load_irset(const std::filesystem::path& dir);

/// Keeps the listed positions, re-indexed densely in the order given.
IrSet subset_positions(const IrSet& set, std::span<const PositionId> keep);

// Raw little-endian f64 helpers shared with the dictionary and signal files.
void write_f64_file(const std::filesystem::path& path, std::span<const double> data);
std::vector<double> read_f64_file(const std::filesystem::path& path);

}  // namespace szc
