#pragma once

// Shoebox image-source simulator standing in for measured room IRs.

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "szc/irdata.hpp"

namespace szc {

struct RoomSpec {
    Point3 dimensions{4.0, 5.0, 3.0};
    /// Reflection coefficient per wall: x=0, x=Lx, y=0, y=Ly, z=0, z=Lz.
    std::array<double, 6> beta{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    int max_image_order = 2;
    double speed_of_sound = 343.0;
    std::size_t sample_rate_hz = 8000;
    std::size_t ir_length = 256;

    void validate() const;
    bool contains(const Point3& p) const;
};

struct ImageSource {
    Point3 position;
    std::array<int, 3> lattice;  // per-axis image index; order = sum of |.|
    double gain;                 // product of wall reflection coefficients
};

/// Every image source with |nx|+|ny|+|nz| <= max_image_order, in a
/// deterministic order.
std::vector<ImageSource> enumerate_images(const RoomSpec& room, const Point3& source);

std::vector<double> simulate_ir(const RoomSpec& room, const Point3& source, const Point3& mic);

struct SceneGeometry {
    std::vector<Point3> loudspeakers;
    /// Listener positions, one per grid point.
    std::vector<Point3> listener_positions;
    /// Bright and observation mics are offsets that move with the listener.
    std::vector<Point3> bright_offsets;
    std::vector<Point3> observation_offsets;
    /// Dark-zone mics are fixed in the room.
    std::vector<Point3> dark_mics;

    void validate() const;
    Point3 bright_mic(std::size_t position, std::size_t mic) const;
    Point3 observation_mic(std::size_t position, std::size_t mic) const;
    /// Regular nx-by-ny grid in the horizontal plane; id = iy * nx + ix.
    static std::vector<Point3> grid(const Point3& origin, double spacing, std::size_t nx,
                                    std::size_t ny);
};

struct Scene {
    RoomSpec room;
    SceneGeometry geometry;
};

IrSet build_scene_irset(const RoomSpec& room, const SceneGeometry& geom);

/// The 4 x 5 x 3 m desk scene with three loudspeakers, two mics per group
/// and a 3 x 3 listener grid at 0.1 m spacing. Canonical test fixture.
Scene desk_scene_d1();

Scene scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const Scene& scene);
Scene load_scene(const std::filesystem::path& path);

}  // namespace szc
