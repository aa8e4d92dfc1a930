#include "szc/roomsim.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "szc/errors.hpp"

namespace szc {
using nlohmann::json;

void RoomSpec::validate() const {
    for (double d : dimensions) {
        if (!(d > 0.0) || !std::isfinite(d)) throw ValidationError("room dimensions must be positive");
    }
    for (double b : beta) {
        if (!(b >= 0.0 && b < 1.0)) throw ValidationError("wall reflection beta must lie in [0, 1)");
    }
    if (max_image_order < 0) throw ValidationError("max_image_order must be non-negative");
    if (!(speed_of_sound > 0.0)) throw ValidationError("speed_of_sound must be positive");
    if (sample_rate_hz == 0) throw ValidationError("sample_rate_hz must be positive");
    if (ir_length == 0) throw ValidationError("ir_length_K must be positive");
}

bool RoomSpec::contains(const Point3& p) const {
    for (int a = 0; a < 3; ++a) {
        if (!(p[a] > 0.0 && p[a] < dimensions[a])) return false;
    }
    return true;
}

namespace {

struct AxisImage {
    double coordinate;
    double gain;
};

// 1-D mirror image i of a source at s between walls 0 and len. Even i are
// translated copies, odd i are mirrored; |i| reflections in total, split
// between the near (0) and far (len) walls.
AxisImage axis_image(int i, double s, double len, double beta_near, double beta_far) {
    const double coord = (i % 2 == 0) ? i * len + s : (i + 1) * len - s;
    int far = 0;
    int near = 0;
    if (i > 0) {
        far = (i + 1) / 2;
        near = i / 2;
    } else if (i < 0) {
        near = (-i + 1) / 2;
        far = -i / 2;
    }
    return {coord, std::pow(beta_near, near) * std::pow(beta_far, far)};
}

double distance(const Point3& a, const Point3& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

std::vector<ImageSource> enumerate_images(const RoomSpec& room, const Point3& source) {
    const int order = room.max_image_order;
    std::vector<ImageSource> images;
    for (int ix = -order; ix <= order; ++ix) {
        const int ry = order - std::abs(ix);
        for (int iy = -ry; iy <= ry; ++iy) {
            const int rz = ry - std::abs(iy);
            for (int iz = -rz; iz <= rz; ++iz) {
                const auto x = axis_image(ix, source[0], room.dimensions[0], room.beta[0], room.beta[1]);
                const auto y = axis_image(iy, source[1], room.dimensions[1], room.beta[2], room.beta[3]);
                const auto z = axis_image(iz, source[2], room.dimensions[2], room.beta[4], room.beta[5]);
                images.push_back({{x.coordinate, y.coordinate, z.coordinate},
                                  {ix, iy, iz},
                                  x.gain * y.gain * z.gain});
            }
        }
    }
    return images;
}

std::vector<double> simulate_ir(const RoomSpec& room, const Point3& source, const Point3& mic) {
    room.validate();
    if (!room.contains(source)) throw ValidationError("source lies outside the room");
    if (!room.contains(mic)) throw ValidationError("microphone lies outside the room");
    if (source == mic) throw ValidationError("source and microphone coincide");

    const std::size_t K = room.ir_length;
    const double samples_per_meter = static_cast<double>(room.sample_rate_hz) / room.speed_of_sound;
    std::vector<double> ir(K, 0.0);
    for (const auto& image : enumerate_images(room, source)) {
        if (image.gain == 0.0) continue;
        const double d = distance(image.position, mic);
        const double delay = d * samples_per_meter;
        const double whole = std::floor(delay);
        if (whole >= static_cast<double>(K)) continue;
        const auto n0 = static_cast<std::size_t>(whole);
        const double frac = delay - whole;
        const double amplitude = image.gain / (4.0 * std::numbers::pi * d);
        ir[n0] += amplitude * (1.0 - frac);
        if (n0 + 1 < K) ir[n0 + 1] += amplitude * frac;
    }
    return ir;
}

void SceneGeometry::validate() const {
    if (loudspeakers.empty()) throw ValidationError("scene has no loudspeakers");
    if (listener_positions.empty()) throw ValidationError("scene has no listener positions");
    if (bright_offsets.empty()) throw ValidationError("scene has no bright-zone microphones");
    if (observation_offsets.empty()) throw ValidationError("scene has no observation microphones");
    if (dark_mics.empty()) throw ValidationError("scene has no dark-zone microphones");
}

Point3 SceneGeometry::bright_mic(std::size_t position, std::size_t mic) const {
    const auto& p = listener_positions.at(position);
    const auto& o = bright_offsets.at(mic);
    return {p[0] + o[0], p[1] + o[1], p[2] + o[2]};
}

Point3 SceneGeometry::observation_mic(std::size_t position, std::size_t mic) const {
    const auto& p = listener_positions.at(position);
    const auto& o = observation_offsets.at(mic);
    return {p[0] + o[0], p[1] + o[1], p[2] + o[2]};
}

std::vector<Point3> SceneGeometry::grid(const Point3& origin, double spacing, std::size_t nx,
                                        std::size_t ny) {
    std::vector<Point3> points;
    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            points.push_back({origin[0] + spacing * static_cast<double>(ix),
                              origin[1] + spacing * static_cast<double>(iy), origin[2]});
        }
    }
    return points;
}

IrSet build_scene_irset(const RoomSpec& room, const SceneGeometry& geom) {
    room.validate();
    geom.validate();
    Manifest manifest;
    manifest.sample_rate_hz = room.sample_rate_hz;
    manifest.ir_length = room.ir_length;
    manifest.num_loudspeakers = geom.loudspeakers.size();
    manifest.mics = {geom.bright_offsets.size(), geom.dark_mics.size(),
                     geom.observation_offsets.size()};
    manifest.grid = geom.listener_positions;
    IrSet set = IrSet::zeros(std::move(manifest));

    auto fill = [&](PositionId pos, MicGroup group, std::size_t mic, const Point3& point) {
        for (std::size_t l = 0; l < geom.loudspeakers.size(); ++l) {
            const auto ir = simulate_ir(room, geom.loudspeakers[l], point);
            auto slot = set.mutable_ir(pos, group, mic, l);
            std::copy(ir.begin(), ir.end(), slot.begin());
        }
    };
    for (std::size_t s = 0; s < geom.listener_positions.size(); ++s) {
        const PositionId pos{s};
        for (std::size_t m = 0; m < geom.bright_offsets.size(); ++m) {
            fill(pos, MicGroup::bright, m, geom.bright_mic(s, m));
        }
        for (std::size_t m = 0; m < geom.dark_mics.size(); ++m) {
            fill(pos, MicGroup::dark, m, geom.dark_mics[m]);
        }
        for (std::size_t m = 0; m < geom.observation_offsets.size(); ++m) {
            fill(pos, MicGroup::observation, m, geom.observation_mic(s, m));
        }
    }
    set.check_finite();
    return set;
}

Scene desk_scene_d1() {
    Scene scene;
    scene.room = RoomSpec{};  // 4 x 5 x 3 m, beta 0.5, order 2, 8 kHz, K = 256
    auto& g = scene.geometry;
    g.loudspeakers = {{1.6, 1.0, 1.2}, {2.0, 1.0, 1.2}, {2.4, 1.0, 1.2}};
    g.listener_positions = SceneGeometry::grid({1.9, 2.6, 1.2}, 0.1, 3, 3);
    g.bright_offsets = {{-0.15, 0.0, 0.05}, {-0.15, 0.05, 0.05}};
    g.observation_offsets = {{0.0, 0.45, 0.3}, {0.15, 0.45, 0.3}};
    g.dark_mics = {{3.2, 2.7, 1.0}, {3.3, 2.7, 1.0}};
    return scene;
}

namespace {

Point3 point_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ValidationError("expected a 3-element point");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::vector<Point3> points_from_json(const json& j) {
    std::vector<Point3> out;
    for (const auto& p : j) out.push_back(point_from_json(p));
    return out;
}

json points_to_json(const std::vector<Point3>& points) {
    json out = json::array();
    for (const auto& p : points) out.push_back({p[0], p[1], p[2]});
    return out;
}

}  // namespace

Scene scene_from_json(const json& j) {
    Scene scene;
    try {
        const auto& r = j.at("room");
        auto& room = scene.room;
        room.dimensions = point_from_json(r.at("dimensions"));
        const auto& beta = r.at("beta");
        if (beta.is_number()) {
            room.beta.fill(beta.get<double>());
        } else {
            if (beta.size() != 6) throw ValidationError("room.beta needs 6 values or one scalar");
            for (std::size_t i = 0; i < 6; ++i) room.beta[i] = beta[i].get<double>();
        }
        room.max_image_order = r.value("max_image_order", room.max_image_order);
        room.speed_of_sound = r.value("speed_of_sound", room.speed_of_sound);
        room.sample_rate_hz = r.at("sample_rate_hz").get<std::size_t>();
        room.ir_length = r.at("ir_length_K").get<std::size_t>();

        auto& g = scene.geometry;
        g.loudspeakers = points_from_json(j.at("loudspeakers"));
        if (j.contains("listener_positions")) {
            g.listener_positions = points_from_json(j.at("listener_positions"));
        } else {
            const auto& grid = j.at("listener_grid");
            g.listener_positions =
                SceneGeometry::grid(point_from_json(grid.at("origin")), grid.at("spacing").get<double>(),
                                    grid.at("nx").get<std::size_t>(), grid.at("ny").get<std::size_t>());
        }
        g.bright_offsets = points_from_json(j.at("bright_offsets"));
        g.observation_offsets = points_from_json(j.at("observation_offsets"));
        g.dark_mics = points_from_json(j.at("dark_mics"));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed scene: ") + e.what());
    }
    scene.room.validate();
    scene.geometry.validate();
    return scene;
}

json scene_to_json(const Scene& scene) {
    const auto& r = scene.room;
    return json{{"room",
                 {{"dimensions", {r.dimensions[0], r.dimensions[1], r.dimensions[2]}},
                  {"beta", r.beta},
                  {"max_image_order", r.max_image_order},
                  {"speed_of_sound", r.speed_of_sound},
                  {"sample_rate_hz", r.sample_rate_hz},
                  {"ir_length_K", r.ir_length}}},
                {"loudspeakers", points_to_json(scene.geometry.loudspeakers)},
                {"listener_positions", points_to_json(scene.geometry.listener_positions)},
                {"bright_offsets", points_to_json(scene.geometry.bright_offsets)},
                {"observation_offsets", points_to_json(scene.geometry.observation_offsets)},
                {"dark_mics", points_to_json(scene.geometry.dark_mics)}};
}

Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "missing file");
    try {
        return scene_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace szc
