#pragma once

// Deterministic synthetic surveillance scenes with exact ground truth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "staug/errors.hpp"
#include "staug/image.hpp"
#include "staug/rng.hpp"
#include "staug/sequence_io.hpp"

namespace staug::synth {

enum class Shape { Rectangle, Ellipse };

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Trajectory of the actor's bounding-box top-left corner.
///
/// The actor is present for enter_at <= t <= exit_at. Without a stop it moves linearly
/// from `start` to `end` over that window; with a stop it moves start -> stop_at over
/// [enter_at, t0], holds during [t0, t1], then moves stop_at -> end over [t1, exit_at].
struct Trajectory {
    int enter_at = 0;
    int exit_at = 0;
    Point start;
    Point end;
    std::optional<IndexRange> stop_interval;
    Point stop_at;
};

struct ActorSpec {
    Shape shape = Shape::Rectangle;
    int width = 8;
    int height = 8;
    std::uint8_t level = 200;
    Trajectory trajectory;
    bool labeled_foreground_while_static = true;
};

enum class BackgroundKind { Flat, TwoTone, Flicker };

struct BackgroundSpec {
    BackgroundKind kind = BackgroundKind::Flat;
    std::uint8_t level = 100;
    std::uint8_t level2 = 60;  // right half, TwoTone only
    double flicker_amplitude = 0.0;
    double flicker_period = 50.0;
};

struct SynthSpec {
    std::string name = "synthetic";
    std::string category = "synthetic";
    bool human_foreground = false;
    int width = 64;
    int height = 64;
    int length = 100;
    BackgroundSpec background;
    std::vector<ActorSpec> actors;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

inline bool present(const ActorSpec& a, int t) noexcept {
    return t >= a.trajectory.enter_at && t <= a.trajectory.exit_at;
}

inline bool is_static(const ActorSpec& a, int t) noexcept {
    return a.trajectory.stop_interval && a.trajectory.stop_interval->contains(t);
}

/// Integer top-left corner at frame t (actor must be present).
inline std::pair<int, int> position(const ActorSpec& a, int t) {
    const Trajectory& tr = a.trajectory;
    auto lerp = [](Point p, Point q, int t0, int t1, int t) {
        const double s = t1 > t0 ? static_cast<double>(t - t0) / (t1 - t0) : 0.0;
        return Point{p.x + s * (q.x - p.x), p.y + s * (q.y - p.y)};
    };
    Point p;
    if (!tr.stop_interval) {
        p = lerp(tr.start, tr.end, tr.enter_at, tr.exit_at, t);
    } else if (t < tr.stop_interval->first) {
        p = lerp(tr.start, tr.stop_at, tr.enter_at, tr.stop_interval->first, t);
    } else if (t <= tr.stop_interval->last) {
        p = tr.stop_at;
    } else {
        p = lerp(tr.stop_at, tr.end, tr.stop_interval->last, tr.exit_at, t);
    }
    return {static_cast<int>(std::floor(p.x + 0.5)), static_cast<int>(std::floor(p.y + 0.5))};
}

/// Whether offset (dx, dy) from the bounding-box corner lies inside the shape.
inline bool covers(const ActorSpec& a, int dx, int dy) noexcept {
    if (dx < 0 || dy < 0 || dx >= a.width || dy >= a.height) return false;
    if (a.shape == Shape::Rectangle) return true;
    const double rx = a.width / 2.0, ry = a.height / 2.0;
    const double nx = (dx + 0.5 - rx) / rx, ny = (dy + 0.5 - ry) / ry;
    return nx * nx + ny * ny <= 1.0;
}

inline void validate(const SynthSpec& spec) {
    if (spec.width < 1 || spec.height < 1) throw SpecError("synth: frame size must be positive");
    if (spec.length < 1) throw SpecError("synth: length must be >= 1");
    if (spec.noise_sigma < 0.0) throw SpecError("synth: noise_sigma must be >= 0");
    for (std::size_t i = 0; i < spec.actors.size(); ++i) {
        const ActorSpec& a = spec.actors[i];
        const Trajectory& tr = a.trajectory;
        const std::string who = "synth: actor " + std::to_string(i) + ": ";
        if (a.width < 1 || a.height < 1) throw SpecError(who + "size must be positive");
        if (tr.enter_at > tr.exit_at) throw SpecError(who + "enter_at after exit_at");
        if (tr.stop_interval && (tr.stop_interval->first < tr.enter_at || tr.stop_interval->last > tr.exit_at ||
                                 tr.stop_interval->first > tr.stop_interval->last))
            throw SpecError(who + "stop_interval not within [enter_at, exit_at]");
        std::vector<Point> keys = {tr.start, tr.end};
        if (tr.stop_interval) keys.push_back(tr.stop_at);
        // Linear paths stay inside the hull of their keypoints, so checking those suffices.
        for (const Point& p : keys) {
            const double x = std::floor(p.x + 0.5), y = std::floor(p.y + 0.5);
            if (x < 0 || y < 0 || x + a.width > spec.width || y + a.height > spec.height)
                throw SpecError(who + "trajectory leaves the frame");
        }
    }
}

inline double background_value(const BackgroundSpec& bg, int x, int width, int t) {
    switch (bg.kind) {
    case BackgroundKind::Flat:
        return bg.level;
    case BackgroundKind::TwoTone:
        return x < width / 2 ? bg.level : bg.level2;
    case BackgroundKind::Flicker:
        return bg.level + bg.flicker_amplitude * std::sin(2.0 * std::numbers::pi * t / bg.flicker_period);
    }
    return bg.level;
}

/// Noise-free background raster at frame t.
inline Image8 render_background(const SynthSpec& spec, int t) {
    Image8 img(spec.width, spec.height, 1);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            img.at(x, y) = static_cast<std::uint8_t>(
                std::clamp(std::lround(background_value(spec.background, x, spec.width, t)), 0L, 255L));
    return img;
}

/// Noise-free frame and its mask at frame t. Later actors are drawn over earlier ones;
/// a pixel is labeled iff its topmost actor is labeled at t.
inline std::pair<Image8, Mask> render(const SynthSpec& spec, int t) {
    Image8 img = render_background(spec, t);
    Mask mask(spec.width, spec.height, 1, label::background);
    for (const ActorSpec& a : spec.actors) {
        if (!present(a, t)) continue;
        const auto [x0, y0] = position(a, t);
        const bool labeled = !is_static(a, t) || a.labeled_foreground_while_static;
        for (int dy = 0; dy < a.height; ++dy)
            for (int dx = 0; dx < a.width; ++dx) {
                if (!covers(a, dx, dy)) continue;
                img.at(x0 + dx, y0 + dy) = a.level;
                mask.at(x0 + dx, y0 + dy) = labeled ? label::foreground : label::background;
            }
    }
    return {std::move(img), std::move(mask)};
}

inline SceneManifest derive_manifest(const SynthSpec& spec) {
    SceneManifest m;
    m.scene_id = spec.name;
    m.category = spec.category;
    m.human_foreground = spec.human_foreground;
    m.layout = Layout::FullLabel;
    m.labeled_range = IndexRange{0, spec.length - 1};
    auto any_present = [&](int t) {
        return std::any_of(spec.actors.begin(), spec.actors.end(), [&](const ActorSpec& a) { return present(a, t); });
    };
    for (int t = 0; t < spec.length; ++t)
        if (any_present(t)) {
            m.foreground_appear_index = t;
            break;
        }
    for (int t = spec.length - 1; t >= 0; --t)
        if (!any_present(t)) {
            m.clean_frame_index = t;
            break;
        }
    return m;
}

/// Full-label scene. Gaussian noise (clipped) is added after rasterization and never
/// touches the masks; draws are keyed by (seed, frame, pixel).
inline Scene generate_scene(const SynthSpec& spec) {
    validate(spec);
    Scene scene;
    scene.manifest = derive_manifest(spec);
    scene.frames.reserve(spec.length);
    for (int t = 0; t < spec.length; ++t) {
        auto [img, mask] = render(spec, t);
        if (spec.noise_sigma > 0.0) {
            auto px = img.pixels();
            for (std::size_t p = 0; p < px.size(); ++p) {
                const double n = rng::normal(rng::hash(spec.seed, t, p, 0), rng::hash(spec.seed, t, p, 1));
                px[p] = static_cast<std::uint8_t>(std::clamp(std::lround(px[p] + spec.noise_sigma * n), 0L, 255L));
            }
        }
        scene.frames.push_back(Frame{t, std::move(img), std::nullopt});
        scene.masks.emplace(t, std::move(mask));
    }
    return scene;
}

struct Preset {
    std::string name;
    SynthSpec spec;
};

/// Named hard cases at 64x64:
///  - moving:        vehicle-like square enters at frame 100 and crosses the scene
///  - bootstrap:     person present from frame 0, waits 60 frames, walks out
///  - static_person: person walks in, stands still 120 frames, walks out
///  - ghost:         object sits from frame 0 to 99, then vanishes
///  - flicker:       moving object over a sinusoidally flickering background
inline std::vector<Preset> scenario_presets(std::uint64_t seed = 1) {
    std::vector<Preset> out;
    auto base = [&](std::string name, std::string category, bool human, int length) {
        SynthSpec s;
        s.name = std::move(name);
        s.category = std::move(category);
        s.human_foreground = human;
        s.length = length;
        s.background.level = 90;
        s.noise_sigma = 2.0;
        s.seed = seed;
        return s;
    };

    {
        SynthSpec s = base("moving", "baseline", false, 300);
        ActorSpec a;
        a.width = a.height = 10;
        a.level = 200;
        a.trajectory = {.enter_at = 100, .exit_at = 259, .start = {4, 27}, .end = {50, 27},
                        .stop_interval = std::nullopt, .stop_at = {}};
        s.actors.push_back(a);
        out.push_back({s.name, s});
    }
    {
        SynthSpec s = base("bootstrap", "bootstrap", true, 300);
        ActorSpec a;
        a.shape = Shape::Ellipse;
        a.width = a.height = 12;
        a.level = 190;
        a.trajectory = {.enter_at = 0, .exit_at = 159, .start = {6, 26}, .end = {46, 26},
                        .stop_interval = IndexRange{0, 59}, .stop_at = {6, 26}};
        s.actors.push_back(a);
        out.push_back({s.name, s});
    }
    {
        SynthSpec s = base("static_person", "static_foreground", true, 320);
        ActorSpec a;
        a.width = 6;
        a.height = 14;
        a.level = 180;
        a.trajectory = {.enter_at = 100, .exit_at = 289, .start = {2, 25}, .end = {56, 25},
                        .stop_interval = IndexRange{130, 249}, .stop_at = {29, 25}};
        s.actors.push_back(a);
        out.push_back({s.name, s});
    }
    {
        SynthSpec s = base("ghost", "ghost", false, 300);
        ActorSpec a;
        a.width = a.height = 10;
        a.level = 210;
        a.trajectory = {.enter_at = 0, .exit_at = 99, .start = {27, 27}, .end = {27, 27},
                        .stop_interval = IndexRange{0, 99}, .stop_at = {27, 27}};
        s.actors.push_back(a);
        out.push_back({s.name, s});
    }
    {
        SynthSpec s = base("flicker", "dynamic_background", false, 200);
        s.background.kind = BackgroundKind::Flicker;
        s.background.level = 100;
        s.background.flicker_amplitude = 6.0;
        s.background.flicker_period = 50.0;
        ActorSpec a;
        a.width = 8;
        a.height = 8;
        a.level = 30;
        a.trajectory = {.enter_at = 20, .exit_at = 179, .start = {2, 10}, .end = {54, 46},
                        .stop_interval = std::nullopt, .stop_at = {}};
        s.actors.push_back(a);
        out.push_back({s.name, s});
    }
    return out;
}

inline std::optional<SynthSpec> find_preset(const std::string& name, std::uint64_t seed = 1) {
    for (auto& p : scenario_presets(seed))
        if (p.name == name) return p.spec;
    return std::nullopt;
}

}  // namespace staug::synth
