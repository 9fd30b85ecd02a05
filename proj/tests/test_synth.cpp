#include <gtest/gtest.h>

#include <algorithm>

#include "staug/synth.hpp"

namespace staug::synth {
namespace {

/// Independent rasterization: per-pixel membership test over the whole frame, using the
/// trajectory keypoints directly rather than the generator's drawing loop.
Mask oracle_mask(const SynthSpec& spec, int t) {
    Mask m(spec.width, spec.height, 1, 0);
    for (const ActorSpec& a : spec.actors) {
        const auto& tr = a.trajectory;
        if (t < tr.enter_at || t > tr.exit_at) continue;
        double fx, fy;
        auto interp = [&](Point p, Point q, int t0, int t1) {
            const double s = t1 == t0 ? 0.0 : double(t - t0) / double(t1 - t0);
            fx = p.x * (1 - s) + q.x * s;
            fy = p.y * (1 - s) + q.y * s;
        };
        bool stopped = false;
        if (tr.stop_interval && t >= tr.stop_interval->first && t <= tr.stop_interval->last) {
            fx = tr.stop_at.x;
            fy = tr.stop_at.y;
            stopped = true;
        } else if (tr.stop_interval && t < tr.stop_interval->first) {
            interp(tr.start, tr.stop_at, tr.enter_at, tr.stop_interval->first);
        } else if (tr.stop_interval) {
            interp(tr.stop_at, tr.end, tr.stop_interval->last, tr.exit_at);
        } else {
            interp(tr.start, tr.end, tr.enter_at, tr.exit_at);
        }
        const int x0 = int(std::floor(fx + 0.5)), y0 = int(std::floor(fy + 0.5));
        const std::uint8_t value = (!stopped || a.labeled_foreground_while_static) ? 255 : 0;
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                const double cx = x + 0.5 - x0, cy = y + 0.5 - y0;
                if (cx < 0 || cy < 0 || cx > a.width || cy > a.height) continue;
                bool inside = true;
                if (a.shape == Shape::Ellipse) {
                    const double ex = (cx - a.width / 2.0) / (a.width / 2.0);
                    const double ey = (cy - a.height / 2.0) / (a.height / 2.0);
                    inside = ex * ex + ey * ey <= 1.0;
                }
                if (inside) m.at(x, y) = value;
            }
    }
    return m;
}

TEST(GenerateScene, MasksMatchIndependentRasterization) {
    for (const auto& p : scenario_presets(3)) {
        const Scene s = generate_scene(p.spec);
        ASSERT_EQ(s.size(), p.spec.length);
        for (int t = 0; t < s.size(); t += 3) EXPECT_EQ(s.masks.at(t), oracle_mask(p.spec, t)) << p.name << " t=" << t;
    }
}

TEST(GenerateScene, BootstrapMaskNonemptyAtFrameZero) {
    const Scene s = generate_scene(*find_preset("bootstrap"));
    const auto px = s.masks.at(0).pixels();
    EXPECT_GT(std::count(px.begin(), px.end(), 255), 0);
}

TEST(GenerateScene, StaticLabeledActorHasIdenticalMasksOverStop) {
    SynthSpec spec;
    spec.length = 200;
    spec.noise_sigma = 3.0;
    ActorSpec a;
    a.trajectory = {.enter_at = 10, .exit_at = 190, .start = {0, 0}, .end = {50, 50},
                    .stop_interval = IndexRange{50, 150}, .stop_at = {20, 30}};
    a.labeled_foreground_while_static = true;
    spec.actors.push_back(a);
    const Scene s = generate_scene(spec);
    const Mask& ref = s.masks.at(50);
    EXPECT_GT(std::count(ref.pixels().begin(), ref.pixels().end(), 255), 0);
    for (int t = 50; t <= 150; ++t) EXPECT_EQ(s.masks.at(t), ref);

    spec.actors[0].labeled_foreground_while_static = false;
    const Scene unlabeled = generate_scene(spec);
    const auto px = unlabeled.masks.at(100).pixels();
    EXPECT_EQ(std::count(px.begin(), px.end(), 255), 0);
    EXPECT_EQ(unlabeled.frames[100], s.frames[100]);  // the actor is still drawn
}

TEST(GenerateScene, DeterministicForSeed) {
    const SynthSpec spec = *find_preset("flicker", 99);
    EXPECT_EQ(generate_scene(spec), generate_scene(spec));
    SynthSpec other = spec;
    other.seed = 100;
    EXPECT_NE(generate_scene(other).frames, generate_scene(spec).frames);
}

TEST(GenerateScene, NoiseDoesNotAlterMasks) {
    SynthSpec clean = *find_preset("moving");
    clean.noise_sigma = 0.0;
    SynthSpec noisy = clean;
    noisy.noise_sigma = 25.0;
    const Scene a = generate_scene(clean), b = generate_scene(noisy);
    EXPECT_EQ(a.masks, b.masks);
    EXPECT_NE(a.frames, b.frames);
}

TEST(GenerateScene, NoiseIsClippedAndRoughlyCalibrated) {
    SynthSpec spec;
    spec.length = 20;
    spec.background.level = 250;
    spec.noise_sigma = 10.0;
    const Scene s = generate_scene(spec);
    double sum = 0, sum2 = 0;
    std::size_t n = 0;
    for (const auto& f : s.frames)
        for (auto v : f.pixels.pixels()) {
            EXPECT_LE(v, 255);
            sum += v;
            sum2 += double(v) * v;
            ++n;
        }
    const double mean = sum / n;
    EXPECT_LT(mean, 250.0);  // clipping at 255 pulls the mean down
    SynthSpec mid = spec;
    mid.background.level = 128;
    const Scene m = generate_scene(mid);
    sum = sum2 = 0;
    n = 0;
    for (const auto& f : m.frames)
        for (auto v : f.pixels.pixels()) {
            sum += v;
            sum2 += double(v) * v;
            ++n;
        }
    const double mu = sum / n, sd = std::sqrt(sum2 / n - mu * mu);
    EXPECT_NEAR(mu, 128.0, 0.3);
    EXPECT_NEAR(sd, 10.0, 0.3);
}

TEST(GenerateScene, SpecErrors) {
    SynthSpec spec;
    spec.length = 0;
    EXPECT_THROW(generate_scene(spec), SpecError);
    spec.length = 10;
    ActorSpec a;
    a.width = 10;
    a.trajectory = {.enter_at = 0, .exit_at = 9, .start = {0, 0}, .end = {60, 0},
                    .stop_interval = std::nullopt, .stop_at = {}};
    spec.actors.push_back(a);
    EXPECT_THROW(generate_scene(spec), SpecError);  // 60 + 10 > 64
    spec.actors[0].trajectory.end = {54, 0};
    EXPECT_NO_THROW(generate_scene(spec));
    spec.actors[0].trajectory.stop_interval = IndexRange{5, 12};
    EXPECT_THROW(generate_scene(spec), SpecError);
}

TEST(ScenarioPresets, CoverTheHardCases) {
    const auto presets = scenario_presets();
    ASSERT_GE(presets.size(), 4u);
    for (const char* name : {"moving", "bootstrap", "static_person", "ghost"}) EXPECT_TRUE(find_preset(name)) << name;
    EXPECT_FALSE(find_preset("nope"));

    EXPECT_EQ(find_preset("bootstrap")->actors.at(0).trajectory.enter_at, 0);

    const auto person = *find_preset("static_person");
    ASSERT_TRUE(person.actors.at(0).trajectory.stop_interval);
    EXPECT_GE(person.actors.at(0).trajectory.stop_interval->count(), 100);
    EXPECT_TRUE(person.human_foreground);
}

TEST(ScenarioPresets, GhostLeavesMidSequenceWithEmptyGroundTruth) {
    const SynthSpec spec = *find_preset("ghost");
    const Scene s = generate_scene(spec);
    const int exit = spec.actors.at(0).trajectory.exit_at;
    EXPECT_GT(exit, 0);
    EXPECT_LT(exit, spec.length - 1);
    const auto before = s.masks.at(exit).pixels();
    EXPECT_GT(std::count(before.begin(), before.end(), 255), 0);
    for (int t = exit + 1; t < s.size(); ++t) {
        const auto px = s.masks.at(t).pixels();
        EXPECT_EQ(std::count(px.begin(), px.end(), 255), 0);
    }
    EXPECT_EQ(s.manifest.foreground_appear_index, 0);
    ASSERT_TRUE(s.manifest.clean_frame_index);
    EXPECT_GT(*s.manifest.clean_frame_index, exit);
}

}  // namespace
}  // namespace staug::synth
