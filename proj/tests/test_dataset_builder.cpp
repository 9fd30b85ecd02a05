#include <gtest/gtest.h>

#include <fstream>

#include "staug/dataset_builder.hpp"
#include "staug/synth.hpp"
#include "test_util.hpp"

namespace staug {
namespace {

/// Frame t is flat with value t, so channel contents reveal which frame they came from.
Scene indexed_scene(int length, int w = 16, int h = 12) {
    Scene s;
    s.manifest.scene_id = "idx";
    s.manifest.layout = Layout::FullLabel;
    s.manifest.labeled_range = IndexRange{0, length - 1};
    for (int t = 0; t < length; ++t) {
        s.frames.push_back({t, Image8(w, h, 1, static_cast<std::uint8_t>(t)), std::nullopt});
        Mask m(w, h, 1, label::background);
        for (int x = 0; x < w / 2; ++x) m.at(x, 0) = label::foreground;
        s.masks.emplace(t, m);
    }
    return s;
}

std::vector<Image8> flat_series(int length, int w = 16, int h = 12) {
    std::vector<Image8> out;
    for (int t = 0; t < length; ++t) out.emplace_back(w, h, 1, 200);
    return out;
}

TEST(AssembleSample, PastChannelsFollowIntervals) {
    const Scene s = indexed_scene(150);
    const auto bg = flat_series(150);
    const Sample a = assemble_sample(s, bg, 120);
    EXPECT_EQ(a.channels[kCurrent].at(5, 5), 120);
    EXPECT_EQ(a.channels[kBackground].at(5, 5), 200);
    EXPECT_EQ(a.channels[kPast1].at(5, 5), 95);
    EXPECT_EQ(a.channels[kPast2].at(5, 5), 70);
    EXPECT_EQ(a.channels[kPast3].at(5, 5), 45);
    EXPECT_EQ(a.channels[kPast4].at(5, 5), 20);
    for (const auto& c : a.channels) {
        EXPECT_EQ(c.width(), 224);
        EXPECT_EQ(c.height(), 224);
        EXPECT_EQ(c.channels(), 1);
    }

    const Sample b = assemble_sample(s, bg, 100);
    EXPECT_EQ(b.channels[kPast4].at(0, 0), 0);
    EXPECT_EQ(b.channels[kPast1].at(0, 0), 75);
    EXPECT_THROW(assemble_sample(s, bg, 99), BoundsError);
}

TEST(AssembleSample, PreconditionsAreEnforced) {
    Scene s = indexed_scene(150);
    const auto bg = flat_series(150);
    const std::vector<int> three{25, 50, 75};
    EXPECT_THROW(assemble_sample(s, bg, 120, three), SpecError);
    EXPECT_THROW(assemble_sample(s, flat_series(110), 120), BoundsError);
    s.masks.erase(120);
    EXPECT_THROW(assemble_sample(s, bg, 120), MissingAnnotationError);
    s.manifest.labeled_range = IndexRange{130, 149};
    EXPECT_THROW(assemble_sample(s, bg, 125), MissingAnnotationError);
}

TEST(AssembleSample, TargetIsBinaryAndIgnoreBecomesWeight) {
    Scene s = indexed_scene(101, 7, 5);
    Mask& m = s.masks.at(100);
    m.at(6, 4) = label::ignore;
    m.at(5, 4) = label::unknown;
    const Sample a = assemble_sample(s, flat_series(101, 7, 5), 100, kDefaultIntervals, {31, 23});
    std::set<std::uint8_t> tv(a.target.pixels().begin(), a.target.pixels().end());
    EXPECT_TRUE(std::ranges::includes(std::set<std::uint8_t>{0, 1}, tv));
    EXPECT_TRUE(tv.contains(1));
    ASSERT_TRUE(a.weight);
    std::set<std::uint8_t> wv(a.weight->pixels().begin(), a.weight->pixels().end());
    EXPECT_EQ(wv, (std::set<std::uint8_t>{0, 1}));
    EXPECT_EQ(a.weight->at(30, 22), 0);

    const Sample clean = assemble_sample(indexed_scene(101, 7, 5), flat_series(101, 7, 5), 100);
    EXPECT_FALSE(clean.weight);
}

TEST(AssembleSample, MaskResizeStaysBinaryForRandomMasks) {
    std::mt19937 rng(8);
    for (int i = 0; i < 20; ++i) {
        const int w = 5 + rng() % 40, h = 5 + rng() % 40;
        Scene s = indexed_scene(101, w, h);
        for (auto& v : s.masks.at(100).pixels()) v = rng() % 2 ? label::foreground : label::background;
        const Sample a = assemble_sample(s, flat_series(101, w, h), 100);
        for (auto v : a.target.pixels()) ASSERT_LE(v, 1);
    }
}

TEST(Preprocess, AffineMapEndpoints) {
    Sample s;
    for (auto& c : s.channels) c = Image8(4, 1, 1);
    s.channels[0].at(0, 0) = 0;
    s.channels[0].at(1, 0) = 255;
    s.channels[0].at(2, 0) = 127;
    s.channels[0].at(3, 0) = 128;
    s.target = Image8(4, 1, 1, 1);
    const NormalizedSample n = preprocess(s);
    EXPECT_EQ(n.channels[0].at(0, 0), -0.5f);
    EXPECT_EQ(n.channels[0].at(1, 0), 0.5f);
    EXPECT_NEAR(n.channels[0].at(2, 0), -0.00196, 1e-5);
    EXPECT_NEAR(n.channels[0].at(3, 0), 0.00196, 1e-5);
    EXPECT_EQ(n.target, s.target);
    for (int v = 0; v < 256; ++v) {
        const float f = (static_cast<float>(v) - 127.5f) / 255.0f;
        EXPECT_GE(f, -0.5f);
        EXPECT_LE(f, 0.5f);
    }
}

SceneFrames frames(const std::string& id, int n, int first = 100) {
    SceneFrames f;
    for (int i = 0; i < n; ++i) f[id].push_back(first + i);
    return f;
}

TEST(SplitSde, PrefixAtFloorOfFraction) {
    const Split a = split_sde(frames("s", 200));
    EXPECT_EQ(a.train.size(), 160u);
    EXPECT_EQ(a.val.size(), 40u);
    EXPECT_TRUE(a.test.empty());
    EXPECT_EQ(a.train.back().index, 259);
    EXPECT_EQ(a.val.front().index, 260);

    const Split b = split_sde(frames("s", 5));
    EXPECT_EQ(b.train.size(), 4u);
    EXPECT_EQ(b.val.size(), 1u);

    EXPECT_THROW(split_sde(frames("s", 5), 1.0), SpecError);
    EXPECT_THROW(split_sde(frames("s", 5), 0.0), SpecError);
    SceneFrames empty;
    empty["e"] = {};
    EXPECT_THROW(split_sde(empty), DataError);
}

TEST(SplitSie, TestScenesAreHeldOut) {
    SceneFrames f = frames("A", 10);
    f.merge(frames("B", 10));
    f.merge(frames("C", 10));
    const Split s = split_sie(f, {"C"});
    EXPECT_EQ(s.mode, SplitMode::SIE);
    std::set<std::string> trainval, test;
    for (const auto& k : s.train) trainval.insert(k.scene_id);
    for (const auto& k : s.val) trainval.insert(k.scene_id);
    for (const auto& k : s.test) test.insert(k.scene_id);
    EXPECT_EQ(trainval, (std::set<std::string>{"A", "B"}));
    EXPECT_EQ(test, std::set<std::string>{"C"});
    EXPECT_EQ(s.test.size(), 10u);

    EXPECT_THROW(split_sie(f, {"A", "B", "C"}), DataError);
    EXPECT_THROW(split_sie(f, {"Z"}), DataError);
}

TEST(SplitSie, CategoryPairedProtocol) {
    SceneFrames f;
    for (const char* id : {"baseline_1", "baseline_2", "shadow_1", "shadow_2"}) f.merge(frames(id, 20));
    const Split s = split_sie(f, {"baseline_2", "shadow_2"});
    for (const auto& k : s.train) EXPECT_TRUE(k.scene_id.ends_with("_1"));
    for (const auto& k : s.test) EXPECT_TRUE(k.scene_id.ends_with("_2"));
    std::set<FrameKey> all;
    for (const auto* part : {&s.train, &s.val, &s.test})
        for (const auto& k : *part) EXPECT_TRUE(all.insert(k).second);
    EXPECT_EQ(all.size(), 80u);
}

std::vector<Sample> random_samples(int n, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::vector<Sample> out;
    for (int i = 0; i < n; ++i) {
        Sample s;
        for (auto& c : s.channels) {
            c = Image8(20, 14, 1);
            for (auto& v : c.pixels()) v = static_cast<std::uint8_t>(rng());
        }
        s.channels[0].at(0, 0) = 0;
        s.channels[0].at(1, 0) = 255;
        s.target = Image8(20, 14, 1);
        for (auto& v : s.target.pixels()) v = rng() % 2;
        if (i % 3 == 0) {
            s.weight = Image8(20, 14, 1, 1);
            s.weight->at(3, 3) = 0;
        }
        s.meta = {"scene" + std::to_string(i % 2), 100 + i / 2, i % 4 == 1 ? BgAug::Corrupt : BgAug::None, i % 5 == 0};
        out.push_back(std::move(s));
    }
    return out;
}

TEST(ExportImport, RoundTripIsBitExact) {
    const auto dir = testing::scratch_dir("export");
    const auto samples = random_samples(10, 1);
    const Split split = split_sde(frames_of(samples));
    const auto manifest = export_dataset(samples, split, dir);
    EXPECT_EQ(manifest.at("samples").size(), 10u);
    const Dataset ds = import_dataset(dir);
    ASSERT_EQ(ds.samples.size(), samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) EXPECT_EQ(ds.samples[i], samples[i]) << i;
    EXPECT_EQ(ds.train_ids.size() + ds.val_ids.size() + ds.test_ids.size(), 10u);

    const NormalizedSample n = preprocess(ds.samples[0]);
    EXPECT_EQ(n.channels[0].at(0, 0), -0.5f);
    EXPECT_EQ(n.channels[0].at(1, 0), 0.5f);

    for (const auto& e : manifest.at("samples")) {
        const auto meta = nlohmann::json::parse(read_text(dir / "samples" / e.at("id").get<std::string>() / "meta.json"));
        EXPECT_EQ(meta.at("scene_id"), e.at("scene_id"));
        EXPECT_EQ(meta.at("index"), e.at("index"));
    }
}

TEST(ExportImport, TamperedFileIsRejected) {
    const auto dir = testing::scratch_dir("tamper");
    const auto samples = random_samples(3, 2);
    const auto manifest = export_dataset(samples, split_sde(frames_of(samples)), dir);
    const auto c3 = dir / manifest.at("samples")[1].at("files").at("c3").get<std::string>();
    Image8 img = read_image(c3);
    img.at(0, 0) ^= 1;
    write_png(c3, img);
    EXPECT_THROW(import_dataset(dir), HashMismatchError);
}

TEST(ExportImport, DuplicateIdsAreRejected) {
    auto samples = random_samples(2, 3);
    samples[1].meta = samples[0].meta;
    EXPECT_THROW(export_dataset(samples, Split{}, testing::scratch_dir("dup")), DataError);
}

TEST(SelectFrames, EvenlySpacedOverEligible) {
    const Scene s = indexed_scene(300);
    const auto picked = select_frames(s, kDefaultIntervals, 4);
    EXPECT_EQ(picked, (std::vector<int>{100, 150, 200, 250}));
    EXPECT_EQ(select_frames(s, kDefaultIntervals, 200).size(), 200u);
    EXPECT_THROW(select_frames(s, kDefaultIntervals, 201), BoundsError);
}

TEST(BuildDataset, ExportedCountMatchesPlan) {
    std::vector<Scene> scenes;
    for (const char* name : {"moving", "bootstrap"}) {
        synth::SynthSpec spec = *synth::find_preset(name);
        spec.width = spec.height = 64;
        scenes.push_back(synth::generate_scene(spec));
    }
    BuildConfig cfg;
    cfg.samples_per_scene = 6;
    cfg.size = {32, 32};
    cfg.jobs = 2;
    for (bool bg : {false, true})
        for (bool iv : {false, true}) {
            cfg.use_bg = bg;
            cfg.use_interval = iv;
            const BuildResult r = build_dataset(scenes, cfg);
            EXPECT_EQ(static_cast<long>(r.samples.size()), r.plan.predicted.total());
            if (bg && iv) {
                const auto dir = testing::scratch_dir("build");
                const auto manifest = export_dataset(r.samples, r.split, dir);
                EXPECT_EQ(static_cast<long>(manifest.at("samples").size()), r.plan.predicted.total());
                const auto& sp = manifest.at("split");
                EXPECT_EQ(static_cast<long>(sp.at("train").size() + sp.at("val").size() + sp.at("test").size()),
                          r.plan.predicted.total());
            }
        }
}

TEST(BuildDataset, BgTwinDiffersOnlyInBackground) {
    std::vector<Scene> scenes{synth::generate_scene(*synth::find_preset("moving"))};
    BuildConfig cfg;
    cfg.samples_per_scene = 3;
    cfg.size = {64, 64};
    cfg.use_bg = true;
    const BuildResult r = build_dataset(scenes, cfg);
    ASSERT_EQ(r.samples.size(), 6u);
    const Sample& base = r.samples[0];
    const Sample& twin = r.samples[1];
    EXPECT_EQ(twin.meta.bg_aug, BgAug::Corrupt);
    EXPECT_EQ(twin.meta.index, base.meta.index);
    EXPECT_EQ(twin.target, base.target);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (c != kBackground) {
            EXPECT_EQ(twin.channels[c], base.channels[c]);
        }
    }
    EXPECT_NE(twin.channels[kBackground], base.channels[kBackground]);
}

TEST(BuildDataset, DeterministicAcrossThreadCounts) {
    std::vector<Scene> scenes;
    for (const char* name : {"moving", "ghost", "flicker"}) scenes.push_back(synth::generate_scene(*synth::find_preset(name)));
    BuildConfig cfg;
    cfg.samples_per_scene = 2;
    cfg.size = {16, 16};
    cfg.use_bg = true;
    cfg.use_interval = true;
    const auto one = build_dataset(scenes, cfg);
    cfg.jobs = 3;
    const auto three = build_dataset(scenes, cfg);
    EXPECT_EQ(one.samples, three.samples);
}

TEST(BuildDataset, InsufficientHistoryIsAnError) {
    synth::SynthSpec spec = *synth::find_preset("moving");
    spec.length = 120;
    BuildConfig cfg;
    cfg.samples_per_scene = 50;
    cfg.size = {16, 16};
    EXPECT_THROW(build_dataset({synth::generate_scene(spec)}, cfg), BoundsError);
}

}  // namespace
}  // namespace staug
