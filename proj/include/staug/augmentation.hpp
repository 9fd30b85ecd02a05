#pragma once

// Spatio-temporal augmentation:
//  - background splicing rewrites the leading frames of the sequence fed to the
//    background subtractor, so the resulting background image is deliberately wrong
//    (corrupt) or deliberately clean (correct);
//  - interval zeroing replaces the past-frame channels of a sample with the current frame.

#include <string>
#include <vector>

#include "staug/errors.hpp"
#include "staug/sample.hpp"
#include "staug/sequence_io.hpp"

namespace staug {

inline constexpr int kDefaultSpliceSpan = 100;

/// Frames [a - span, a) become copies of frame a, where a = foreground_appear_index.
/// Masks, length and the manifest are unchanged.
inline Scene splice_corrupt(const Scene& scene, int span = kDefaultSpliceSpan) {
    const auto& appear = scene.manifest.foreground_appear_index;
    if (!appear) throw MissingAnnotationError("splice_corrupt: scene '" + scene.manifest.scene_id + "' has no foreground_appear_index");
    const int a = *appear;
    if (span < 0) throw BoundsError("splice_corrupt: negative span");
    if (a >= scene.size()) throw BoundsError("splice_corrupt: foreground_appear_index beyond sequence end");
    if (a < span)
        throw BoundsError("splice_corrupt: foreground_appear_index " + std::to_string(a) + " < span " + std::to_string(span));
    Scene out = scene;
    for (int i = a - span; i < a; ++i) out.frames[i].pixels = scene.frames[a].pixels;
    out.provenance.push_back("splice_corrupt source=" + std::to_string(a) + " range=[" + std::to_string(a - span) + "," +
                             std::to_string(a) + ")");
    return out;
}

/// Frames [0, span) become copies of the clean frame c = clean_frame_index.
inline Scene splice_correct(const Scene& scene, int span = kDefaultSpliceSpan) {
    const auto& clean = scene.manifest.clean_frame_index;
    if (!clean) throw MissingAnnotationError("splice_correct: scene '" + scene.manifest.scene_id + "' has no clean_frame_index");
    const int c = *clean;
    if (span < 0 || span > scene.size())
        throw BoundsError("splice_correct: span " + std::to_string(span) + " outside [0," + std::to_string(scene.size()) + "]");
    if (c < 0 || c >= scene.size()) throw BoundsError("splice_correct: clean_frame_index beyond sequence end");
    Scene out = scene;
    if (span == 0) return out;
    for (int i = 0; i < span; ++i) out.frames[i].pixels = scene.frames[c].pixels;
    out.provenance.push_back("splice_correct source=" + std::to_string(c) + " range=[0," + std::to_string(span) + ")");
    return out;
}

inline Scene splice(const Scene& scene, BgAug direction, int span = kDefaultSpliceSpan) {
    switch (direction) {
    case BgAug::Corrupt: return splice_corrupt(scene, span);
    case BgAug::Correct: return splice_correct(scene, span);
    case BgAug::None: break;
    }
    return scene;
}

/// Past channels become bit copies of the current channel; everything else is kept.
inline Sample interval_zero(const Sample& sample) {
    Sample out = sample;
    for (std::size_t c = kPast1; c <= kPast4; ++c) out.channels[c] = sample.channels[kCurrent];
    out.meta.interval_aug = true;
    return out;
}

/// Splice direction for a scene, read off its annotations:
/// scenes whose foreground appears at or after `span` get a corrupted, bootstrapped
/// background; otherwise a known clean frame allows correction.
inline BgAug choose_bg_direction(const SceneManifest& m, int span = kDefaultSpliceSpan) {
    if (m.foreground_appear_index && *m.foreground_appear_index > 0 && *m.foreground_appear_index >= span)
        return BgAug::Corrupt;
    if (m.clean_frame_index) return BgAug::Correct;
    return BgAug::None;
}

struct SceneAugFlags {
    std::string scene_id;
    BgAug bg_aug = BgAug::None;
    bool interval_aug = false;

    friend bool operator==(const SceneAugFlags&, const SceneAugFlags&) = default;
};

struct PredictedCounts {
    long base = 0;
    long after_interval = 0;
    long after_bg = 0;

    long total() const noexcept { return after_bg; }
    friend bool operator==(const PredictedCounts&, const PredictedCounts&) = default;
};

struct AugPlan {
    std::vector<SceneAugFlags> scenes;
    long samples_per_scene = 0;
    PredictedCounts predicted;
};

/// Interval augmentation adds one zero-interval copy of every sample of a human-foreground
/// scene; background augmentation then pairs every sample of a spliceable scene with its
/// spliced-background twin. With every scene spliceable this doubles the total.
inline AugPlan plan_augmentation(const std::vector<SceneManifest>& manifests, long samples_per_scene, bool use_bg,
                                 bool use_interval, int span = kDefaultSpliceSpan) {
    if (samples_per_scene < 0) throw SpecError("plan_augmentation: negative samples_per_scene");
    AugPlan plan;
    plan.samples_per_scene = samples_per_scene;
    long interval_extra = 0;
    long bg_extra = 0;
    for (const auto& m : manifests) {
        SceneAugFlags flags{m.scene_id, use_bg ? choose_bg_direction(m, span) : BgAug::None, use_interval && m.human_foreground};
        const long scene_samples = samples_per_scene * (flags.interval_aug ? 2 : 1);
        if (flags.interval_aug) interval_extra += samples_per_scene;
        if (flags.bg_aug != BgAug::None) bg_extra += scene_samples;
        plan.scenes.push_back(std::move(flags));
    }
    plan.predicted.base = samples_per_scene * static_cast<long>(manifests.size());
    plan.predicted.after_interval = plan.predicted.base + interval_extra;
    plan.predicted.after_bg = plan.predicted.after_interval + bg_extra;
    return plan;
}

}  // namespace staug
