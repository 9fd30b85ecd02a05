#pragma once

// Sample assembly, normalization, SDE/SIE splits and the portable dataset format.
//
// Export layout under <out>:
//   dataset.json
//   samples/<id>/c0.png .. c5.png   gray channels in kChannelOrder
//   samples/<id>/target.png         values {0,1}
//   samples/<id>/weight.png         values {0,1}; only when some pixels are ignored
//   samples/<id>/meta.json

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "staug/augmentation.hpp"
#include "staug/background_model.hpp"
#include "staug/errors.hpp"
#include "staug/fileio.hpp"
#include "staug/image.hpp"
#include "staug/sample.hpp"
#include "staug/sequence_io.hpp"

namespace staug {

inline constexpr std::array<int, 4> kDefaultIntervals = {25, 50, 75, 100};
inline constexpr int kDefaultSampleSize = 224;
inline constexpr int kDatasetVersion = 1;

struct SampleSize {
    int width = kDefaultSampleSize;
    int height = kDefaultSampleSize;
};

inline int max_interval(std::span<const int> intervals) {
    return intervals.empty() ? 0 : *std::max_element(intervals.begin(), intervals.end());
}

/// Builds the six-channel stack for frame t. The background channel is bg_series[t].
inline Sample assemble_sample(const Scene& scene, std::span<const Image8> bg_series, int t,
                              std::span<const int> intervals = kDefaultIntervals, SampleSize size = {}) {
    if (intervals.size() != kChannelCount - 2)
        throw SpecError("assemble_sample: expected 4 past-frame intervals, got " + std::to_string(intervals.size()));
    if (std::any_of(intervals.begin(), intervals.end(), [](int d) { return d < 0; }))
        throw SpecError("assemble_sample: negative interval");
    if (t < max_interval(intervals))
        throw BoundsError("assemble_sample: frame " + std::to_string(t) + " has insufficient history (needs " +
                          std::to_string(max_interval(intervals)) + " past frames)");
    if (t >= scene.size()) throw BoundsError("assemble_sample: frame " + std::to_string(t) + " beyond sequence end");
    const auto& range = scene.manifest.labeled_range;
    const Mask* mask = scene.mask_at(t);
    if (!range || !range->contains(t) || !mask)
        throw MissingAnnotationError("assemble_sample: frame " + std::to_string(t) + " of '" + scene.manifest.scene_id +
                                     "' has no ground-truth mask");
    if (static_cast<std::size_t>(t) >= bg_series.size())
        throw BoundsError("assemble_sample: background series does not cover frame " + std::to_string(t));

    auto channel = [&](const Image8& img) { return resize(to_gray(img), size.width, size.height, Interpolation::Bilinear); };

    Sample s;
    s.meta = {scene.manifest.scene_id, t, BgAug::None, false};
    s.channels[kCurrent] = channel(scene.frames[t].pixels);
    s.channels[kBackground] = channel(bg_series[t]);
    for (std::size_t k = 0; k < intervals.size(); ++k) s.channels[kPast1 + k] = channel(scene.frames[t - intervals[k]].pixels);

    const Mask labels = resize(*mask, size.width, size.height, Interpolation::Nearest);
    s.target = Image8(size.width, size.height, 1, 0);
    Image8 weight(size.width, size.height, 1, 1);
    bool any_ignored = false;
    for (std::size_t p = 0; p < labels.size(); ++p) {
        const std::uint8_t v = labels.data()[p];
        s.target.data()[p] = v == label::foreground ? 1 : 0;
        if (!label::is_counted(v)) {
            weight.data()[p] = 0;
            any_ignored = true;
        }
    }
    if (any_ignored) s.weight = std::move(weight);
    return s;
}

/// v -> (v - 127.5) / 255 on the six channels; target and weight pass through.
inline NormalizedSample preprocess(const Sample& s) {
    NormalizedSample out;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const Image8& src = s.channels[c];
        ImageF dst(src.width(), src.height(), src.channels());
        for (std::size_t i = 0; i < src.size(); ++i) dst.data()[i] = (static_cast<float>(src.data()[i]) - 127.5f) / 255.0f;
        out.channels[c] = std::move(dst);
    }
    out.target = s.target;
    out.weight = s.weight;
    out.meta = s.meta;
    return out;
}

// ---------------------------------------------------------------------------
// Splits

enum class SplitMode { SDE, SIE };

inline std::string to_string(SplitMode m) { return m == SplitMode::SDE ? "SDE" : "SIE"; }

inline SplitMode parse_split_mode(const std::string& s) {
    if (s == "SDE" || s == "sde") return SplitMode::SDE;
    if (s == "SIE" || s == "sie") return SplitMode::SIE;
    throw DataError("unknown split mode '" + s + "'");
}

struct FrameKey {
    std::string scene_id;
    int index = 0;

    auto operator<=>(const FrameKey&) const = default;
};

struct Split {
    SplitMode mode = SplitMode::SDE;
    std::vector<FrameKey> train;
    std::vector<FrameKey> val;
    std::vector<FrameKey> test;
};

/// Frame indices available per scene, in temporal order.
using SceneFrames = std::map<std::string, std::vector<int>>;

/// Per scene, the first floor(fraction * n) frames train and the rest validate.
inline Split split_sde(const SceneFrames& scene_frames, double train_fraction = 0.8) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw SpecError("split: train_fraction must lie in (0,1)");
    Split split;
    split.mode = SplitMode::SDE;
    for (const auto& [scene_id, indices] : scene_frames) {
        if (indices.empty()) throw DataError("split: scene '" + scene_id + "' has no samples");
        std::vector<int> sorted = indices;
        std::sort(sorted.begin(), sorted.end());
        const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(sorted.size())));
        for (std::size_t i = 0; i < sorted.size(); ++i)
            (i < n_train ? split.train : split.val).push_back({scene_id, sorted[i]});
    }
    return split;
}

/// Every frame of the test scenes goes to test; the remaining scenes split as in SDE.
inline Split split_sie(const SceneFrames& scene_frames, const std::vector<std::string>& test_scene_ids,
                       double train_fraction = 0.8) {
    const std::set<std::string> test_ids(test_scene_ids.begin(), test_scene_ids.end());
    for (const auto& id : test_ids)
        if (!scene_frames.contains(id)) throw DataError("split: unknown test scene '" + id + "'");
    SceneFrames rest;
    Split split;
    for (const auto& [scene_id, indices] : scene_frames) {
        if (test_ids.contains(scene_id)) {
            for (int i : indices) split.test.push_back({scene_id, i});
        } else {
            rest.emplace(scene_id, indices);
        }
    }
    if (rest.empty()) throw DataError("split: every scene is a test scene; nothing left to train on");
    Split train_val = split_sde(rest, train_fraction);
    split.mode = SplitMode::SIE;
    split.train = std::move(train_val.train);
    split.val = std::move(train_val.val);
    return split;
}

inline SceneFrames frames_of(std::span<const Sample> samples) {
    SceneFrames out;
    std::set<FrameKey> seen;
    for (const auto& s : samples)
        if (seen.insert({s.meta.scene_id, s.meta.index}).second) out[s.meta.scene_id].push_back(s.meta.index);
    return out;
}

// ---------------------------------------------------------------------------
// Export / import

struct Dataset {
    int version = kDatasetVersion;
    std::vector<Sample> samples;
    SplitMode split_mode = SplitMode::SDE;
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
    std::vector<std::string> test_ids;
};

namespace detail {

inline const std::array<std::string, kChannelCount> kChannelKeys = {"c0", "c1", "c2", "c3", "c4", "c5"};

/// Sample ids grouped by split membership of their frame, in sample order.
inline void assign_ids(std::span<const Sample> samples, const Split& split, Dataset& ds) {
    std::map<FrameKey, int> where;
    for (const auto& k : split.train) where[k] = 0;
    for (const auto& k : split.val) where[k] = 1;
    for (const auto& k : split.test) where[k] = 2;
    for (const auto& s : samples) {
        auto it = where.find({s.meta.scene_id, s.meta.index});
        if (it == where.end()) continue;
        (it->second == 0 ? ds.train_ids : it->second == 1 ? ds.val_ids : ds.test_ids).push_back(s.id());
    }
}

}  // namespace detail

/// Writes every sample and `dataset.json` (with per-file SHA-256). Returns the manifest.
inline nlohmann::json export_dataset(std::span<const Sample> samples, const Split& split,
                                     const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    using nlohmann::json;
    fs::create_directories(out_dir);

    json entries = json::array();
    std::set<std::string> ids;
    for (const Sample& s : samples) {
        const std::string id = s.id();
        if (!ids.insert(id).second) throw DataError("export: duplicate sample id '" + id + "'");
        const fs::path rel = fs::path("samples") / id;
        json files = json::object(), hashes = json::object();
        auto put = [&](const std::string& key, const Image8& img) {
            const fs::path file = rel / (key + ".png");
            write_png(out_dir / file, img);
            files[key] = file.generic_string();
            hashes[key] = sha256_hex(read_file(out_dir / file));
        };
        for (std::size_t c = 0; c < kChannelCount; ++c) put(detail::kChannelKeys[c], s.channels[c]);
        put("target", s.target);
        if (s.weight) put("weight", *s.weight);

        json meta = {{"id", id},
                     {"scene_id", s.meta.scene_id},
                     {"index", s.meta.index},
                     {"bg_aug", to_string(s.meta.bg_aug)},
                     {"interval_aug", s.meta.interval_aug},
                     {"source_scene", s.meta.scene_id},
                     {"source_index", s.meta.index}};
        write_text_atomic(out_dir / rel / "meta.json", meta.dump(2) + "\n");

        entries.push_back({{"id", id},
                           {"scene_id", s.meta.scene_id},
                           {"index", s.meta.index},
                           {"bg_aug", to_string(s.meta.bg_aug)},
                           {"interval_aug", s.meta.interval_aug},
                           {"files", files},
                           {"sha256s", hashes}});
    }

    Dataset ids_only;
    detail::assign_ids(samples, split, ids_only);
    json manifest = {{"version", kDatasetVersion},
                     {"channel_order", kChannelOrder},
                     {"samples", entries},
                     {"split",
                      {{"mode", to_string(split.mode)},
                       {"train", ids_only.train_ids},
                       {"val", ids_only.val_ids},
                       {"test", ids_only.test_ids}}}};
    write_text_atomic(out_dir / "dataset.json", manifest.dump(2) + "\n");
    return manifest;
}

/// Reads a dataset back, verifying every file against its recorded hash first.
inline Dataset import_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    const fs::path manifest_path = dir / "dataset.json";
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(manifest_path, e.what());
    }

    Dataset ds;
    try {
        ds.version = j.at("version").get<int>();
        if (ds.version != kDatasetVersion) throw LoadError(manifest_path, "unsupported version " + std::to_string(ds.version));
        if (j.contains("channel_order") && j.at("channel_order") != nlohmann::json(kChannelOrder))
            throw LoadError(manifest_path, "channel order differs from " + nlohmann::json(kChannelOrder).dump());

        for (const auto& e : j.at("samples")) {
            const auto& files = e.at("files");
            const auto& hashes = e.at("sha256s");
            auto load = [&](const std::string& key) {
                const fs::path file = dir / files.at(key).get<std::string>();
                const auto bytes = read_file(file);
                if (sha256_hex(bytes) != hashes.at(key).get<std::string>())
                    throw HashMismatchError(file.string() + ": content hash mismatch");
                Image8 img = read_image(file);
                if (img.channels() != 1) throw LoadError(file, "expected a single-channel image");
                return img;
            };
            Sample s;
            for (std::size_t c = 0; c < kChannelCount; ++c) s.channels[c] = load(detail::kChannelKeys[c]);
            s.target = load("target");
            if (files.contains("weight")) s.weight = load("weight");
            s.meta.scene_id = e.at("scene_id").get<std::string>();
            s.meta.index = e.at("index").get<int>();
            s.meta.bg_aug = parse_bg_aug(e.at("bg_aug").get<std::string>());
            s.meta.interval_aug = e.at("interval_aug").get<bool>();
            if (s.id() != e.at("id").get<std::string>()) throw LoadError(manifest_path, "sample id does not match its metadata");
            ds.samples.push_back(std::move(s));
        }
        const auto& split = j.at("split");
        ds.split_mode = parse_split_mode(split.at("mode").get<std::string>());
        ds.train_ids = split.at("train").get<std::vector<std::string>>();
        ds.val_ids = split.at("val").get<std::vector<std::string>>();
        ds.test_ids = split.at("test").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(manifest_path, e.what());
    }
    return ds;
}

// ---------------------------------------------------------------------------
// End-to-end construction

struct BuildConfig {
    long samples_per_scene = 200;
    bool use_bg = false;
    bool use_interval = false;
    int span = kDefaultSpliceSpan;
    std::vector<int> intervals{kDefaultIntervals.begin(), kDefaultIntervals.end()};
    SampleSize size;
    BgParams bg;
    SplitMode split_mode = SplitMode::SDE;
    std::vector<std::string> test_scene_ids;
    double train_fraction = 0.8;
    int jobs = 1;
};

struct BuildResult {
    AugPlan plan;
    std::vector<Sample> samples;
    Split split;
};

/// Frames eligible as sample centers: labeled and with full history.
inline std::vector<int> eligible_frames(const Scene& scene, std::span<const int> intervals) {
    std::vector<int> out;
    const auto& r = scene.manifest.labeled_range;
    if (!r) return out;
    for (int t = std::max(r->first, max_interval(intervals)); t <= std::min(r->last, scene.size() - 1); ++t)
        if (scene.masks.contains(t)) out.push_back(t);
    return out;
}

/// `count` frames spread evenly over the eligible ones.
inline std::vector<int> select_frames(const Scene& scene, std::span<const int> intervals, long count) {
    const std::vector<int> eligible = eligible_frames(scene, intervals);
    const auto available = static_cast<long>(eligible.size());
    if (available < count)
        throw BoundsError("build: scene '" + scene.manifest.scene_id + "' has " + std::to_string(available) +
                          " labeled frames with " + std::to_string(max_interval(intervals)) +
                          " frames of history; " + std::to_string(count) + " requested");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) out.push_back(eligible[static_cast<std::size_t>(i * available / count)]);
    return out;
}

namespace detail {

inline std::vector<Sample> build_scene(const Scene& scene, const SceneAugFlags& flags, const BuildConfig& cfg) {
    const std::vector<int> frames = select_frames(scene, cfg.intervals, cfg.samples_per_scene);
    const BgsSeries natural = run_sequence(scene, cfg.bg);
    std::optional<BgsSeries> spliced;
    if (flags.bg_aug != BgAug::None) spliced = run_sequence(splice(scene, flags.bg_aug, cfg.span), cfg.bg);

    std::vector<Sample> out;
    for (int t : frames) {
        std::vector<Sample> variants;
        variants.push_back(assemble_sample(scene, natural.backgrounds, t, cfg.intervals, cfg.size));
        if (flags.interval_aug) variants.push_back(interval_zero(variants.front()));
        if (spliced) {
            const Image8 bg = resize(spliced->backgrounds[t], cfg.size.width, cfg.size.height, Interpolation::Bilinear);
            const std::size_t n = variants.size();
            for (std::size_t i = 0; i < n; ++i) {
                Sample twin = variants[i];
                twin.channels[kBackground] = bg;
                twin.meta.bg_aug = flags.bg_aug;
                variants.push_back(std::move(twin));
            }
        }
        for (auto& v : variants) out.push_back(std::move(v));
    }
    return out;
}

}  // namespace detail

/// Plans, runs the background subtractor (natural and spliced), assembles and splits.
/// Scenes are processed on up to cfg.jobs threads; output order follows input order.
inline BuildResult build_dataset(const std::vector<Scene>& scenes, const BuildConfig& cfg) {
    std::vector<SceneManifest> manifests;
    for (const auto& s : scenes) manifests.push_back(s.manifest);
    BuildResult result;
    result.plan = plan_augmentation(manifests, cfg.samples_per_scene, cfg.use_bg, cfg.use_interval, cfg.span);

    std::vector<std::vector<Sample>> per_scene(scenes.size());
    std::vector<std::exception_ptr> errors(scenes.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < scenes.size(); i = next++) {
            try {
                per_scene[i] = detail::build_scene(scenes[i], result.plan.scenes[i], cfg);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const int jobs = std::clamp(cfg.jobs, 1, static_cast<int>(std::max<std::size_t>(scenes.size(), 1)));
        for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (auto& v : per_scene)
        for (auto& s : v) result.samples.push_back(std::move(s));

    const SceneFrames frames = frames_of(result.samples);
    result.split = cfg.split_mode == SplitMode::SDE ? split_sde(frames, cfg.train_fraction)
                                                    : split_sie(frames, cfg.test_scene_ids, cfg.train_fraction);
    return result;
}

}  // namespace staug
