#pragma once

// Scene model (frames, ground-truth masks, manifest) and the on-disk scene layout:
//
//   <root>/input/<prefix><index>.png|jpg
//   <root>/groundtruth/<prefix><index>.png
//   <root>/manifest.json
//
// Frame file numbers may start at any base (CDnet numbers from 1); indices in memory
// are always 0-based and contiguous.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "staug/errors.hpp"
#include "staug/fileio.hpp"
#include "staug/image.hpp"

namespace staug {

namespace label {
inline constexpr std::uint8_t background = 0;
inline constexpr std::uint8_t shadow = 50;  // CDnet only; remapped to ignore on load
inline constexpr std::uint8_t ignore = 85;
inline constexpr std::uint8_t unknown = 170;
inline constexpr std::uint8_t foreground = 255;

constexpr bool is_legal(std::uint8_t v) noexcept {
    return v == background || v == ignore || v == unknown || v == foreground;
}
constexpr bool is_counted(std::uint8_t v) noexcept { return v == background || v == foreground; }
}  // namespace label

struct Frame {
    int index = 0;
    Image8 pixels;  // H x W x {1,3}, RGB order when 3 channels
    std::optional<double> timestamp;

    friend bool operator==(const Frame&, const Frame&) = default;
};

/// H x W label raster using the label:: encoding.
using Mask = Image8;

enum class Layout { TemporalRoi, FullLabel };

inline std::string to_string(Layout l) { return l == Layout::TemporalRoi ? "temporal-roi" : "full-label"; }

inline Layout parse_layout(const std::string& s) {
    if (s == "temporal-roi") return Layout::TemporalRoi;
    if (s == "full-label") return Layout::FullLabel;
    throw DataError("unknown layout '" + s + "'");
}

/// Inclusive frame-index range.
struct IndexRange {
    int first = 0;
    int last = -1;

    bool contains(int i) const noexcept { return i >= first && i <= last; }
    int count() const noexcept { return last >= first ? last - first + 1 : 0; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct SceneManifest {
    std::string scene_id;
    Layout layout = Layout::FullLabel;
    std::optional<IndexRange> labeled_range;
    bool human_foreground = false;
    std::optional<int> clean_frame_index;
    std::optional<int> foreground_appear_index;
    std::string category;

    friend bool operator==(const SceneManifest&, const SceneManifest&) = default;
};

struct Scene {
    SceneManifest manifest;
    std::vector<Frame> frames;
    std::map<int, Mask> masks;
    std::vector<std::string> provenance;

    int size() const noexcept { return static_cast<int>(frames.size()); }
    int width() const noexcept { return frames.empty() ? 0 : frames.front().pixels.width(); }
    int height() const noexcept { return frames.empty() ? 0 : frames.front().pixels.height(); }
    const Mask* mask_at(int index) const {
        auto it = masks.find(index);
        return it == masks.end() ? nullptr : &it->second;
    }

    friend bool operator==(const Scene&, const Scene&) = default;
};

// ---------------------------------------------------------------------------
// Manifest JSON

inline nlohmann::json manifest_to_json(const SceneManifest& m) {
    using nlohmann::json;
    json j;
    j["scene_id"] = m.scene_id;
    j["layout"] = to_string(m.layout);
    j["labeled_range"] = m.labeled_range ? json::array({m.labeled_range->first, m.labeled_range->last}) : json(nullptr);
    j["human_foreground"] = m.human_foreground;
    j["clean_frame_index"] = m.clean_frame_index ? json(*m.clean_frame_index) : json(nullptr);
    j["foreground_appear_index"] = m.foreground_appear_index ? json(*m.foreground_appear_index) : json(nullptr);
    j["category"] = m.category;
    return j;
}

inline SceneManifest manifest_from_json(const nlohmann::json& j) {
    static const std::vector<std::string> known = {"scene_id", "layout", "labeled_range", "human_foreground",
                                                   "clean_frame_index", "foreground_appear_index", "category"};
    if (!j.is_object()) throw DataError("manifest: expected a JSON object");
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw DataError("manifest: unknown key '" + key + "'");
    if (!j.contains("scene_id")) throw DataError("manifest: missing scene_id");

    auto opt_int = [&](const char* key) -> std::optional<int> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        return j.at(key).get<int>();
    };

    SceneManifest m;
    try {
        m.scene_id = j.at("scene_id").get<std::string>();
        if (j.contains("layout")) m.layout = parse_layout(j.at("layout").get<std::string>());
        if (j.contains("labeled_range") && !j.at("labeled_range").is_null()) {
            const auto& r = j.at("labeled_range");
            if (!r.is_array() || r.size() != 2) throw DataError("manifest: labeled_range must be [first,last]");
            m.labeled_range = IndexRange{r[0].get<int>(), r[1].get<int>()};
        }
        m.human_foreground = j.value("human_foreground", false);
        m.clean_frame_index = opt_int("clean_frame_index");
        m.foreground_appear_index = opt_int("foreground_appear_index");
        m.category = j.value("category", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("manifest: ") + e.what());
    }
    return m;
}

// ---------------------------------------------------------------------------
// Validation

struct Diagnostic {
    std::string code;
    std::string message;
};

/// One diagnostic per invariant violation; empty means the scene is well formed.
inline std::vector<Diagnostic> validate_scene(const Scene& scene) {
    std::vector<Diagnostic> out;
    auto report = [&](std::string code, std::string msg) { out.push_back({std::move(code), std::move(msg)}); };

    const int len = scene.size();
    if (len == 0) report("empty-scene", "scene has no frames");

    const Frame* first = len > 0 ? &scene.frames.front() : nullptr;
    for (int i = 0; i < len; ++i) {
        const Frame& f = scene.frames[i];
        if (f.index != i)
            report("non-contiguous-index", "frame at position " + std::to_string(i) + " has index " + std::to_string(f.index));
        if (!f.pixels.same_shape(first->pixels))
            report("frame-dimension-mismatch", "frame " + std::to_string(i) + " differs in size or channel count");
        if (f.pixels.empty()) report("empty-frame", "frame " + std::to_string(i) + " is empty");
    }

    const auto& m = scene.manifest;
    const auto& range = m.labeled_range;
    if (range && (range->first < 0 || range->last >= len || range->first > range->last))
        report("labeled-range-out-of-bounds", "labeled_range [" + std::to_string(range->first) + "," +
                                                  std::to_string(range->last) + "] not within [0," + std::to_string(len) + ")");
    if (m.clean_frame_index && (*m.clean_frame_index < 0 || *m.clean_frame_index >= len))
        report("clean-frame-out-of-bounds", "clean_frame_index " + std::to_string(*m.clean_frame_index));
    if (m.foreground_appear_index && (*m.foreground_appear_index < 0 || *m.foreground_appear_index >= len))
        report("foreground-appear-out-of-bounds", "foreground_appear_index " + std::to_string(*m.foreground_appear_index));

    for (const auto& [idx, mask] : scene.masks) {
        if (!range || !range->contains(idx))
            report("mask-outside-labeled-range", "mask at index " + std::to_string(idx) + " lies outside labeled_range");
        if (first && (mask.width() != first->pixels.width() || mask.height() != first->pixels.height() || mask.channels() != 1))
            report("mask-dimension-mismatch", "mask " + std::to_string(idx) + " does not match frame size");
        const auto px = mask.pixels();
        auto bad = std::find_if(px.begin(), px.end(), [](std::uint8_t v) { return !label::is_legal(v); });
        if (bad != px.end())
            report("illegal-label-value", "mask " + std::to_string(idx) + " contains illegal label value " + std::to_string(*bad));
    }
    if (range) {
        for (int i = std::max(range->first, 0); i <= std::min(range->last, len - 1); ++i)
            if (!scene.masks.contains(i)) report("missing-mask", "no mask for labeled frame " + std::to_string(i));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Loading and saving

struct LoadOptions {
    std::optional<Layout> layout_hint;
    std::string input_dir = "input";
    std::string groundtruth_dir = "groundtruth";
};

namespace detail {

struct IndexedFile {
    long number;
    std::filesystem::path path;
};

/// Files named `<non-digits><digits>.<ext>`, sorted by number.
inline std::vector<IndexedFile> list_indexed(const std::filesystem::path& dir, bool allow_jpeg) {
    static const std::regex pattern(R"(^(\D*)(\d+)\.(png|PNG|jpg|JPG|jpeg|JPEG|bmp|BMP)$)");
    std::vector<IndexedFile> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        std::smatch match;
        if (!std::regex_match(name, match, pattern)) continue;
        const std::string ext = match[3].str();
        const bool is_jpeg = ext[0] == 'j' || ext[0] == 'J';
        if (is_jpeg && !allow_jpeg) continue;
        files.push_back({std::stol(match[2].str()), entry.path()});
    }
    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.number < b.number; });
    for (std::size_t i = 1; i < files.size(); ++i)
        if (files[i].number == files[i - 1].number)
            throw LoadError(files[i].path, "duplicate frame index (also " + files[i - 1].path.filename().string() + ")");
    return files;
}

/// CDnet temporalROI.txt: two whitespace-separated 1-based frame numbers.
inline std::optional<std::pair<long, long>> read_temporal_roi(const std::filesystem::path& root) {
    const auto path = root / "temporalROI.txt";
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::istringstream in(read_text(path));
    long a = 0, b = 0;
    if (!(in >> a >> b) || a > b) throw LoadError(path, "malformed temporal ROI");
    return std::make_pair(a, b);
}

}  // namespace detail

inline Scene load_scene(const std::filesystem::path& root, const LoadOptions& opts = {}) {
    namespace fs = std::filesystem;
    const fs::path input = root / opts.input_dir;
    if (!fs::is_directory(input)) throw LoadError(input, "missing input frame directory");

    const auto frame_files = detail::list_indexed(input, true);
    if (frame_files.empty()) throw LoadError(input, "no frames found");
    const long base = frame_files.front().number;

    Scene scene;
    scene.frames.reserve(frame_files.size());
    for (std::size_t i = 0; i < frame_files.size(); ++i) {
        const auto& file = frame_files[i];
        if (file.number != base + static_cast<long>(i))
            throw LoadError(file.path, "gap in frame indices: expected number " + std::to_string(base + static_cast<long>(i)));
        Frame f;
        f.index = static_cast<int>(i);
        f.pixels = read_image(file.path);
        if (!scene.frames.empty() && !f.pixels.same_shape(scene.frames.front().pixels))
            throw LoadError(file.path, "dimension mismatch with first frame");
        scene.frames.push_back(std::move(f));
    }
    const int len = scene.size();

    const fs::path gt_dir = root / opts.groundtruth_dir;
    if (fs::is_directory(gt_dir)) {
        for (const auto& file : detail::list_indexed(gt_dir, false)) {
            const long idx = file.number - base;
            if (idx < 0 || idx >= len) throw LoadError(file.path, "ground-truth index has no matching frame");
            Image8 img = read_image(file.path);
            if (img.width() != scene.width() || img.height() != scene.height())
                throw LoadError(file.path, "dimension mismatch between mask and frames");
            Mask mask(img.width(), img.height(), 1);
            for (std::size_t p = 0; p < mask.size(); ++p) {
                std::uint8_t v = img.data()[p * img.channels()];
                mask.data()[p] = v == label::shadow ? label::ignore : v;
            }
            scene.masks.emplace(static_cast<int>(idx), std::move(mask));
        }
    }

    const fs::path manifest_path = root / "manifest.json";
    if (fs::exists(manifest_path)) {
        try {
            scene.manifest = manifest_from_json(nlohmann::json::parse(read_text(manifest_path)));
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(manifest_path, e.what());
        } catch (const DataError& e) {
            throw LoadError(manifest_path, e.what());
        }
    } else {
        scene.manifest.scene_id = fs::absolute(root).lexically_normal().filename().string();
        if (scene.manifest.scene_id.empty()) scene.manifest.scene_id = fs::absolute(root).parent_path().filename().string();
        if (auto roi = detail::read_temporal_roi(root)) {
            scene.manifest.labeled_range = IndexRange{static_cast<int>(roi->first - base), static_cast<int>(roi->second - base)};
        } else if (!scene.masks.empty()) {
            scene.manifest.labeled_range = IndexRange{scene.masks.begin()->first, scene.masks.rbegin()->first};
        }
        const auto& r = scene.manifest.labeled_range;
        const bool strictly_inside = r && (r->first > 0 || r->last < len - 1);
        scene.manifest.layout = opts.layout_hint.value_or(strictly_inside ? Layout::TemporalRoi : Layout::FullLabel);
    }

    // Ground truth outside the labeled range is not part of the scene (CDnet ships
    // placeholder masks outside its temporal ROI).
    const auto& range = scene.manifest.labeled_range;
    std::erase_if(scene.masks, [&](const auto& kv) { return !range || !range->contains(kv.first); });
    if (range) {
        if (range->first < 0 || range->last >= len || range->first > range->last)
            throw LoadError(manifest_path, "labeled_range outside the frame sequence");
        for (int i = range->first; i <= range->last; ++i)
            if (!scene.masks.contains(i))
                throw LoadError(gt_dir / ("<" + std::to_string(base + i) + ">"),
                                "missing ground-truth mask for labeled frame " + std::to_string(i));
    }
    return scene;
}

struct SaveOptions {
    std::string input_prefix = "in";
    std::string groundtruth_prefix = "gt";
    int digits = 6;
};

inline std::string indexed_name(const std::string& prefix, int index, int digits, const std::string& ext = ".png") {
    std::string num = std::to_string(index);
    if (static_cast<int>(num.size()) < digits) num.insert(0, digits - num.size(), '0');
    return prefix + num + ext;
}

/// Writes the scene in the standard layout. Existing files with the same names are replaced.
inline void save_scene(const Scene& scene, const std::filesystem::path& root, const SaveOptions& opts = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(root / "input");
    for (const auto& f : scene.frames)
        write_png(root / "input" / indexed_name(opts.input_prefix, f.index, opts.digits), f.pixels);
    if (!scene.masks.empty()) {
        fs::create_directories(root / "groundtruth");
        for (const auto& [idx, mask] : scene.masks)
            write_png(root / "groundtruth" / indexed_name(opts.groundtruth_prefix, idx, opts.digits), mask);
    }
    write_text_atomic(root / "manifest.json", manifest_to_json(scene.manifest).dump(2) + "\n");
}

}  // namespace staug
