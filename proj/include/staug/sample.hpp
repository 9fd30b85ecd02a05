#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "staug/errors.hpp"
#include "staug/image.hpp"

namespace staug {

enum class BgAug { None, Corrupt, Correct };

inline std::string to_string(BgAug a) {
    switch (a) {
    case BgAug::None: return "none";
    case BgAug::Corrupt: return "corrupt";
    case BgAug::Correct: return "correct";
    }
    return "none";
}

inline BgAug parse_bg_aug(const std::string& s) {
    if (s == "none") return BgAug::None;
    if (s == "corrupt") return BgAug::Corrupt;
    if (s == "correct") return BgAug::Correct;
    throw DataError("unknown bg_aug value '" + s + "'");
}

/// Channel slots of a sample stack.
enum Channel : std::size_t { kCurrent = 0, kBackground = 1, kPast1 = 2, kPast2 = 3, kPast3 = 4, kPast4 = 5 };
inline constexpr std::size_t kChannelCount = 6;
inline constexpr std::array<const char*, kChannelCount> kChannelOrder = {
    "current", "background", "past@d1", "past@d2", "past@d3", "past@d4"};

struct SampleMeta {
    std::string scene_id;
    int index = 0;
    BgAug bg_aug = BgAug::None;
    bool interval_aug = false;

    friend bool operator==(const SampleMeta&, const SampleMeta&) = default;
};

/// One training unit: six gray channels, a {0,1} target and an optional {0,1} weight
/// (0 marks ignore/unknown ground truth).
struct Sample {
    std::array<Image8, kChannelCount> channels;
    Image8 target;
    std::optional<Image8> weight;
    SampleMeta meta;

    /// Stable identifier, unique across augmentation variants of the same frame.
    std::string id() const {
        std::string idx = std::to_string(meta.index);
        if (idx.size() < 6) idx.insert(0, 6 - idx.size(), '0');
        return meta.scene_id + "_" + idx + "_bg-" + to_string(meta.bg_aug) + (meta.interval_aug ? "_iv0" : "_ivd");
    }

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct NormalizedSample {
    std::array<ImageF, kChannelCount> channels;
    Image8 target;
    std::optional<Image8> weight;
    SampleMeta meta;
};

}  // namespace staug
