#pragma once

// Per-pixel sample-consensus background subtractor on gray levels.
//
// Each pixel keeps a bank of n_samples past gray values. A pixel is background when at
// least min_matches bank samples lie within match_radius of its current value. Background
// pixels refresh one random bank slot with probability 1/T and, with neighbor diffusion,
// also push their value into a random slot of a random 8-neighbor with probability 1/T.
// Foreground pixels never update, which is what makes a bootstrapped object linger.
//
// All random draws are keyed by (seed, frame_count, pixel), so output does not depend on
// traversal order.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "staug/errors.hpp"
#include "staug/image.hpp"
#include "staug/rng.hpp"
#include "staug/sequence_io.hpp"

namespace staug {

struct BgParams {
    int n_samples = 20;
    int min_matches = 2;
    int match_radius = 20;
    int subsample_factor = 16;  // T: expected update period
    bool neighbor_diffusion = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (min_matches < 1) throw SpecError("bgs: min_matches must be >= 1");
        if (n_samples < min_matches) throw SpecError("bgs: n_samples must be >= min_matches");
        if (match_radius < 0) throw SpecError("bgs: match_radius must be >= 0");
        if (subsample_factor < 1) throw SpecError("bgs: subsample_factor must be >= 1");
    }

    friend bool operator==(const BgParams&, const BgParams&) = default;
};

struct StepResult {
    Mask mask;          // label::foreground / label::background
    Image8 background;  // per-pixel median of the bank
};

class SampleConsensusModel {
public:
    /// Seeds every bank from the first frame with uniform jitter in [-10, +10], clipped.
    SampleConsensusModel(const Image8& first_frame, const BgParams& params) : params_(params) {
        params_.validate();
        const Image8 gray = to_gray(first_frame);
        if (gray.empty()) throw DimensionError("bgs: empty initial frame");
        width_ = gray.width();
        height_ = gray.height();
        const auto n = static_cast<std::size_t>(params_.n_samples);
        bank_.resize(gray.pixel_count() * n);
        const auto px = gray.pixels();
        for (std::size_t p = 0; p < px.size(); ++p)
            for (std::size_t k = 0; k < n; ++k) {
                const int jitter = static_cast<int>(rng::below(rng::hash(params_.seed, kInitStream, p, k), 21)) - 10;
                bank_[p * n + k] = static_cast<std::uint8_t>(std::clamp(px[p] + jitter, 0, 255));
            }
    }

    StepResult step(const Image8& frame) {
        const Image8 gray = to_gray(frame);
        if (gray.width() != width_ || gray.height() != height_)
            throw DimensionError("bgs: frame is " + std::to_string(gray.width()) + "x" + std::to_string(gray.height()) +
                                 ", model is " + std::to_string(width_) + "x" + std::to_string(height_));

        const auto n = static_cast<std::size_t>(params_.n_samples);
        const auto px = gray.pixels();
        Mask mask(width_, height_, 1, label::background);
        auto out = mask.pixels();

        // Classify against the bank as it was before this frame.
        for (std::size_t p = 0; p < px.size(); ++p) {
            const int v = px[p];
            const std::uint8_t* s = &bank_[p * n];
            int matches = 0;
            for (std::size_t k = 0; k < n && matches < params_.min_matches; ++k)
                matches += std::abs(v - s[k]) <= params_.match_radius;
            if (matches < params_.min_matches) out[p] = label::foreground;
        }

        const auto T = static_cast<std::uint32_t>(params_.subsample_factor);
        const std::uint64_t frame_key = rng::hash(params_.seed, static_cast<std::uint64_t>(frame_count_));
        for (std::size_t p = 0; p < px.size(); ++p) {
            if (out[p] != label::background) continue;
            const std::uint64_t pixel_key = rng::hash(frame_key, p);
            const std::uint64_t self = rng::splitmix64(pixel_key ^ kSelfStream);
            if (rng::below(self, T) == 0) bank_[p * n + rng::below(rng::splitmix64(self), params_.n_samples)] = px[p];
            if (!params_.neighbor_diffusion) continue;
            const std::uint64_t nb = rng::splitmix64(pixel_key ^ kNeighborStream);
            if (rng::below(nb, T) != 0) continue;
            const std::uint64_t pick = rng::splitmix64(nb);
            const auto [dx, dy] = kNeighbors[rng::below(pick, 8)];
            const int x = static_cast<int>(p % width_) + dx, y = static_cast<int>(p / width_) + dy;
            if (x < 0 || y < 0 || x >= width_ || y >= height_) continue;
            const std::size_t q = static_cast<std::size_t>(y) * width_ + x;
            bank_[q * n + rng::below(rng::splitmix64(pick), params_.n_samples)] = px[p];
        }

        ++frame_count_;
        return {std::move(mask), background_image()};
    }

    /// Lower median of each pixel's bank, so every output value is an actual sample.
    Image8 background_image() const {
        Image8 img(width_, height_, 1);
        const auto n = static_cast<std::size_t>(params_.n_samples);
        std::vector<std::uint8_t> scratch(n);
        auto out = img.pixels();
        const std::size_t mid = (n - 1) / 2;
        for (std::size_t p = 0; p < out.size(); ++p) {
            std::copy_n(&bank_[p * n], n, scratch.begin());
            std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(mid), scratch.end());
            out[p] = scratch[mid];
        }
        return img;
    }

    std::span<const std::uint8_t> samples(int x, int y) const {
        const auto n = static_cast<std::size_t>(params_.n_samples);
        return std::span(bank_).subspan((static_cast<std::size_t>(y) * width_ + x) * n, n);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    long frame_count() const noexcept { return frame_count_; }
    const BgParams& params() const noexcept { return params_; }

    friend bool operator==(const SampleConsensusModel&, const SampleConsensusModel&) = default;

private:
    static constexpr std::uint64_t kInitStream = 0x1417;
    static constexpr std::uint64_t kSelfStream = 1;
    static constexpr std::uint64_t kNeighborStream = 2;
    static constexpr std::array<std::pair<int, int>, 8> kNeighbors{
        {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

    BgParams params_;
    int width_ = 0;
    int height_ = 0;
    long frame_count_ = 0;
    std::vector<std::uint8_t> bank_;  // pixel-major: bank_[pixel * n_samples + k]
};

inline SampleConsensusModel init(const Frame& frame, const BgParams& params) {
    return SampleConsensusModel(frame.pixels, params);
}

struct BgsSeries {
    std::vector<Image8> backgrounds;
    std::vector<Mask> masks;
};

/// Initializes from frame 0 and steps through every frame, frame 0 included.
inline BgsSeries run_sequence(const Scene& scene, const BgParams& params) {
    if (scene.frames.empty()) throw DataError("bgs: scene has no frames");
    SampleConsensusModel model = init(scene.frames.front(), params);
    BgsSeries out;
    out.backgrounds.reserve(scene.frames.size());
    out.masks.reserve(scene.frames.size());
    for (const Frame& f : scene.frames) {
        auto [mask, bg] = model.step(f.pixels);
        out.masks.push_back(std::move(mask));
        out.backgrounds.push_back(std::move(bg));
    }
    return out;
}

/// Dumps backgrounds to `<root>/bgmodel/` and masks to `<root>/fgmask/`, named like scene frames.
inline void write_series(const BgsSeries& series, const std::filesystem::path& root, int digits = 6) {
    for (std::size_t t = 0; t < series.backgrounds.size(); ++t)
        write_png(root / "bgmodel" / indexed_name("bg", static_cast<int>(t), digits), series.backgrounds[t]);
    for (std::size_t t = 0; t < series.masks.size(); ++t)
        write_png(root / "fgmask" / indexed_name("fg", static_cast<int>(t), digits), series.masks[t]);
}

}  // namespace staug
