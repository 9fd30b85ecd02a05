#pragma once

// Raster container, color conversion, resizing and PNG/JPEG file IO.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "staug/errors.hpp"
#include "staug/fileio.hpp"

namespace staug {

/// Dense row-major interleaved raster. Value semantics: copies own their pixels.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels = 1, T fill = T{})
        : width_(width), height_(height), channels_(channels) {
        if (width < 0 || height < 0 || channels < 1)
            throw std::invalid_argument("Image: invalid dimensions");
        data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    std::size_t size() const noexcept { return data_.size(); }

    T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }

    bool same_shape(const Image& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<T> data_;
};

using Image8 = Image<std::uint8_t>;
using ImageF = Image<float>;

/// Luma of an RGB triple, round(0.299R + 0.587G + 0.114B).
inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

/// Gray view of a 1- or 3-channel (RGB order) raster.
inline Image8 to_gray(const Image8& img) {
    if (img.channels() == 1) return img;
    if (img.channels() != 3) throw std::invalid_argument("to_gray: expected 1 or 3 channels");
    Image8 out(img.width(), img.height(), 1);
    const auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] = luma(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
    return out;
}

namespace detail {

inline cv::Mat wrap(const Image8& img) {
    return cv::Mat(img.height(), img.width(), CV_8UC(img.channels()),
                   const_cast<std::uint8_t*>(img.data()));
}

inline Image8 from_mat(const cv::Mat& m) {
    CV_Assert(m.depth() == CV_8U);
    Image8 out(m.cols, m.rows, m.channels());
    const std::size_t row_bytes = static_cast<std::size_t>(m.cols) * m.channels();
    for (int y = 0; y < m.rows; ++y)
        std::copy_n(m.ptr<std::uint8_t>(y), row_bytes, out.data() + y * row_bytes);
    return out;
}

}  // namespace detail

enum class Interpolation { Bilinear, Nearest };

inline Image8 resize(const Image8& img, int width, int height, Interpolation interp) {
    if (img.width() == width && img.height() == height) return img;
    cv::Mat dst;
    cv::resize(detail::wrap(img), dst, cv::Size(width, height), 0, 0,
               interp == Interpolation::Bilinear ? cv::INTER_LINEAR : cv::INTER_NEAREST);
    return detail::from_mat(dst);
}

/// Reads an 8-bit image; 3/4-channel files come back as RGB.
inline Image8 read_image(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw LoadError(path, "unreadable image");
    if (m.depth() != CV_8U) throw LoadError(path, "unsupported bit depth (expected 8-bit)");
    if (m.channels() == 4) {
        cv::cvtColor(m, m, cv::COLOR_BGRA2RGB);
    } else if (m.channels() == 3) {
        cv::cvtColor(m, m, cv::COLOR_BGR2RGB);
    } else if (m.channels() != 1) {
        throw LoadError(path, "unsupported channel count");
    }
    return detail::from_mat(m);
}

/// Writes a lossless PNG. Written to a sibling temp file and renamed into place.
inline void write_png(const std::filesystem::path& path, const Image8& img) {
    cv::Mat m = detail::wrap(img);
    cv::Mat bgr;
    if (img.channels() == 3) {
        cv::cvtColor(m, bgr, cv::COLOR_RGB2BGR);
        m = bgr;
    }
    std::vector<std::uint8_t> buf;
    if (!cv::imencode(".png", m, buf)) throw IoError(path, "PNG encoding failed");
    write_file_atomic(path, std::span<const std::uint8_t>(buf));
}

}  // namespace staug
