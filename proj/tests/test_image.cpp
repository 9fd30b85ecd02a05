#include <gtest/gtest.h>

#include "staug/fileio.hpp"
#include "staug/image.hpp"
#include "test_util.hpp"

namespace staug {
namespace {

TEST(Luma, RoundsWeightedSum) {
    EXPECT_EQ(luma(0, 0, 0), 0);
    EXPECT_EQ(luma(255, 255, 255), 255);
    // 0.299*100 + 0.587*150 + 0.114*200 = 140.75
    EXPECT_EQ(luma(100, 150, 200), 141);
    // 0.299*10 = 2.99
    EXPECT_EQ(luma(10, 0, 0), 3);
}

TEST(ToGray, PassesGrayThroughAndConvertsRgb) {
    Image8 gray = testing::filled(3, 2, 77);
    EXPECT_EQ(to_gray(gray), gray);

    Image8 rgb(2, 1, 3);
    rgb.at(0, 0, 0) = 255;
    rgb.at(1, 0, 1) = 255;
    const Image8 g = to_gray(rgb);
    EXPECT_EQ(g.channels(), 1);
    EXPECT_EQ(g.at(0, 0), 76);   // round(76.245)
    EXPECT_EQ(g.at(1, 0), 150);  // round(149.685)
}

TEST(Resize, NearestNeverInventsValues) {
    Image8 m(7, 5, 1, 0);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) m.at(x, y) = (x + y) % 3 == 0 ? 255 : ((x * y) % 4 == 1 ? 85 : 0);
    const Image8 r = resize(m, 23, 17, Interpolation::Nearest);
    for (auto v : r.pixels()) EXPECT_TRUE(v == 0 || v == 85 || v == 255);
}

TEST(Resize, SameSizeIsIdentity) {
    Image8 a = testing::filled(4, 4, 9);
    a.at(1, 2) = 200;
    EXPECT_EQ(resize(a, 4, 4, Interpolation::Bilinear), a);
}

TEST(PngIo, RoundTripIsBitExact) {
    const auto dir = testing::scratch_dir("png");
    Image8 gray(5, 3, 1);
    Image8 rgb(5, 3, 3);
    for (std::size_t i = 0; i < gray.size(); ++i) gray.data()[i] = static_cast<std::uint8_t>(i * 17);
    for (std::size_t i = 0; i < rgb.size(); ++i) rgb.data()[i] = static_cast<std::uint8_t>(i * 5 + 1);
    write_png(dir / "g.png", gray);
    write_png(dir / "c.png", rgb);
    EXPECT_EQ(read_image(dir / "g.png"), gray);
    EXPECT_EQ(read_image(dir / "c.png"), rgb);
    std::filesystem::remove_all(dir);
}

TEST(PngIo, UnreadableFileNamesPath) {
    const auto dir = testing::scratch_dir("png_bad");
    write_text_atomic(dir / "broken.png", "not a png");
    try {
        read_image(dir / "broken.png");
        FAIL() << "expected LoadError";
    } catch (const LoadError& e) {
        EXPECT_NE(std::string(e.what()).find("broken.png"), std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

TEST(Sha256, KnownVector) {
    const std::string abc = "abc";
    EXPECT_EQ(sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size())),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace staug
