#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "grassim/colorimetry.hpp"
#include "support/oracles.hpp"

namespace grassim {
namespace {

Color lab(double l, double a, double b) { return Color::lab(l, a, b, WhitePoint::D50); }

TEST(DecodeSrgb, Endpoints) {
    EXPECT_EQ(decode_srgb({255, 255, 255}).values, (Vec3{1.0, 1.0, 1.0}));
    EXPECT_EQ(decode_srgb({0, 0, 0}).values, (Vec3{0.0, 0.0, 0.0}));
}

TEST(DecodeSrgb, MidGrayMatchesHandEvaluation) {
    // ((188/255 + 0.055) / 1.055)^2.4 evaluated independently: 0.5028864580
    const Color c = decode_srgb({188, 188, 188});
    EXPECT_NEAR(c.values.x, 0.5028864580, 1e-9);
    EXPECT_EQ(c.values.x, c.values.y);
    EXPECT_EQ(c.space, ColorSpace::LinearDisplayRGB);
}

TEST(DecodeSrgb, MonotonePerChannel) {
    double prev = -1.0;
    for (int v = 0; v < 256; ++v) {
        const double cur = decode_srgb({static_cast<std::uint8_t>(v), 0, 0}).values.x;
        EXPECT_GT(cur, prev);
        prev = cur;
    }
}

TEST(EncodeSrgb, InvertsDecode) {
    for (int v = 0; v < 256; ++v) {
        const auto b = static_cast<std::uint8_t>(v);
        EXPECT_EQ(encode_srgb(decode_srgb({b, b, b})), (EncodedSRGB{b, b, b}));
    }
}

TEST(Convert, DisplayWhiteToXYZ) {
    const Color xyz = convert(Color::linear_display(1, 1, 1), ColorSpace::XYZ);
    EXPECT_NEAR(xyz.values.x, 0.9505, 5e-4);
    EXPECT_NEAR(xyz.values.y, 1.0000, 1e-12);
    EXPECT_NEAR(xyz.values.z, 1.0890, 5e-4);
    // exact white from the D65 chromaticity (0.3127, 0.3290)
    EXPECT_NEAR(xyz.values.x, 0.3127 / 0.3290, 1e-12);
    EXPECT_NEAR(xyz.values.z, (1 - 0.3127 - 0.3290) / 0.3290, 1e-12);
}

TEST(Convert, ReferenceWhiteIsLab100) {
    for (auto w : {WhitePoint::D65, WhitePoint::D50}) {
        const Vec3 wx = white_xyz(w);
        const Color l = convert(Color::xyz(wx.x, wx.y, wx.z, w), ColorSpace::CIELAB);
        EXPECT_NEAR(l.values.x, 100.0, 1e-12);
        EXPECT_NEAR(l.values.y, 0.0, 1e-12);
        EXPECT_NEAR(l.values.z, 0.0, 1e-12);
        EXPECT_EQ(l.white, w);
    }
}

TEST(Convert, ProPhotoBlackIsLabZero) {
    const Color l = convert(Color::prophoto(0, 0, 0), ColorSpace::CIELAB);
    EXPECT_EQ(l.values, (Vec3{0, 0, 0}));
    EXPECT_EQ(l.white, WhitePoint::D50);
}

TEST(Convert, DisplayWhiteIsProPhotoWhite) {
    // Bradford maps the D65 white exactly onto the D50 white.
    const Color p = convert(Color::linear_display(1, 1, 1), ColorSpace::ProPhotoLinearRGB);
    EXPECT_NEAR(p.values.x, 1.0, 1e-9);
    EXPECT_NEAR(p.values.y, 1.0, 1e-9);
    EXPECT_NEAR(p.values.z, 1.0, 1e-9);
}

TEST(Convert, RejectsUnsupportedPair) {
    EXPECT_THROW(convert(Color::linear_display(1, 1, 1), ColorSpace::ProPhotoLinearRGB, WhitePoint::D65), Error);
    Color bad = Color::prophoto(1, 1, 1);
    bad.white = WhitePoint::D65;
    EXPECT_THROW(convert(bad, ColorSpace::XYZ), Error);
    EXPECT_THROW(convert(Color::linear_display(NAN, 0, 0), ColorSpace::XYZ), Error);
}

TEST(Convert, RoundTripsThroughChains) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ColorSpace spaces[] = {ColorSpace::LinearDisplayRGB, ColorSpace::XYZ, ColorSpace::ProPhotoLinearRGB,
                                 ColorSpace::CIELAB};
    for (int i = 0; i < 2000; ++i) {
        const Color src = Color::linear_display(u(rng), u(rng), u(rng));
        for (auto s1 : spaces)
            for (auto w : {WhitePoint::D65, WhitePoint::D50}) {
                const bool rgb = s1 == ColorSpace::LinearDisplayRGB || s1 == ColorSpace::ProPhotoLinearRGB;
                const Color mid = rgb ? convert(src, s1) : convert(src, s1, w);
                const Color back = convert(mid, ColorSpace::LinearDisplayRGB);
                for (int k = 0; k < 3; ++k) ASSERT_NEAR(back.values[k], src.values[k], 1e-6);
            }
    }
}

TEST(Ciede2000, SharmaTable) {
    for (const auto& r : oracle::kSharma) {
        const double de = ciede2000(lab(r.l1, r.a1, r.b1), lab(r.l2, r.a2, r.b2));
        EXPECT_NEAR(de, r.de, 1e-4) << r.l1 << "," << r.a1 << "," << r.b1;
        EXPECT_NEAR(de, oracle::de2000(r.l1, r.a1, r.b1, r.l2, r.a2, r.b2), 1e-10);
    }
}

TEST(Ciede2000, SpecExamples) {
    EXPECT_NEAR(ciede2000(lab(50, 2.6772, -79.7751), lab(50, 0, -82.7485)), 2.0425, 1e-4);
    EXPECT_NEAR(ciede2000(lab(50, 3.1571, -77.2803), lab(50, 0, -82.7485)), 2.8615, 1e-4);
    EXPECT_EQ(ciede2000(lab(42, 7, -3), lab(42, 7, -3)), 0.0);
}

TEST(Ciede2000, SymmetricAndMatchesOracleOnRandomPairs) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> L(0, 100), AB(-128, 128);
    for (int i = 0; i < 5000; ++i) {
        const Color a = lab(L(rng), AB(rng), AB(rng));
        const Color b = lab(L(rng), AB(rng), AB(rng));
        const double ab = ciede2000(a, b);
        EXPECT_EQ(ab, ciede2000(b, a));
        EXPECT_GT(ab, 0.0);
        EXPECT_NEAR(ab, oracle::de2000(a.values.x, a.values.y, a.values.z, b.values.x, b.values.y, b.values.z),
                    1e-9);
        EXPECT_EQ(ciede2000(a, a), 0.0);
    }
}

TEST(Ciede2000, RejectsMismatchedWhites) {
    EXPECT_THROW(ciede2000(Color::lab(50, 0, 0, WhitePoint::D50), Color::lab(50, 0, 0, WhitePoint::D65)), Error);
    EXPECT_THROW(ciede2000(Color::prophoto(0.5, 0.5, 0.5), lab(50, 0, 0)), Error);
}

}  // namespace
}  // namespace grassim
