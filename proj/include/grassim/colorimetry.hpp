#pragma once

// Color representations used across the simulator. All arithmetic is double
// precision and nothing is clipped; clipping only happens in encode_srgb,
// which exists for preview output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "grassim/error.hpp"
#include "grassim/vec.hpp"

namespace grassim {

enum class ColorSpace {
    LinearDisplayRGB,   // Rec.709 primaries, D65, linear and unbounded (scRGB)
    XYZ,
    ProPhotoLinearRGB,  // ROMM primaries, D50, linear
    CIELAB,
};

enum class WhitePoint { D65, D50 };

constexpr std::string_view to_string(ColorSpace s) {
    switch (s) {
        case ColorSpace::LinearDisplayRGB: return "LinearDisplayRGB";
        case ColorSpace::XYZ: return "XYZ";
        case ColorSpace::ProPhotoLinearRGB: return "ProPhotoLinearRGB";
        case ColorSpace::CIELAB: return "CIELAB";
    }
    return "?";
}

constexpr std::string_view to_string(WhitePoint w) { return w == WhitePoint::D65 ? "D65" : "D50"; }

/// A tristimulus triple tagged with the space it lives in and the white it is
/// relative to. For CIELAB the values are (L*, a*, b*).
struct Color {
    Vec3 values;
    ColorSpace space = ColorSpace::LinearDisplayRGB;
    WhitePoint white = WhitePoint::D65;

    static Color linear_display(double r, double g, double b) {
        return {{r, g, b}, ColorSpace::LinearDisplayRGB, WhitePoint::D65};
    }
    static Color prophoto(double r, double g, double b) {
        return {{r, g, b}, ColorSpace::ProPhotoLinearRGB, WhitePoint::D50};
    }
    static Color xyz(double x, double y, double z, WhitePoint w) { return {{x, y, z}, ColorSpace::XYZ, w}; }
    static Color lab(double l, double a, double b, WhitePoint w) { return {{l, a, b}, ColorSpace::CIELAB, w}; }

    friend bool operator==(const Color&, const Color&) = default;
};

struct EncodedSRGB {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const EncodedSRGB&, const EncodedSRGB&) = default;
};

namespace detail {

struct Chromaticity {
    double x, y;
};

constexpr Vec3 xy_to_xyz(Chromaticity c) { return {c.x / c.y, 1.0, (1.0 - c.x - c.y) / c.y}; }

// Normalized primary matrix: columns are the XYZ of each primary scaled so
// that RGB (1,1,1) maps to the white with Y = 1.
constexpr Mat3 rgb_to_xyz_matrix(Chromaticity r, Chromaticity g, Chromaticity b, Chromaticity w) {
    const Mat3 p = Mat3::from_columns(xy_to_xyz(r), xy_to_xyz(g), xy_to_xyz(b));
    const Vec3 s = inverse(p) * xy_to_xyz(w);
    return p * Mat3::diagonal(s);
}

inline constexpr Chromaticity kD65{0.3127, 0.3290};
inline constexpr Chromaticity kD50{0.3457, 0.3585};

inline constexpr Mat3 kDisplayToXYZ =
    rgb_to_xyz_matrix({0.640, 0.330}, {0.300, 0.600}, {0.150, 0.060}, kD65);
inline constexpr Mat3 kXYZToDisplay = inverse(kDisplayToXYZ);

inline constexpr Mat3 kProPhotoToXYZ =
    rgb_to_xyz_matrix({0.734699, 0.265301}, {0.159597, 0.840403}, {0.036598, 0.000105}, kD50);
inline constexpr Mat3 kXYZToProPhoto = inverse(kProPhotoToXYZ);

inline constexpr Mat3 kBradford{{0.8951, 0.2664, -0.1614, -0.7502, 1.7135, 0.0367, 0.0389, -0.0685, 1.0296}};

constexpr Mat3 bradford(Vec3 src_white, Vec3 dst_white) {
    const Vec3 s = kBradford * src_white;
    const Vec3 d = kBradford * dst_white;
    return inverse(kBradford) * Mat3::diagonal({d.x / s.x, d.y / s.y, d.z / s.z}) * kBradford;
}

inline constexpr Mat3 kD65ToD50 = bradford(xy_to_xyz(kD65), xy_to_xyz(kD50));
inline constexpr Mat3 kD50ToD65 = inverse(kD65ToD50);

inline constexpr double kLabEpsilon = 216.0 / 24389.0;
inline constexpr double kLabKappa = 24389.0 / 27.0;

inline double lab_f(double t) { return t > kLabEpsilon ? std::cbrt(t) : (kLabKappa * t + 16.0) / 116.0; }
inline double lab_f_inv(double f) {
    const double f3 = f * f * f;
    return f3 > kLabEpsilon ? f3 : (116.0 * f - 16.0) / kLabKappa;
}

}  // namespace detail

/// XYZ of the reference white, normalized to Y = 1.
constexpr Vec3 white_xyz(WhitePoint w) {
    return detail::xy_to_xyz(w == WhitePoint::D65 ? detail::kD65 : detail::kD50);
}

constexpr const Mat3& rgb_to_xyz(ColorSpace s) {
    return s == ColorSpace::ProPhotoLinearRGB ? detail::kProPhotoToXYZ : detail::kDisplayToXYZ;
}

/// White point an RGB space is defined against; XYZ and CIELAB carry their own.
constexpr WhitePoint native_white(ColorSpace s) {
    return s == ColorSpace::ProPhotoLinearRGB ? WhitePoint::D50 : WhitePoint::D65;
}

/// Bradford chromatic adaptation matrix between the two supported whites.
constexpr Mat3 adaptation(WhitePoint from, WhitePoint to) {
    if (from == to) return Mat3::identity();
    return from == WhitePoint::D65 ? detail::kD65ToD50 : detail::kD50ToD65;
}

inline double srgb_decode(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

inline double srgb_encode(double v) {
    return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

inline Color decode_srgb(EncodedSRGB c) {
    return Color::linear_display(srgb_decode(c.r / 255.0), srgb_decode(c.g / 255.0), srgb_decode(c.b / 255.0));
}

/// Display encoding for previews. Clips to [0,1] and rounds to nearest.
inline EncodedSRGB encode_srgb(const Color& linear) {
    if (linear.space != ColorSpace::LinearDisplayRGB)
        fail(ErrorCode::invalid_argument, "encode_srgb expects LinearDisplayRGB input");
    auto q = [](double v) {
        const double e = srgb_encode(std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0));
        return static_cast<std::uint8_t>(std::lround(e * 255.0));
    };
    return {q(linear.values.x), q(linear.values.y), q(linear.values.z)};
}

namespace detail {

inline Vec3 xyz_to_lab(const Vec3& xyz, const Vec3& white) {
    const double fx = lab_f(xyz.x / white.x);
    const double fy = lab_f(xyz.y / white.y);
    const double fz = lab_f(xyz.z / white.z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline Vec3 lab_to_xyz(const Vec3& lab, const Vec3& white) {
    const double fy = (lab.x + 16.0) / 116.0;
    const double fx = fy + lab.y / 500.0;
    const double fz = fy - lab.z / 200.0;
    // L* below kappa*epsilon is on the linear segment; using L directly keeps
    // the inverse exact there.
    const double yr = lab.x > detail::kLabKappa * detail::kLabEpsilon ? fy * fy * fy : lab.x / detail::kLabKappa;
    return {lab_f_inv(fx) * white.x, yr * white.y, lab_f_inv(fz) * white.z};
}

inline Vec3 to_xyz(const Color& c) {
    switch (c.space) {
        case ColorSpace::LinearDisplayRGB:
        case ColorSpace::ProPhotoLinearRGB: return rgb_to_xyz(c.space) * c.values;
        case ColorSpace::XYZ: return c.values;
        case ColorSpace::CIELAB: return lab_to_xyz(c.values, white_xyz(c.white));
    }
    return {};
}

}  // namespace detail

/// Converts between any two supported spaces, adapting with Bradford when the
/// whites differ. RGB targets are always produced against their native white;
/// asking for any other white is rejected.
inline Color convert(const Color& c, ColorSpace target, WhitePoint target_white) {
    if (!is_finite(c.values)) fail(ErrorCode::invalid_argument, "convert: non-finite color");
    const bool rgb_src = c.space == ColorSpace::LinearDisplayRGB || c.space == ColorSpace::ProPhotoLinearRGB;
    if (rgb_src && c.white != native_white(c.space))
        fail(ErrorCode::invalid_argument, std::string("convert: ") + std::string(to_string(c.space)) +
                                              " cannot carry white " + std::string(to_string(c.white)));
    const bool rgb_dst = target == ColorSpace::LinearDisplayRGB || target == ColorSpace::ProPhotoLinearRGB;
    if (rgb_dst && target_white != native_white(target))
        fail(ErrorCode::invalid_argument, std::string("convert: unsupported target ") +
                                              std::string(to_string(target)) + "/" +
                                              std::string(to_string(target_white)));
    if (c.space == target && c.white == target_white) return c;

    const Vec3 xyz = adaptation(c.white, target_white) * detail::to_xyz(c);
    switch (target) {
        case ColorSpace::LinearDisplayRGB: return {detail::kXYZToDisplay * xyz, target, target_white};
        case ColorSpace::ProPhotoLinearRGB: return {detail::kXYZToProPhoto * xyz, target, target_white};
        case ColorSpace::XYZ: return {xyz, target, target_white};
        case ColorSpace::CIELAB: return {detail::xyz_to_lab(xyz, white_xyz(target_white)), target, target_white};
    }
    return c;
}

/// Target white defaults to the RGB space's own white, or keeps the source
/// white for XYZ and CIELAB targets (so ProPhoto -> CIELAB is D50-relative).
inline Color convert(const Color& c, ColorSpace target) {
    const bool rgb_dst = target == ColorSpace::LinearDisplayRGB || target == ColorSpace::ProPhotoLinearRGB;
    return convert(c, target, rgb_dst ? native_white(target) : c.white);
}

/// CIEDE2000 with unit parametric factors (kL = kC = kH = 1).
inline double ciede2000(const Color& a, const Color& b) {
    if (a.space != ColorSpace::CIELAB || b.space != ColorSpace::CIELAB)
        fail(ErrorCode::invalid_argument, "ciede2000 expects CIELAB inputs");
    if (a.white != b.white) fail(ErrorCode::invalid_argument, "ciede2000: white point mismatch");

    constexpr double deg = kPi / 180.0;
    constexpr double pow25_7 = 6103515625.0;
    auto pow7 = [](double v) {
        const double v2 = v * v;
        return v2 * v2 * v2 * v;
    };

    const double l1 = a.values.x, a1 = a.values.y, b1 = a.values.z;
    const double l2 = b.values.x, a2 = b.values.y, b2 = b.values.z;

    const double c_bar = 0.5 * (std::hypot(a1, b1) + std::hypot(a2, b2));
    const double c_bar7 = pow7(c_bar);
    const double g = 0.5 * (1.0 - std::sqrt(c_bar7 / (c_bar7 + pow25_7)));
    const double a1p = (1.0 + g) * a1;
    const double a2p = (1.0 + g) * a2;
    const double c1p = std::hypot(a1p, b1);
    const double c2p = std::hypot(a2p, b2);

    auto hue = [](double bb, double ap) {
        if (bb == 0.0 && ap == 0.0) return 0.0;
        double h = std::atan2(bb, ap);
        if (h < 0.0) h += 2.0 * kPi;
        return h;
    };
    const double h1p = hue(b1, a1p);
    const double h2p = hue(b2, a2p);

    const double dlp = l2 - l1;
    const double dcp = c2p - c1p;
    const double cp_prod = c1p * c2p;
    double dhp = 0.0;
    if (cp_prod != 0.0) {
        dhp = h2p - h1p;
        if (dhp > kPi) dhp -= 2.0 * kPi;
        else if (dhp < -kPi) dhp += 2.0 * kPi;
    }
    const double dHp = 2.0 * std::sqrt(cp_prod) * std::sin(dhp / 2.0);

    const double l_bar = 0.5 * (l1 + l2);
    const double cp_bar = 0.5 * (c1p + c2p);
    double hp_bar = h1p + h2p;
    if (cp_prod != 0.0) {
        if (std::abs(h1p - h2p) <= kPi) hp_bar *= 0.5;
        else if (hp_bar < 2.0 * kPi) hp_bar = 0.5 * (hp_bar + 2.0 * kPi);
        else hp_bar = 0.5 * (hp_bar - 2.0 * kPi);
    }

    const double t = 1.0 - 0.17 * std::cos(hp_bar - 30.0 * deg) + 0.24 * std::cos(2.0 * hp_bar) +
                     0.32 * std::cos(3.0 * hp_bar + 6.0 * deg) - 0.20 * std::cos(4.0 * hp_bar - 63.0 * deg);
    const double dtheta_arg = (hp_bar / deg - 275.0) / 25.0;
    const double dtheta = 30.0 * deg * std::exp(-dtheta_arg * dtheta_arg);
    const double cp_bar7 = pow7(cp_bar);
    const double rc = 2.0 * std::sqrt(cp_bar7 / (cp_bar7 + pow25_7));
    const double l50 = (l_bar - 50.0) * (l_bar - 50.0);
    const double sl = 1.0 + 0.015 * l50 / std::sqrt(20.0 + l50);
    const double sc = 1.0 + 0.045 * cp_bar;
    const double sh = 1.0 + 0.015 * cp_bar * t;
    const double rt = -std::sin(2.0 * dtheta) * rc;

    const double tl = dlp / sl, tc = dcp / sc, th = dHp / sh;
    return std::sqrt(std::max(0.0, tl * tl + tc * tc + th * th + rt * tc * th));
}

/// Rec.709 relative luminance of a linear display-RGB triple (the Y row of the
/// primaries matrix, so luminance(1,1,1) == 1 up to rounding).
constexpr double luminance(const Vec3& rgb) {
    const Mat3& m = detail::kDisplayToXYZ;
    return m(1, 0) * rgb.x + m(1, 1) * rgb.y + m(1, 2) * rgb.z;
}

}  // namespace grassim
