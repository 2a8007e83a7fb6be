#pragma once

// Color-checker calibration: a 3x3 linear map M taking rendered (virtual)
// ProPhoto linear RGB onto photographed (real) ProPhoto linear RGB, fitted by
// least squares over the 24 checker patches. No offset term.

#include <array>
#include <cmath>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "grassim/colorimetry.hpp"
#include "grassim/error.hpp"
#include "grassim/image.hpp"
#include "grassim/text.hpp"
#include "grassim/vec.hpp"

namespace grassim {

inline constexpr std::size_t kPatchCount = 24;

enum class PatchSource { Real, Virtual };

struct PatchSet {
    std::array<Color, kPatchCount> patches;
    PatchSource source = PatchSource::Virtual;
};

inline void validate(const PatchSet& s) {
    for (std::size_t i = 0; i < kPatchCount; ++i) {
        const Color& c = s.patches[i];
        if (c.space != ColorSpace::ProPhotoLinearRGB)
            fail(ErrorCode::invalid_argument, "patch " + std::to_string(i) + " is not ProPhoto linear RGB");
        if (!is_finite(c.values) || c.values.x < 0 || c.values.y < 0 || c.values.z < 0)
            fail(ErrorCode::invalid_argument, "patch " + std::to_string(i) + " must be finite and non-negative");
    }
}

struct ColorCorrectionMatrix {
    Mat3 m = Mat3::identity();
    double residual_rms = 0.0;
};

/// Least-squares M with real_i ~= M * virtual_i. Solved through the normal
/// equations; falls back to an SVD pseudo-inverse when they are badly
/// conditioned, and refuses rank-deficient inputs.
inline ColorCorrectionMatrix fit_ccm(const PatchSet& real, const PatchSet& virt) {
    validate(real);
    validate(virt);
    Eigen::Matrix<double, kPatchCount, 3> x, y;
    for (std::size_t i = 0; i < kPatchCount; ++i)
        for (int c = 0; c < 3; ++c) {
            x(static_cast<Eigen::Index>(i), c) = virt.patches[i].values[static_cast<std::size_t>(c)];
            y(static_cast<Eigen::Index>(i), c) = real.patches[i].values[static_cast<std::size_t>(c)];
        }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(2) <= 1e-10 * sv(0))
        fail(ErrorCode::singular_fit, "virtual patches are rank deficient; cannot fit a 3x3 matrix");

    Eigen::Matrix3d mt;  // M transposed: Y = X * M^T
    if (sv(2) / sv(0) > 1e-4) {
        const Eigen::Matrix3d xtx = x.transpose() * x;
        mt = xtx.ldlt().solve(x.transpose() * y);
    } else {
        mt = svd.solve(Eigen::MatrixXd(y));
    }

    ColorCorrectionMatrix out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.m(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = mt(c, r);
    const Eigen::Matrix<double, kPatchCount, 3> resid = y - x * mt;
    out.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(kPatchCount * 3));
    for (double v : out.m.m)
        if (!std::isfinite(v)) fail(ErrorCode::singular_fit, "color correction fit produced non-finite entries");
    return out;
}

inline Color apply_ccm(const ColorCorrectionMatrix& ccm, const Color& c) {
    if (c.space != ColorSpace::ProPhotoLinearRGB) fail(ErrorCode::invalid_argument, "apply_ccm expects ProPhoto input");
    if (!is_finite(c.values)) fail(ErrorCode::invalid_argument, "apply_ccm: non-finite input");
    return Color{ccm.m * c.values, ColorSpace::ProPhotoLinearRGB, WhitePoint::D50};
}

/// Fraction each patch quad is shrunk toward its centroid before averaging,
/// keeping the region clear of patch edges.
inline constexpr double kPatchShrink = 0.2;

/// Per-patch mean color of a rendered checker image, in ProPhoto linear RGB.
inline PatchSet patch_means(const LinearImage& img, std::span<const Quad> quads,
                            double shrink = kPatchShrink) {
    if (quads.size() != kPatchCount)
        fail(ErrorCode::invalid_argument, "patch_means needs exactly 24 quads, got " + std::to_string(quads.size()));
    PatchSet out;
    out.source = PatchSource::Virtual;
    for (std::size_t i = 0; i < kPatchCount; ++i) {
        validate_quad(quads[i]);
        const Color mean = average_region(img, shrink_toward_centroid(quads[i], shrink));
        out.patches[i] = convert(mean, ColorSpace::ProPhotoLinearRGB);
    }
    return out;
}

inline std::string patch_set_to_csv(const PatchSet& s) {
    std::string out = "R,G,B\n";
    for (const auto& c : s.patches)
        out += text::format_double(c.values.x) + "," + text::format_double(c.values.y) + "," +
               text::format_double(c.values.z) + "\n";
    return out;
}

/// Accepts an optional `R,G,B` header followed by exactly 24 rows.
inline PatchSet patch_set_from_csv(const std::string& body, PatchSource source) {
    auto rows = text::lines(body);
    if (!rows.empty()) {
        double probe = 0;
        if (!text::try_parse_double(text::split(rows.front()).front(), probe)) rows.erase(rows.begin());
    }
    if (rows.size() != kPatchCount)
        fail(ErrorCode::format, "patch CSV must have 24 rows, found " + std::to_string(rows.size()));
    PatchSet s;
    s.source = source;
    for (std::size_t i = 0; i < kPatchCount; ++i) {
        const auto cols = text::split(rows[i]);
        if (cols.size() != 3) fail(ErrorCode::format, "patch CSV row " + std::to_string(i + 1) + " needs 3 columns");
        s.patches[i] = Color::prophoto(text::parse_double(cols[0], "R"), text::parse_double(cols[1], "G"),
                                       text::parse_double(cols[2], "B"));
    }
    validate(s);
    return s;
}

}  // namespace grassim
