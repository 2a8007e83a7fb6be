#pragma once

// Scene-linear images and image-space region averaging.
//
// Image coordinates: x to the right, y down, origin at the top-left corner of
// the top-left pixel. Pixel (i, j) covers [i, i+1) x [j, j+1) and its center
// is (i + 0.5, j + 0.5).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "grassim/colorimetry.hpp"
#include "grassim/error.hpp"
#include "grassim/vec.hpp"

namespace grassim {

struct RenderMeta {
    int spp = 0;
    std::uint64_t seed = 0;
    int bounce_count = 0;
    friend bool operator==(const RenderMeta&, const RenderMeta&) = default;
};

/// Row-major grid of linear display-RGB values.
struct LinearImage {
    int width = 0;
    int height = 0;
    std::vector<Vec3> pixels;
    double exposure_scale = 1.0;
    RenderMeta meta;

    LinearImage() = default;
    LinearImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h) {}

    Vec3& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const Vec3& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const LinearImage&, const LinearImage&) = default;
};

using Quad = std::array<Vec2, 4>;

inline double signed_area(const Quad& q) {
    double a = 0;
    for (std::size_t i = 0; i < 4; ++i) a += cross2(q[i], q[(i + 1) % 4]);
    return 0.5 * a;
}

namespace detail {

inline bool segments_cross(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
    const double d1 = cross2(q2 - q1, p1 - q1);
    const double d2 = cross2(q2 - q1, p2 - q1);
    const double d3 = cross2(p2 - p1, q1 - p1);
    const double d4 = cross2(p2 - p1, q2 - p1);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace detail

/// Throws unless q is a simple polygon with non-zero area.
inline void validate_quad(const Quad& q) {
    for (const auto& p : q)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) fail(ErrorCode::invalid_argument, "quad has non-finite corner");
    if (detail::segments_cross(q[0], q[1], q[2], q[3]) || detail::segments_cross(q[1], q[2], q[3], q[0]))
        fail(ErrorCode::invalid_argument, "quad is self-intersecting");
    if (std::abs(signed_area(q)) < 1e-9) fail(ErrorCode::invalid_argument, "quad is degenerate (zero area)");
}

/// Even-odd containment test; valid for any simple quad.
inline bool contains(const Quad& q, Vec2 p) {
    bool inside = false;
    for (std::size_t i = 0, j = 3; i < 4; j = i++) {
        const Vec2 a = q[i], b = q[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

/// Moves every corner toward the vertex centroid by `fraction` of the way.
inline Quad shrink_toward_centroid(const Quad& q, double fraction) {
    Vec2 c{};
    for (const auto& p : q) c = c + p * 0.25;
    Quad out;
    for (std::size_t i = 0; i < 4; ++i) out[i] = c + (q[i] - c) * (1.0 - fraction);
    return out;
}

/// Mean of the pixels whose centers fall inside the quad.
inline Color average_region(const LinearImage& img, const Quad& quad) {
    validate_quad(quad);
    double min_x = quad[0].x, max_x = quad[0].x, min_y = quad[0].y, max_y = quad[0].y;
    for (const auto& p : quad) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(max_y - 0.5)));

    Vec3 sum{};
    std::size_t count = 0;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (contains(quad, {x + 0.5, y + 0.5})) {
                sum += img.at(x, y);
                ++count;
            }
    if (count == 0) fail(ErrorCode::empty_region, "region covers no pixel centers");
    return Color{sum / static_cast<double>(count), ColorSpace::LinearDisplayRGB, WhitePoint::D65};
}

}  // namespace grassim
