#pragma once

// Pinhole camera, viewpoint placement and image-space projection.
//
// A viewpoint (h, d, theta) puts the eye h cm above the floor at horizontal
// distance d m from the pixel center, rotated theta degrees about the
// vertical axis: theta = 0 sits on +z, theta = 90 on +x.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "grassim/error.hpp"
#include "grassim/image.hpp"
#include "grassim/scene.hpp"
#include "grassim/vec.hpp"

namespace grassim {

struct Camera {
    Vec3 position{0, 0, 1};
    Vec3 look_at{0, 0, 0};
    Vec3 up{0, 1, 0};
    double vertical_fov = 40.0;  // degrees
    int width = 600;
    int height = 400;
    friend bool operator==(const Camera&, const Camera&) = default;
};

inline void validate(const Camera& c) {
    if (!is_finite(c.position) || !is_finite(c.look_at) || !is_finite(c.up))
        fail(ErrorCode::invalid_argument, "camera vectors must be finite");
    const Vec3 f = c.look_at - c.position;
    if (length(f) <= 0.0 || length(cross(f, c.up)) <= 1e-12 * length(f) * length(c.up))
        fail(ErrorCode::invalid_argument, "camera position, look-at and up are colinear");
    if (!(c.vertical_fov > 0.0 && c.vertical_fov < 180.0))
        fail(ErrorCode::invalid_argument, "vertical field of view must lie in (0, 180) degrees");
    if (c.width < 1 || c.height < 1 || c.width > 16384 || c.height > 16384)
        fail(ErrorCode::invalid_argument, "camera resolution out of range");
}

/// Orthonormal camera frame: right, true up, forward.
struct CameraFrame {
    Vec3 right, up, forward;
    double tan_half;  // tangent of half the vertical fov
    double aspect;
};

inline CameraFrame camera_frame(const Camera& c) {
    const Vec3 f = normalize(c.look_at - c.position);
    const Vec3 r = normalize(cross(f, c.up));
    return {r, cross(r, f), f, std::tan(0.5 * c.vertical_fov * kPi / 180.0),
            static_cast<double>(c.width) / c.height};
}

/// Direction through image point (u, v), in pixel units.
inline Vec3 camera_ray(const Camera& c, const CameraFrame& fr, double u, double v) {
    const double sx = (2.0 * u / c.width - 1.0) * fr.tan_half * fr.aspect;
    const double sy = (1.0 - 2.0 * v / c.height) * fr.tan_half;
    return normalize(fr.forward + fr.right * sx + fr.up * sy);
}

/// Image coordinates of a world point. Throws for points on or behind the
/// image plane's eye side.
inline Vec2 project(const Camera& c, const Vec3& p) {
    const CameraFrame fr = camera_frame(c);
    const Vec3 d = p - c.position;
    const double z = dot(d, fr.forward);
    if (!(z > 1e-9)) fail(ErrorCode::invalid_argument, "point is behind the camera");
    const double sx = dot(d, fr.right) / z, sy = dot(d, fr.up) / z;
    return {(sx / (fr.tan_half * fr.aspect) + 1.0) * 0.5 * c.width, (1.0 - sy / fr.tan_half) * 0.5 * c.height};
}

struct Viewpoint {
    double h_cm = 170.0;
    double d_m = 2.0;
    double theta_deg = 0.0;
    friend bool operator==(const Viewpoint&, const Viewpoint&) = default;
};

inline void validate(const Viewpoint& v) {
    if (!(v.d_m > 0.0) || !std::isfinite(v.d_m)) fail(ErrorCode::invalid_argument, "viewpoint distance must be positive");
    if (!std::isfinite(v.h_cm)) fail(ErrorCode::invalid_argument, "viewpoint height must be finite");
    if (!(v.theta_deg >= 0.0 && v.theta_deg < 360.0))
        fail(ErrorCode::invalid_argument, "viewpoint angle must lie in [0, 360) degrees");
}

inline Vec3 viewpoint_position(const Viewpoint& v) {
    const double t = v.theta_deg * kPi / 180.0;
    return {v.d_m * std::sin(t), v.h_cm / 100.0, v.d_m * std::cos(t)};
}

/// Zoom: the subject box is framed so its projection spans `fill` of the
/// limiting image dimension while staying inside the frame.
struct ZoomPolicy {
    Bounds subject;
    double fill = 0.8;
    int width = 600;
    int height = 400;
};

inline Camera viewpoint_to_camera(const Viewpoint& v, const ZoomPolicy& zoom) {
    validate(v);
    if (zoom.subject.empty()) fail(ErrorCode::invalid_argument, "zoom subject is empty");
    if (!(zoom.fill > 0.0 && zoom.fill < 1.0)) fail(ErrorCode::invalid_argument, "zoom fill must lie in (0, 1)");
    Camera cam;
    cam.position = viewpoint_position(v);
    cam.look_at = {0, 0, 0};
    cam.up = {0, 1, 0};
    cam.width = zoom.width;
    cam.height = zoom.height;
    cam.vertical_fov = 90.0;
    validate(cam);

    // Slopes of the subject corners in the camera frame (fov independent).
    const CameraFrame fr = camera_frame(cam);
    const double aspect = fr.aspect;
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (int i = 0; i < 8; ++i) {
        const Vec3 d = zoom.subject.corner(i) - cam.position;
        const double z = dot(d, fr.forward);
        if (!(z > 0.0)) fail(ErrorCode::invalid_argument, "zoom subject extends behind the viewpoint");
        const double x = dot(d, fr.right) / z / aspect, y = dot(d, fr.up) / z;
        xlo = std::min(xlo, x);
        xhi = std::max(xhi, x);
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
    }
    // The image spans [-t, t] in both normalized axes. Fill the limiting
    // extent, then widen if the off-center subject would leave the frame.
    const double span = std::max(xhi - xlo, yhi - ylo);
    const double reach = std::max({-xlo, xhi, -ylo, yhi});
    const double t = std::max(span / (2.0 * zoom.fill), reach / 0.98);
    cam.vertical_fov = 2.0 * std::atan(t) * 180.0 / kPi;
    return cam;
}

/// Cartesian product of eye heights and angles at one distance, heights outer.
inline std::vector<Viewpoint> viewpoint_grid(std::span<const double> heights_cm, std::span<const double> thetas_deg,
                                             double d_m) {
    std::vector<Viewpoint> out;
    for (double h : heights_cm)
        for (double t : thetas_deg) out.push_back({h, d_m, t});
    return out;
}

inline Quad project_quad(const Camera& cam, const std::array<Vec3, 4>& corners) {
    Quad q;
    for (std::size_t i = 0; i < 4; ++i) q[i] = project(cam, corners[i]);
    return q;
}

/// Image quad of the grass pixel's top footprint corners.
inline Quad project_pixel_corners(const SceneGeometry& scene, const Camera& cam) {
    return project_quad(cam, scene.outline);
}

/// Image quads of the 24 checker patches, row-major.
inline std::array<Quad, kCheckerPatches> project_checker_patches(const Camera& cam, const CheckerLayout& layout = {}) {
    std::array<Quad, kCheckerPatches> out;
    for (std::size_t i = 0; i < kCheckerPatches; ++i)
        out[i] = project_quad(cam, checker_patch_corners(layout, i, kCheckerPatchLift));
    return out;
}

/// Integer pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Smallest pixel rectangle holding every pixel whose center can lie inside
/// q, grown by `margin` pixels and clipped to the image.
inline PixelRect bounding_rect(const Quad& q, int width, int height, int margin = 1) {
    double xl = 1e300, xh = -1e300, yl = 1e300, yh = -1e300;
    for (const auto& p : q) {
        xl = std::min(xl, p.x);
        xh = std::max(xh, p.x);
        yl = std::min(yl, p.y);
        yh = std::max(yh, p.y);
    }
    auto clampi = [](double v, int hi) { return static_cast<int>(std::clamp(v, 0.0, static_cast<double>(hi))); };
    return {clampi(std::floor(xl) - margin, width), clampi(std::floor(yl) - margin, height),
            clampi(std::ceil(xh) + margin, width), clampi(std::ceil(yh) + margin, height)};
}

}  // namespace grassim
