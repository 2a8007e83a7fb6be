#pragma once

// Environment lighting: equirectangular radiance maps, photometric
// normalization to a measured illuminance, and the directional sun.
//
// Conventions
//   * World is y-up. A direction with polar angle theta (from +y) and azimuth
//     phi (from -z toward +x) is (sin t sin p, cos t, -sin t cos p).
//   * Texel (i, j) of a W x H map covers phi in [2 pi i/W, 2 pi (i+1)/W) and
//     theta in [pi j/H, pi (j+1)/H); row 0 is the zenith.
//   * Radiance values are linear display RGB. Photometric quantities use the
//     Rec.709 luminance of a value times 683 lm/W, so a horizontal surface
//     under a uniform sky of luminance Y receives 683 * pi * Y lux.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "grassim/colorimetry.hpp"
#include "grassim/error.hpp"
#include "grassim/vec.hpp"

namespace grassim {

inline constexpr double kLumensPerWatt = 683.0;

struct EnvironmentMap {
    int width = 0;
    int height = 0;
    std::vector<Vec3> texels;  // unscaled radiance, row-major
    double intensity_scale = 1.0;

    EnvironmentMap() = default;
    EnvironmentMap(int w, int h) : width(w), height(h), texels(static_cast<std::size_t>(w) * h) {}

    const Vec3& texel(int i, int j) const { return texels[static_cast<std::size_t>(j) * width + i]; }
    Vec3& texel(int i, int j) { return texels[static_cast<std::size_t>(j) * width + i]; }

    /// Scaled radiance arriving from direction `dir` (unit vector).
    Vec3 radiance(const Vec3& dir) const {
        const auto [i, j] = texel_index(dir);
        return texel(i, j) * intensity_scale;
    }

    std::pair<int, int> texel_index(const Vec3& dir) const {
        const double theta = std::acos(std::clamp(dir.y, -1.0, 1.0));
        double phi = std::atan2(dir.x, -dir.z);
        if (phi < 0) phi += 2.0 * kPi;
        const int i = std::clamp(static_cast<int>(phi / (2.0 * kPi) * width), 0, width - 1);
        const int j = std::clamp(static_cast<int>(theta / kPi * height), 0, height - 1);
        return {i, j};
    }
};

inline Vec3 direction_from_angles(double theta, double phi) {
    const double st = std::sin(theta);
    return {st * std::sin(phi), std::cos(theta), -st * std::cos(phi)};
}

/// Unit vector toward a light at the given azimuth (from -z toward +x) and
/// elevation above the horizon, both in degrees.
inline Vec3 direction_from_azimuth_elevation(double azimuth_deg, double elevation_deg) {
    const double a = azimuth_deg * kPi / 180.0, e = elevation_deg * kPi / 180.0;
    return {std::cos(e) * std::sin(a), std::sin(e), -std::cos(e) * std::cos(a)};
}

inline void validate(const EnvironmentMap& env) {
    if (env.width <= 0 || env.height <= 0 || env.texels.size() != static_cast<std::size_t>(env.width) * env.height)
        fail(ErrorCode::invalid_argument, "environment map has inconsistent dimensions");
    if (env.width != 2 * env.height)
        fail(ErrorCode::invalid_argument, "environment map must be equirectangular (width = 2 x height)");
    if (!(env.intensity_scale > 0.0) || !std::isfinite(env.intensity_scale))
        fail(ErrorCode::invalid_argument, "environment intensity scale must be positive");
    for (const auto& t : env.texels)
        if (!is_finite(t) || t.x < 0 || t.y < 0 || t.z < 0)
            fail(ErrorCode::invalid_argument, "environment radiance must be finite and non-negative");
}

/// Illuminance (lux) on an unoccluded upward-facing surface. Each texel row's
/// cos-weighted solid angle is integrated exactly, so a constant map gives
/// exactly 683 * pi * Y.
inline double horizontal_illuminance(const EnvironmentMap& env) {
    const double dphi = 2.0 * kPi / env.width;
    double sum = 0.0;
    for (int j = 0; j < env.height; ++j) {
        const double t0 = kPi * j / env.height;
        if (t0 >= 0.5 * kPi) break;
        const double t1 = std::min(kPi * (j + 1) / env.height, 0.5 * kPi);
        const double s0 = std::sin(t0), s1 = std::sin(t1);
        const double weight = 0.5 * (s1 * s1 - s0 * s0) * dphi;
        double row = 0.0;
        for (int i = 0; i < env.width; ++i) row += luminance(env.texel(i, j));
        sum += row * weight;
    }
    return kLumensPerWatt * sum * env.intensity_scale;
}

/// Returns a copy whose intensity scale makes horizontal_illuminance equal
/// target_lux. The scale is computed from the unscaled texels, so repeated
/// normalization to the same target is a no-op.
inline EnvironmentMap normalize_to_lux(EnvironmentMap env, double target_lux) {
    if (!(target_lux > 0.0) || !std::isfinite(target_lux))
        fail(ErrorCode::invalid_argument, "target illuminance must be positive");
    env.intensity_scale = 1.0;
    const double raw = horizontal_illuminance(env);
    if (!(raw > 0.0)) fail(ErrorCode::invalid_argument, "environment map has no energy in the upper hemisphere");
    env.intensity_scale = target_lux / raw;
    return env;
}

struct SunLight {
    Vec3 direction{0, 1, 0};  // toward the sun
    double illuminance = 0.0;  // lux on a surface facing the sun

    /// Irradiance in radiance units (per channel, white sun) on a surface
    /// facing the sun.
    double irradiance() const { return illuminance / kLumensPerWatt; }
};

/// Sun component from illuminance measured with and without direct sunlight.
inline SunLight split_sun(double total_lux, double ambient_lux, const Vec3& direction) {
    if (!(ambient_lux >= 0.0)) fail(ErrorCode::invalid_argument, "ambient illuminance must be non-negative");
    if (!(total_lux >= ambient_lux))
        fail(ErrorCode::invalid_argument, "total illuminance is below ambient illuminance");
    if (std::abs(length(direction) - 1.0) > 1e-9) fail(ErrorCode::invalid_argument, "sun direction must be unit length");
    return {direction, total_lux - ambient_lux};
}

struct LightingRig {
    EnvironmentMap env;
    std::optional<SunLight> sun;
    double ambient_lux = 0.0;
};

/// Horizontal illuminance at the rig origin from environment plus sun, with no
/// occluders.
inline double rig_illuminance(const LightingRig& rig) {
    double e = horizontal_illuminance(rig.env);
    if (rig.sun && rig.sun->direction.y > 0) e += rig.sun->illuminance * rig.sun->direction.y;
    return e;
}

/// Loads the map and normalizes it to the ambient illuminance.
inline LightingRig make_rig(EnvironmentMap env, double ambient_lux, std::optional<SunLight> sun = std::nullopt) {
    validate(env);
    LightingRig rig;
    rig.env = normalize_to_lux(std::move(env), ambient_lux);
    rig.ambient_lux = ambient_lux;
    rig.sun = sun;
    return rig;
}

/// Same rig with every emitter multiplied by k.
inline LightingRig scale_lights(LightingRig rig, double k) {
    rig.env.intensity_scale *= k;
    rig.ambient_lux *= k;
    if (rig.sun) rig.sun->illuminance *= k;
    return rig;
}

// Synthetic environments bundled for tests and demos.

inline EnvironmentMap make_uniform_env(int height, const Vec3& radiance) {
    EnvironmentMap env(2 * height, height);
    std::fill(env.texels.begin(), env.texels.end(), radiance);
    return env;
}

/// Sky blending from horizon to zenith color over the upper hemisphere and a
/// constant ground below.
inline EnvironmentMap make_gradient_sky(int height, const Vec3& zenith, const Vec3& horizon, const Vec3& ground) {
    EnvironmentMap env(2 * height, height);
    for (int j = 0; j < height; ++j) {
        const double theta = kPi * (j + 0.5) / height;
        Vec3 c = ground;
        if (theta < 0.5 * kPi) {
            const double t = std::cos(theta);
            c = horizon * (1.0 - t) + zenith * t;
        }
        for (int i = 0; i < env.width; ++i) env.texel(i, j) = c;
    }
    return env;
}

/// Room lit by a bright rectangular ceiling panel slightly behind the viewer
/// side, dim walls and a darker floor; a stand-in for a classroom HDRI.
inline EnvironmentMap make_indoor_env(int height) {
    EnvironmentMap env(2 * height, height);
    const Vec3 panel{40.0, 39.0, 36.0};
    const Vec3 wall{0.9, 0.88, 0.82};
    const Vec3 floor{0.35, 0.33, 0.3};
    for (int j = 0; j < height; ++j) {
        const double theta = kPi * (j + 0.5) / height;
        for (int i = 0; i < env.width; ++i) {
            const double phi = 2.0 * kPi * (i + 0.5) / env.width;
            const Vec3 d = direction_from_angles(theta, phi);
            Vec3 c = theta < 0.5 * kPi ? wall : floor;
            // panel: a rectangle on a ceiling plane one unit above the origin
            if (d.y > 0.2) {
                const double x = d.x / d.y, z = d.z / d.y;
                if (std::abs(x) < 0.45 && z > -0.2 && z < 0.6) c = panel;
            }
            env.texel(i, j) = c;
        }
    }
    return env;
}

}  // namespace grassim
