#pragma once

// Procedural grass-pixel and color-checker geometry.
//
// World axes: y up, units meters. The grass pixel's footprint is centered on
// the origin in the xz plane with its base box resting on y = 0. Slits run
// along x and are stacked along z, so a viewer on the +z axis (theta = 0)
// looks across the slits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "grassim/colorimetry.hpp"
#include "grassim/error.hpp"
#include "grassim/rng.hpp"
#include "grassim/vec.hpp"

namespace grassim {

inline constexpr double kMillimeter = 1e-3;

struct Material {
    Color albedo = Color::linear_display(0.5, 0.5, 0.5);
    double metallic = 0.0;
    double smoothness = 0.5;
    double specular_weight = 0.04;  // dielectric reflectance of the glossy lobe
};

inline void validate(const Material& m) {
    if (m.albedo.space != ColorSpace::LinearDisplayRGB)
        fail(ErrorCode::invalid_argument, "material albedo must be linear display RGB");
    const Vec3& a = m.albedo.values;
    if (!is_finite(a) || a.x < 0 || a.y < 0 || a.z < 0 || max_component(a) > 1)
        fail(ErrorCode::out_of_range, "material albedo must lie in [0, 1]");
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(m.metallic) || !unit(m.smoothness) || !unit(m.specular_weight))
        fail(ErrorCode::out_of_range, "material metallic, smoothness and specular weight must lie in [0, 1]");
}

struct Bounds {
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};

    void extend(const Vec3& p) {
        lo = vmin(lo, p);
        hi = vmax(hi, p);
    }
    bool empty() const { return !(lo.x <= hi.x); }
    Vec3 corner(int i) const { return {(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z}; }
    Vec3 extent() const { return hi - lo; }
    friend bool operator==(const Bounds&, const Bounds&) = default;
};

enum class PrimitiveKind : std::uint8_t { Base, SlitFloor, FixedBlade, AdjustableBlade, Patch, Board };

struct Triangle {
    Vec3 v0, v1, v2;
    std::uint32_t material = 0;
    PrimitiveKind kind = PrimitiveKind::Base;
    friend bool operator==(const Triangle&, const Triangle&) = default;
};

struct SceneGeometry {
    std::vector<Triangle> triangles;
    std::vector<Material> materials;
    Bounds bounds;
    /// Corners of the measured region in world space, ordered so that from a
    /// theta = 0 viewpoint they project to top-left, top-right, bottom-right,
    /// bottom-left.
    std::array<Vec3, 4> outline{};

    void add(const Vec3& a, const Vec3& b, const Vec3& c, std::uint32_t material, PrimitiveKind kind) {
        triangles.push_back({a, b, c, material, kind});
        bounds.extend(a);
        bounds.extend(b);
        bounds.extend(c);
    }
    void add_quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, std::uint32_t material,
                  PrimitiveKind kind) {
        add(a, b, c, material, kind);
        add(a, c, d, material, kind);
    }
    std::size_t count(PrimitiveKind kind) const {
        return static_cast<std::size_t>(
            std::count_if(triangles.begin(), triangles.end(), [&](const Triangle& t) { return t.kind == kind; }));
    }

    friend bool operator==(const SceneGeometry& a, const SceneGeometry& b) {
        return a.triangles == b.triangles && a.bounds == b.bounds && a.outline == b.outline &&
               a.materials.size() == b.materials.size() &&
               std::equal(a.materials.begin(), a.materials.end(), b.materials.begin(),
                          [](const Material& x, const Material& y) {
                              return x.albedo == y.albedo && x.metallic == y.metallic &&
                                     x.smoothness == y.smoothness && x.specular_weight == y.specular_weight;
                          });
    }
};

/// Grass-pixel parameters. Lengths are millimeters, densities blades per cm².
struct GrassPixelParams {
    double surface_size = 33.5;
    double base_height = 15.0;
    double fixed_length = 10.0;
    int slit_count = 3;
    double slit_width = 5.7;
    double adjustable_min = 0.0;
    double adjustable_max = 20.0;
    Color fixed_albedo = decode_srgb({214, 186, 52});
    Color adjustable_albedo = decode_srgb({58, 128, 42});
    Color base_albedo = decode_srgb({46, 46, 46});
    Color slit_albedo = decode_srgb({18, 18, 18});
    double fixed_density = 100.0;
    double adjustable_density = 60.0;
    double fixed_blade_width = 1.2;
    double adjustable_blade_width = 1.0;
    double tip_taper = 0.6;        // tip width as a fraction of root width
    double fixed_max_tilt = 35.0;       // degrees from vertical
    double adjustable_max_tilt = 20.0;  // degrees from vertical
    double smoothness = 0.5;
    double specular_weight = 0.04;
    std::uint64_t seed = 1;
};

namespace detail {

inline bool positive(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace detail

inline void validate(const GrassPixelParams& p) {
    using detail::positive;
    if (!positive(p.surface_size) || !positive(p.base_height) || !positive(p.fixed_length) ||
        !positive(p.slit_width) || !positive(p.fixed_blade_width) || !positive(p.adjustable_blade_width))
        fail(ErrorCode::invalid_argument, "grass pixel sizes must be positive");
    if (p.slit_count < 1) fail(ErrorCode::invalid_argument, "slit count must be at least 1");
    if (p.slit_count * p.slit_width >= p.surface_size)
        fail(ErrorCode::invalid_argument, "slits do not fit within the surface");
    if (!(p.adjustable_min >= 0.0) || !(p.adjustable_max > p.adjustable_min) || !std::isfinite(p.adjustable_max))
        fail(ErrorCode::invalid_argument, "adjustable range must satisfy 0 <= min < max");
    if (!positive(p.fixed_density) || !positive(p.adjustable_density))
        fail(ErrorCode::invalid_argument, "blade densities must be positive");
    if (!(p.tip_taper > 0.0 && p.tip_taper <= 1.0)) fail(ErrorCode::invalid_argument, "tip taper must lie in (0, 1]");
    for (double t : {p.fixed_max_tilt, p.adjustable_max_tilt})
        if (!(t >= 0.0 && t < 45.0)) fail(ErrorCode::invalid_argument, "blade tilt must lie in [0, 45) degrees");
    for (const Color& c : {p.fixed_albedo, p.adjustable_albedo, p.base_albedo, p.slit_albedo})
        validate(Material{c, 0.0, p.smoothness, p.specular_weight});
}

/// z interval (mm) of slit k, k = 0 nearest -z. Solid strips of equal width
/// separate the slits and border the two outer ones.
inline std::pair<double, double> slit_interval(const GrassPixelParams& p, int k) {
    const double strip = (p.surface_size - p.slit_count * p.slit_width) / (p.slit_count + 1);
    const double z0 = -0.5 * p.surface_size + strip + k * (p.slit_width + strip);
    return {z0, z0 + p.slit_width};
}

/// Boundaries (mm, increasing) between strips and slits along z, including
/// both footprint edges.
inline std::vector<double> strip_edges(const GrassPixelParams& p) {
    std::vector<double> z{-0.5 * p.surface_size};
    for (int k = 0; k < p.slit_count; ++k) {
        const auto [a, b] = slit_interval(p, k);
        z.push_back(a);
        z.push_back(b);
    }
    z.push_back(0.5 * p.surface_size);
    return z;
}

inline bool in_slit(const GrassPixelParams& p, double z_mm) {
    for (int k = 0; k < p.slit_count; ++k) {
        const auto [a, b] = slit_interval(p, k);
        if (z_mm >= a && z_mm < b) return true;
    }
    return false;
}

/// Root and lean of one blade, independent of its height. Positions in mm,
/// relative to the footprint center on the base top.
struct BladePlacement {
    double x = 0, z = 0;
    double lean_x = 0, lean_z = 0;  // horizontal offset of the tip per unit height
    double yaw = 0;                 // orientation of the card's width axis
    friend bool operator==(const BladePlacement&, const BladePlacement&) = default;
};

inline long blade_count(double density_per_cm2, double area_mm2) {
    return std::lround(density_per_cm2 * area_mm2 / 100.0);
}

inline double slit_area(const GrassPixelParams& p) { return p.slit_count * p.slit_width * p.surface_size; }
inline double strip_area(const GrassPixelParams& p) { return p.surface_size * p.surface_size - slit_area(p); }

/// Seeded placement of fixed (in_slits = false) or adjustable blades. Roots are
/// uniform over their region; tips at `reach` mm above the root are kept inside
/// the footprint by rejection.
inline std::vector<BladePlacement> place_blades(const GrassPixelParams& p, bool in_slits, double reach) {
    const long n = blade_count(in_slits ? p.adjustable_density : p.fixed_density, in_slits ? slit_area(p) : strip_area(p));
    SplitMix64 rng(mix64(p.seed) ^ (in_slits ? 0x2545f4914f6cdd1dULL : 0x9e3779b97f4a7c15ULL));
    const double half = 0.5 * p.surface_size;
    const double max_lean = std::tan((in_slits ? p.adjustable_max_tilt : p.fixed_max_tilt) * kPi / 180.0);
    std::vector<BladePlacement> out;
    out.reserve(static_cast<std::size_t>(n));
    while (static_cast<long>(out.size()) < n) {
        BladePlacement b;
        b.x = rng.uniform(-half, half);
        b.z = rng.uniform(-half, half);
        const double lean = max_lean * std::sqrt(rng.uniform());
        const double dir = rng.uniform(0.0, 2.0 * kPi);
        b.lean_x = lean * std::cos(dir);
        b.lean_z = lean * std::sin(dir);
        b.yaw = rng.uniform(0.0, kPi);
        if (in_slit(p, b.z) != in_slits) continue;
        const double tx = b.x + b.lean_x * reach, tz = b.z + b.lean_z * reach;
        if (std::abs(tx) > half || std::abs(tz) > half) continue;
        out.push_back(b);
    }
    return out;
}

namespace detail {

inline void add_blade(SceneGeometry& g, const BladePlacement& b, double base_y, double height, double width,
                      double taper, std::uint32_t material, PrimitiveKind kind) {
    const Vec3 root{b.x * kMillimeter, base_y, b.z * kMillimeter};
    const Vec3 tip = root + Vec3{b.lean_x * height, height, b.lean_z * height} * kMillimeter;
    const Vec3 across{std::cos(b.yaw), 0.0, std::sin(b.yaw)};
    const Vec3 hw = across * (0.5 * width * kMillimeter);
    g.add_quad(root - hw, root + hw, tip + hw * taper, tip - hw * taper, material, kind);
}

}  // namespace detail

/// Material slots of a grass-pixel scene.
enum GrassMaterial : std::uint32_t { kBaseMaterial = 0, kSlitMaterial = 1, kFixedMaterial = 2, kAdjustableMaterial = 3 };

/// Axis-aligned box enclosing the grass pixel at any adjustable length; used
/// to frame cameras so framing does not change along a sweep.
inline Bounds grass_pixel_bounds(const GrassPixelParams& p) {
    const double half = 0.5 * p.surface_size * kMillimeter;
    const double top = (p.base_height + std::max(p.fixed_length, p.adjustable_max)) * kMillimeter;
    Bounds b;
    b.extend({-half, 0.0, -half});
    b.extend({half, top, half});
    return b;
}

/// Builds the grass pixel with the adjustable blades' tips `length` mm above
/// the base top. Blade placement depends only on the seed, so the same blades
/// grow as the length changes.
inline SceneGeometry build_grass_pixel(const GrassPixelParams& p, double length) {
    validate(p);
    if (!(length >= p.adjustable_min && length <= p.adjustable_max))
        fail(ErrorCode::out_of_range, "length out of range: " + std::to_string(length) + " mm not in [" +
                                          std::to_string(p.adjustable_min) + ", " + std::to_string(p.adjustable_max) +
                                          "]");
    SceneGeometry g;
    const double ks = p.specular_weight;
    g.materials = {Material{p.base_albedo, 0.0, p.smoothness, ks}, Material{p.slit_albedo, 0.0, p.smoothness, ks},
                   Material{p.fixed_albedo, 0.0, p.smoothness, ks}, Material{p.adjustable_albedo, 0.0, p.smoothness, ks}};

    const double h = 0.5 * p.surface_size * kMillimeter;
    const double top = p.base_height * kMillimeter;
    const std::vector<double> edges = strip_edges(p);

    // Closed box. Faces whose edges meet the strip boundaries are split at
    // those boundaries so every edge is shared by exactly two triangles.
    g.add_quad({-h, 0, -h}, {-h, top, -h}, {h, top, -h}, {h, 0, -h}, kBaseMaterial, PrimitiveKind::Base);
    g.add_quad({-h, 0, h}, {h, 0, h}, {h, top, h}, {-h, top, h}, kBaseMaterial, PrimitiveKind::Base);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        const double z0 = edges[k] * kMillimeter, z1 = edges[k + 1] * kMillimeter;
        const bool slit = k % 2 == 1;
        g.add_quad({-h, top, z0}, {-h, top, z1}, {h, top, z1}, {h, top, z0}, slit ? kSlitMaterial : kBaseMaterial,
                   slit ? PrimitiveKind::SlitFloor : PrimitiveKind::Base);
        g.add_quad({-h, 0, z0}, {h, 0, z0}, {h, 0, z1}, {-h, 0, z1}, kBaseMaterial, PrimitiveKind::Base);
        g.add_quad({-h, 0, z0}, {-h, 0, z1}, {-h, top, z1}, {-h, top, z0}, kBaseMaterial, PrimitiveKind::Base);
        g.add_quad({h, 0, z0}, {h, top, z0}, {h, top, z1}, {h, 0, z1}, kBaseMaterial, PrimitiveKind::Base);
    }

    for (const auto& b : place_blades(p, false, p.fixed_length))
        detail::add_blade(g, b, top, p.fixed_length, p.fixed_blade_width, p.tip_taper, kFixedMaterial,
                          PrimitiveKind::FixedBlade);
    if (length > 0.0)
        for (const auto& b : place_blades(p, true, p.adjustable_max))
            detail::add_blade(g, b, top, length, p.adjustable_blade_width, p.tip_taper, kAdjustableMaterial,
                              PrimitiveKind::AdjustableBlade);

    g.outline = {Vec3{-h, top, -h}, Vec3{h, top, -h}, Vec3{h, top, h}, Vec3{-h, top, h}};
    return g;
}

// Color checker.

inline constexpr std::size_t kCheckerPatches = 24;

/// Nominal sRGB values of the 24-patch ColorChecker Classic, row-major.
inline constexpr std::array<EncodedSRGB, kCheckerPatches> kColorCheckerSRGB{{
    {115, 82, 68},   {194, 150, 130}, {98, 122, 157},  {87, 108, 67},   {133, 128, 177}, {103, 189, 170},
    {214, 126, 44},  {80, 91, 166},   {193, 90, 99},   {94, 60, 108},   {157, 188, 64},  {224, 163, 46},
    {56, 61, 150},   {70, 148, 73},   {175, 54, 60},   {231, 199, 31},  {187, 86, 149},  {8, 133, 161},
    {243, 243, 242}, {200, 200, 200}, {160, 160, 160}, {122, 122, 121}, {85, 85, 85},    {52, 52, 52},
}};

inline std::array<Color, kCheckerPatches> default_checker_albedos() {
    std::array<Color, kCheckerPatches> out;
    for (std::size_t i = 0; i < kCheckerPatches; ++i) out[i] = decode_srgb(kColorCheckerSRGB[i]);
    return out;
}

struct CheckerLayout {
    double patch_size = 40.0;  // mm
    double gutter = 6.0;       // mm
    Color board_albedo = decode_srgb({30, 30, 30});
};

inline Vec2 checker_extent(const CheckerLayout& l) {
    return {6 * l.patch_size + 7 * l.gutter, 4 * l.patch_size + 5 * l.gutter};
}

/// World corners of patch i (row-major, row 0 toward -z, column 0 toward -x),
/// in the same order as SceneGeometry::outline.
inline std::array<Vec3, 4> checker_patch_corners(const CheckerLayout& l, std::size_t i, double y) {
    const Vec2 ext = checker_extent(l);
    const double row = static_cast<double>(i / 6), col = static_cast<double>(i % 6);
    const double x0 = (-0.5 * ext.x + l.gutter + col * (l.patch_size + l.gutter)) * kMillimeter;
    const double z0 = (-0.5 * ext.y + l.gutter + row * (l.patch_size + l.gutter)) * kMillimeter;
    const double s = l.patch_size * kMillimeter;
    return {Vec3{x0, y, z0}, Vec3{x0 + s, y, z0}, Vec3{x0 + s, y, z0 + s}, Vec3{x0, y, z0 + s}};
}

inline constexpr double kCheckerPatchLift = 0.5 * kMillimeter;

/// Flat 4x6 checker lying on y = 0: a board with the patches raised slightly
/// above it. Material i is patch i; material 24 is the board.
inline SceneGeometry build_color_checker(std::span<const Color> patch_albedos, const CheckerLayout& layout = {}) {
    if (patch_albedos.size() != kCheckerPatches)
        fail(ErrorCode::invalid_argument, "color checker needs exactly 24 albedos");
    SceneGeometry g;
    for (const Color& c : patch_albedos) {
        Material m{c, 0.0, 0.5, 0.0};
        validate(m);
        g.materials.push_back(m);
    }
    g.materials.push_back(Material{layout.board_albedo, 0.0, 0.5, 0.0});
    const Vec2 ext = checker_extent(layout);
    const double hx = 0.5 * ext.x * kMillimeter, hz = 0.5 * ext.y * kMillimeter;
    g.add_quad({-hx, 0, -hz}, {-hx, 0, hz}, {hx, 0, hz}, {hx, 0, -hz}, kCheckerPatches, PrimitiveKind::Board);
    for (std::size_t i = 0; i < kCheckerPatches; ++i) {
        const auto c = checker_patch_corners(layout, i, kCheckerPatchLift);
        g.add_quad(c[0], c[3], c[2], c[1], static_cast<std::uint32_t>(i), PrimitiveKind::Patch);
    }
    g.outline = {Vec3{-hx, 0, -hz}, Vec3{hx, 0, -hz}, Vec3{hx, 0, hz}, Vec3{-hx, 0, hz}};
    return g;
}

}  // namespace grassim
