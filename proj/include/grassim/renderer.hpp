#pragma once

// CPU path tracer producing scene-linear images.
//
// Radiance convention: the renderer works in linear display RGB radiance
// (W-like units) where a surface irradiated by E_e has E_v = 683 * E_e lux.
// The sun is a white delta light of irradiance illuminance / 683.
//
// Each camera sample traces one path: direct light at every vertex from the
// sun (shadow ray) and the environment (multiple importance sampling of an
// environment CDF and the BSDF), continued by BSDF sampling for up to
// `bounces` indirect bounces. Random numbers come from a counter-based
// generator keyed on (seed, pixel, sample), and each pixel is written by one
// task, so images are bit-identical for any worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grassim/bvh.hpp"
#include "grassim/camera.hpp"
#include "grassim/error.hpp"
#include "grassim/image.hpp"
#include "grassim/lighting.hpp"
#include "grassim/parallel.hpp"
#include "grassim/rng.hpp"
#include "grassim/scene.hpp"

namespace grassim {

/// Importance sampler for an environment map: texels are drawn with
/// probability proportional to luminance times solid angle, then uniformly
/// in solid angle inside the texel, so the density is constant per texel.
/// Maps with fewer than kMinTexels texels are sampled uniformly over the
/// sphere.
class EnvSampler {
public:
    static constexpr int kMinTexels = 64;

    explicit EnvSampler(const EnvironmentMap& env) : env_(&env) {
        const int w = env.width, h = env.height;
        double total = 0;
        for (const auto& t : env.texels) total += luminance(t);
        if (!(total > 0.0)) return;
        if (w * h < kMinTexels) {
            mode_ = Mode::Uniform;
            return;
        }
        cond_.assign(static_cast<std::size_t>(w + 1) * h, 0.0);
        row_.assign(static_cast<std::size_t>(h) + 1, 0.0);
        solid_angle_.resize(static_cast<std::size_t>(h));
        for (int j = 0; j < h; ++j) {
            const double s = 2.0 * kPi / w * (std::cos(kPi * j / h) - std::cos(kPi * (j + 1) / h));
            solid_angle_[static_cast<std::size_t>(j)] = s;
            double* c = &cond_[static_cast<std::size_t>(j) * (w + 1)];
            for (int i = 0; i < w; ++i) c[i + 1] = c[i] + std::max(0.0, luminance(env.texel(i, j))) * s;
            row_[static_cast<std::size_t>(j) + 1] = row_[static_cast<std::size_t>(j)] + c[w];
        }
        mode_ = Mode::Texel;
    }

    bool active() const { return mode_ != Mode::Off; }

    /// Direction toward the environment and its solid-angle density.
    Vec3 sample(double u1, double u2, double& pdf) const {
        if (mode_ == Mode::Uniform) {
            const double y = 1.0 - 2.0 * u1, r = std::sqrt(std::max(0.0, 1.0 - y * y)), phi = 2.0 * kPi * u2;
            pdf = 1.0 / (4.0 * kPi);
            return {r * std::sin(phi), y, -r * std::cos(phi)};
        }
        const int w = env_->width, h = env_->height;
        const auto [j, fv] = pick(row_.data(), h, u1);
        const double* c = &cond_[static_cast<std::size_t>(j) * (w + 1)];
        const auto [i, fu] = pick(c, w, u2);
        const double c0 = std::cos(kPi * j / h), c1 = std::cos(kPi * (j + 1) / h);
        const double cos_t = c0 + (c1 - c0) * fv, sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
        const double phi = 2.0 * kPi * (i + fu) / w;
        pdf = texel_pdf(i, j);
        return {sin_t * std::sin(phi), cos_t, -sin_t * std::cos(phi)};
    }

    double pdf(const Vec3& d) const {
        if (mode_ == Mode::Off) return 0.0;
        if (mode_ == Mode::Uniform) return 1.0 / (4.0 * kPi);
        const auto [i, j] = env_->texel_index(d);
        return texel_pdf(i, j);
    }

private:
    enum class Mode { Off, Uniform, Texel };

    // Index k with cdf[k] <= u * cdf[n] < cdf[k+1] and the fractional
    // position inside that bin.
    static std::pair<int, double> pick(const double* cdf, int n, double u) {
        const double target = u * cdf[n];
        int k = static_cast<int>(std::upper_bound(cdf, cdf + n + 1, target) - cdf) - 1;
        k = std::clamp(k, 0, n - 1);
        while (cdf[k + 1] <= cdf[k] && k > 0) --k;  // skip empty bins
        const double width = cdf[k + 1] - cdf[k];
        const double f = width > 0 ? std::clamp((target - cdf[k]) / width, 0.0, 1.0 - 1e-16) : 0.5;
        return {k, f};
    }

    double texel_pdf(int i, int j) const {
        const int w = env_->width, h = env_->height;
        const double* c = &cond_[static_cast<std::size_t>(j) * (w + 1)];
        const double p = (c[i + 1] - c[i]) / row_[static_cast<std::size_t>(h)];
        return p / solid_angle_[static_cast<std::size_t>(j)];
    }

    const EnvironmentMap* env_;
    Mode mode_ = Mode::Off;
    std::vector<double> cond_;  // per-row prefix sums, (w + 1) entries each
    std::vector<double> row_;   // prefix sums of row totals
    std::vector<double> solid_angle_;  // per texel, by row
};

/// Lambertian diffuse plus a GGX reflection lobe of constant weight. The
/// diffuse part is scaled by (1 - specular_weight) so albedo <= 1 never
/// reflects more than it receives.
struct Bsdf {
    Vec3 n;
    Vec3 diffuse;      // albedo * (1 - ks) / pi
    double ks = 0.0;
    double alpha = 0.25;  // GGX alpha = roughness^2, roughness = 1 - smoothness
    double p_spec = 0.0;  // probability of sampling the glossy lobe

    Bsdf(const Vec3& normal, const Material& m) : n(normal) {
        ks = m.specular_weight;
        diffuse = m.albedo.values * ((1.0 - ks) / kPi);
        const double r = std::max(1.0 - m.smoothness, 0.02);
        alpha = r * r;
        if (ks > 0) {
            const double kd = (1.0 - ks) * luminance(m.albedo.values);
            p_spec = std::clamp(ks / (ks + kd), 0.05, 0.95);
        }
    }

    double ggx_d(double nh) const {
        const double a2 = alpha * alpha, t = nh * nh * (a2 - 1.0) + 1.0;
        return a2 / (kPi * t * t);
    }
    double smith_g1(double c) const {
        const double a2 = alpha * alpha;
        return 2.0 * c / (c + std::sqrt(a2 + (1.0 - a2) * c * c));
    }

    Vec3 eval(const Vec3& wo, const Vec3& wi) const {
        const double ci = dot(n, wi), co = dot(n, wo);
        if (ci <= 0 || co <= 0) return {};
        Vec3 f = diffuse;
        if (ks > 0) {
            const Vec3 h = normalize(wo + wi);
            const double spec = ks * ggx_d(dot(n, h)) * smith_g1(ci) * smith_g1(co) / (4.0 * ci * co);
            f += Vec3{spec, spec, spec};
        }
        return f;
    }

    double pdf(const Vec3& wo, const Vec3& wi) const {
        const double ci = dot(n, wi);
        if (ci <= 0 || dot(n, wo) <= 0) return 0.0;
        double p = (1.0 - p_spec) * ci / kPi;
        if (p_spec > 0) {
            const Vec3 h = normalize(wo + wi);
            const double nh = dot(n, h);
            p += p_spec * ggx_d(nh) * nh / (4.0 * std::max(dot(wo, h), 1e-12));
        }
        return p;
    }

    /// Samples an incident direction; returns false if it points below the
    /// surface.
    bool sample(const Vec3& wo, double u0, double u1, double u2, Vec3& wi) const {
        Vec3 t, b;
        orthonormal_basis(n, t, b);
        if (u0 < p_spec) {
            const double a2 = alpha * alpha;
            const double cos_h = std::sqrt((1.0 - u1) / (1.0 + (a2 - 1.0) * u1));
            const double sin_h = std::sqrt(std::max(0.0, 1.0 - cos_h * cos_h)), phi = 2.0 * kPi * u2;
            const Vec3 h = t * (sin_h * std::cos(phi)) + b * (sin_h * std::sin(phi)) + n * cos_h;
            wi = h * (2.0 * dot(wo, h)) - wo;
        } else {
            const double r = std::sqrt(u1), phi = 2.0 * kPi * u2;
            wi = t * (r * std::cos(phi)) + b * (r * std::sin(phi)) + n * std::sqrt(std::max(0.0, 1.0 - u1));
        }
        return dot(n, wi) > 0;
    }
};

struct RenderSettings {
    int spp = 16;
    std::uint64_t seed = 1;
    int bounces = 2;
    int workers = 0;  // 0: one per hardware thread
    /// Pixels outside the crop are left black; pixels inside are identical to
    /// a full render.
    std::optional<PixelRect> crop;
};

/// Scene plus acceleration structure, built once and shared read-only.
class PreparedScene {
public:
    explicit PreparedScene(const SceneGeometry& g) : geo_(&g), bvh_(g.triangles) {
        if (g.triangles.empty()) fail(ErrorCode::invalid_argument, "cannot render an empty scene");
        for (const auto& m : g.materials) validate(m);
        normals_.reserve(g.triangles.size());
        for (const auto& t : g.triangles) {
            if (t.material >= g.materials.size()) fail(ErrorCode::invalid_argument, "triangle references a missing material");
            const Vec3 c = cross(t.v1 - t.v0, t.v2 - t.v0);
            const double len = length(c);
            normals_.push_back(len > 0 ? c / len : Vec3{0, 1, 0});
        }
    }

    const SceneGeometry& geometry() const { return *geo_; }
    const Bvh& bvh() const { return bvh_; }
    const Vec3& normal(std::uint32_t prim) const { return normals_[prim]; }
    const Material& material(std::uint32_t prim) const { return geo_->materials[geo_->triangles[prim].material]; }

private:
    const SceneGeometry* geo_;
    Bvh bvh_;
    std::vector<Vec3> normals_;
};

namespace detail {

inline constexpr double kRayOffset = 1e-7;  // meters

inline double power_heuristic(double a, double b) {
    const double a2 = a * a, b2 = b * b;
    return a2 + b2 > 0 ? a2 / (a2 + b2) : 0.0;
}

inline Vec3 trace_path(const PreparedScene& scene, const LightingRig& rig, const EnvSampler& env_sampler, Ray ray,
                       int bounces, CounterRng& rng) {
    Vec3 radiance{}, beta{1, 1, 1};
    double bsdf_pdf = 0.0;  // density of the direction that produced `ray`, 0 for camera rays
    for (int depth = 0;; ++depth) {
        Hit hit;
        if (!scene.bvh().intersect(ray, hit)) {
            const Vec3 le = rig.env.radiance(ray.dir);
            const double w = depth == 0 || !env_sampler.active() ? 1.0
                                                                 : power_heuristic(bsdf_pdf, env_sampler.pdf(ray.dir));
            radiance += beta * le * w;
            break;
        }
        if (depth > bounces) break;

        const Vec3 p = ray.origin + ray.dir * hit.t;
        const Vec3 wo = -ray.dir;
        Vec3 n = scene.normal(hit.prim);
        if (dot(n, wo) < 0) n = -n;  // two-sided surfaces
        const Bsdf bsdf(n, scene.material(hit.prim));
        const Vec3 origin = p + n * kRayOffset;

        if (rig.sun && rig.sun->illuminance > 0) {
            const double c = dot(n, rig.sun->direction);
            if (c > 0 && !scene.bvh().occluded({origin, rig.sun->direction}, 0.0, 1e30))
                radiance += beta * bsdf.diffuse * (rig.sun->irradiance() * c);
        }

        if (env_sampler.active()) {
            double light_pdf = 0;
            const double u1 = rng.uniform(), u2 = rng.uniform();
            const Vec3 wi = env_sampler.sample(u1, u2, light_pdf);
            const double c = dot(n, wi);
            if (light_pdf > 0 && c > 0) {
                const Vec3 f = bsdf.eval(wo, wi);
                if (max_component(f) > 0 && !scene.bvh().occluded({origin, wi}, 0.0, 1e30)) {
                    const double w = power_heuristic(light_pdf, bsdf.pdf(wo, wi));
                    radiance += beta * f * rig.env.radiance(wi) * (c * w / light_pdf);
                }
            }
        }

        Vec3 wi;
        const double u0 = rng.uniform(), u1 = rng.uniform(), u2 = rng.uniform();
        if (!bsdf.sample(wo, u0, u1, u2, wi)) break;
        bsdf_pdf = bsdf.pdf(wo, wi);
        if (!(bsdf_pdf > 0)) break;
        beta = beta * bsdf.eval(wo, wi) * (dot(n, wi) / bsdf_pdf);
        ray = {origin, wi};
    }
    return radiance;
}

}  // namespace detail

inline constexpr int kTileSize = 16;

inline LinearImage render(const PreparedScene& scene, const LightingRig& rig, const Camera& cam,
                          const RenderSettings& s) {
    validate(cam);
    if (s.spp < 1) fail(ErrorCode::invalid_argument, "spp must be at least 1");
    if (s.bounces < 0) fail(ErrorCode::invalid_argument, "bounce count must be non-negative");
    validate(rig.env);
    PixelRect rect{0, 0, cam.width, cam.height};
    if (s.crop) {
        rect = *s.crop;
        if (rect.x0 < 0 || rect.y0 < 0 || rect.x1 > cam.width || rect.y1 > cam.height || rect.x0 > rect.x1 ||
            rect.y0 > rect.y1)
            fail(ErrorCode::invalid_argument, "crop window lies outside the image");
    }

    LinearImage img(cam.width, cam.height);
    img.meta = {s.spp, s.seed, s.bounces};
    const EnvSampler env_sampler(rig.env);
    const CameraFrame frame = camera_frame(cam);
    const int strata = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(s.spp))));
    const int tiles_x = (rect.x1 - rect.x0 + kTileSize - 1) / kTileSize;
    const int tiles_y = (rect.y1 - rect.y0 + kTileSize - 1) / kTileSize;

    parallel_for(static_cast<std::size_t>(tiles_x) * tiles_y, s.workers, [&](std::size_t tile) {
        const int tx = static_cast<int>(tile % tiles_x), ty = static_cast<int>(tile / tiles_x);
        const int x0 = rect.x0 + tx * kTileSize, y0 = rect.y0 + ty * kTileSize;
        for (int y = y0; y < std::min(y0 + kTileSize, rect.y1); ++y)
            for (int x = x0; x < std::min(x0 + kTileSize, rect.x1); ++x) {
                const std::uint64_t pixel = static_cast<std::uint64_t>(y) * cam.width + x;
                Vec3 sum{};
                for (int k = 0; k < s.spp; ++k) {
                    CounterRng rng(s.seed, pixel, static_cast<std::uint64_t>(k));
                    const int cell = k % (strata * strata);
                    const double jx = (cell % strata + rng.uniform()) / strata;
                    const double jy = (cell / strata + rng.uniform()) / strata;
                    const Ray ray{cam.position, camera_ray(cam, frame, x + jx, y + jy)};
                    const Vec3 l = detail::trace_path(scene, rig, env_sampler, ray, s.bounces, rng);
                    if (is_finite(l)) sum += l;
                }
                img.at(x, y) = sum / static_cast<double>(s.spp);
            }
    });
    return img;
}

inline LinearImage render(const SceneGeometry& geo, const LightingRig& rig, const Camera& cam,
                          const RenderSettings& s) {
    const PreparedScene scene(geo);
    return render(scene, rig, cam, s);
}

/// Exposure that makes an ideal horizontal 18% Lambertian patch at the origin
/// read 0.18: such a patch has radiance 0.18 * E_e / pi, so the scale is
/// pi / E_e with E_e = E_v / 683 the irradiance in radiance units.
inline double gray_card_scale(const LightingRig& rig) {
    const double ev = rig_illuminance(rig);
    if (!(ev > 0.0) || !std::isfinite(ev)) fail(ErrorCode::invalid_argument, "zero illuminance at the grass pixel");
    return kPi / (ev / kLumensPerWatt);
}

inline LinearImage expose_gray_card(LinearImage img, const LightingRig& rig) {
    const double k = gray_card_scale(rig);
    for (auto& p : img.pixels) p *= k;
    img.exposure_scale *= k;
    return img;
}

/// Named render quality levels. `measure` trades resolution for samples: the
/// region mean averages over fewer, less noisy pixels.
struct QualityPreset {
    std::string_view name;
    int spp;
    int bounces;
    int width;
    int height;
};

inline constexpr QualityPreset kQualityPresets[] = {
    {"preview", 4, 1, 600, 400},
    {"default", 16, 2, 600, 400},
    {"final", 256, 2, 600, 400},
    {"measure", 256, 2, 150, 100},
};

inline const QualityPreset& quality_preset(std::string_view name) {
    for (const auto& q : kQualityPresets)
        if (q.name == name) return q;
    fail(ErrorCode::invalid_argument, "unknown quality preset '" + std::string(name) + "'");
}

}  // namespace grassim
