#pragma once

// Scene-config level operations shared by the CLI and the HTTP service, so
// both produce identical artifacts for identical inputs.

#include <optional>
#include <string>

#include "grassim/camera.hpp"
#include "grassim/ccm.hpp"
#include "grassim/characteristic.hpp"
#include "grassim/config.hpp"
#include "grassim/renderer.hpp"

namespace grassim {

struct RenderJob {
    Viewpoint viewpoint;
    double length_mm = 10.0;
    std::string quality = "default";
    std::uint64_t seed = 1;
    int workers = 0;
};

struct RenderOutput {
    LinearImage image;  // gray-card exposed
    Quad region;
    Color region_prophoto;  // region mean, ProPhoto linear
};

inline Camera camera_for(const SceneConfig& scene, const Viewpoint& vp, const QualityPreset& q) {
    return viewpoint_to_camera(vp, {grass_pixel_bounds(scene.params()), 0.8, q.width, q.height});
}

/// Full-frame render of the grass pixel at one length, exposed by the gray
/// card, with the region mean.
inline RenderOutput render_grass(const SceneConfig& scene, const LightingRig& rig, const RenderJob& job) {
    const QualityPreset& q = quality_preset(job.quality);
    const GrassPixelParams p = scene.params();
    const Camera cam = camera_for(scene, job.viewpoint, q);
    const SceneGeometry geo = build_grass_pixel(p, job.length_mm);
    RenderSettings s;
    s.spp = q.spp;
    s.bounces = q.bounces;
    s.seed = job.seed;
    s.workers = job.workers;
    RenderOutput out;
    out.image = expose_gray_card(render(geo, rig, cam, s), rig);
    out.region = project_pixel_corners(geo, cam);
    out.region_prophoto = convert(average_region(out.image, out.region), ColorSpace::ProPhotoLinearRGB);
    return out;
}

struct SweepJob {
    Viewpoint viewpoint;
    std::string quality = "default";
    std::uint64_t seed = 1;
    std::optional<ColorCorrectionMatrix> ccm;
    std::vector<double> lengths;  // empty: the adjustable range at 1 mm steps
    int workers = 0;
};

inline SweepRequest make_sweep_request(const SceneConfig& scene, const SweepJob& job) {
    const GrassPixelParams p = scene.params();
    SweepRequest r = sweep_request(p, job.viewpoint, quality_preset(job.quality), job.seed);
    if (!job.lengths.empty()) r.lengths = job.lengths;
    r.ccm = job.ccm;
    r.render.workers = job.workers;
    r.environment = environment_id(scene);
    return r;
}

inline SweepResult run_sweep(const SceneConfig& scene, const LightingRig& rig, const SweepJob& job,
                             const SweepControl& control = {}) {
    return sweep(make_sweep_request(scene, job), rig, control);
}

/// Renders the scene's color checker from the viewpoint and averages each
/// patch (virtual side of the correction-matrix fit).
inline PatchSet render_checker_patches(const SceneConfig& scene, const LightingRig& rig, const Viewpoint& vp,
                                       const std::string& quality = "default", std::uint64_t seed = 1) {
    const QualityPreset& q = quality_preset(quality);
    const CheckerLayout layout = scene.checker_layout();
    const auto albedos = scene.checker_albedos();
    const SceneGeometry geo = build_color_checker(albedos, layout);
    Bounds subject;
    const Vec2 ext = checker_extent(layout) * kMillimeter;
    subject.extend({-ext.x / 2, 0, -ext.y / 2});
    subject.extend({ext.x / 2, kCheckerPatchLift, ext.y / 2});
    const Camera cam = viewpoint_to_camera(vp, {subject, 0.8, q.width, q.height});
    RenderSettings s;
    s.spp = q.spp;
    s.bounces = q.bounces;
    s.seed = seed;
    const LinearImage img = expose_gray_card(render(geo, rig, cam, s), rig);
    const auto quads = project_checker_patches(cam, layout);
    return patch_means(img, quads);
}

}  // namespace grassim
