// End-to-end workflow on the bundled demo data: fit the correction matrix
// from the color checker, sweep one viewpoint, compare against a measured
// curve and derive the 8-bit calibration table.
//
//   demo_workflow [output-dir] [quality]

#include <cstdio>
#include <filesystem>

#include "grassim/curve_io.hpp"
#include "grassim/image_io.hpp"
#include "grassim/pipeline.hpp"

using namespace grassim;

int main(int argc, char** argv) {
    const std::filesystem::path out = argc > 1 ? argv[1] : "demo-out";
    const std::string quality = argc > 2 ? argv[2] : "preview";
    const std::string data = GRASSIM_DATA_DIR;
    try {
        std::filesystem::create_directories(out);
        const SceneConfig scene = load_scene_config(data + "/demo_scene.json");
        const LightingRig rig = build_rig(scene);
        const Viewpoint vp = scene.viewpoints.front();

        const PatchSet real = patch_set_from_csv(text::read_file(data + "/demo_real_patches.csv"), PatchSource::Real);
        const PatchSet virt = render_checker_patches(scene, rig, vp, quality);
        const ColorCorrectionMatrix m = fit_ccm(real, virt);
        std::printf("correction matrix (residual rms %.4g):\n", m.residual_rms);
        for (std::size_t r = 0; r < 3; ++r) std::printf("  %8.4f %8.4f %8.4f\n", m.m(r, 0), m.m(r, 1), m.m(r, 2));

        SweepJob job;
        job.viewpoint = vp;
        job.quality = quality;
        job.ccm = m;
        job.lengths = length_grid(0, 20, 2);
        const SweepResult sw = run_sweep(scene, rig, job, {nullptr, [](std::size_t done, std::size_t total) {
                                                               std::fprintf(stderr, "\rsweep %zu/%zu", done, total);
                                                           }});
        std::fprintf(stderr, "\n");
        text::write_file((out / "virtual_curve.csv").string(), curve_to_csv(sw.curve));

        RenderJob preview{vp, 10.0, quality, 1, 0};
        text::write_file((out / "preview_10mm.png").string(), encode_preview_png(render_grass(scene, rig, preview).image));

        const CharacteristicCurve measured =
            curve_from_csv(text::read_file(data + "/demo_real_curve.csv"), CurveSource::Real);
        const CurveComparison cmp = compare_curves(sw.curve, measured);
        std::printf("virtual ogcd range %.3f, measured %.3f\n", sw.curve.range(), measured.range());
        std::printf("frechet %.3f, max error %.3f at %.1f mm\n", cmp.frechet, cmp.max_error, cmp.max_error_length_mm);

        const CalibrationTable t = calibrate_8bit(sw.curve);
        text::write_file((out / "calibration.csv").string(), calibration_to_csv(t));
        std::printf("linearity r2 %.3f -> %.3f\n", t.r2_before, t.r2_after);
        std::printf("outputs in %s\n", out.string().c_str());
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
