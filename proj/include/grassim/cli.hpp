#pragma once

// Command-line front end: render, sweep, compare, calibrate, fit-ccm, serve.
// Kept in a header so tests can drive it in-process.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "grassim/curve_io.hpp"
#include "grassim/image_io.hpp"
#include "grassim/pipeline.hpp"
#include "grassim/service.hpp"
#include "grassim/workspace.hpp"

namespace grassim {

namespace cli {

inline std::vector<double> parse_list(std::string_view s, std::string_view what) {
    std::vector<double> out;
    for (auto part : text::split(s)) out.push_back(text::parse_double(part, what));
    if (out.empty()) fail(ErrorCode::invalid_argument, std::string(what) + ": empty list");
    return out;
}

/// `h=150,160 theta=0,30 d=2` tokens; missing keys take the fallback.
/// Order: d outermost, then h, then theta.
inline std::vector<Viewpoint> parse_grid(const std::vector<std::string>& tokens, const Viewpoint& fallback) {
    std::vector<double> hs{fallback.h_cm}, ds{fallback.d_m}, ts{fallback.theta_deg};
    for (const auto& tok : tokens) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) fail(ErrorCode::invalid_argument, "grid token '" + tok + "' must look like key=v1,v2");
        const std::string key = tok.substr(0, eq);
        const auto values = parse_list(std::string_view(tok).substr(eq + 1), key);
        if (key == "h") hs = values;
        else if (key == "d") ds = values;
        else if (key == "theta") ts = values;
        else fail(ErrorCode::invalid_argument, "unknown grid key '" + key + "' (expected h, d or theta)");
    }
    std::vector<Viewpoint> out;
    for (double d : ds)
        for (const auto& v : viewpoint_grid(hs, ts, d)) out.push_back(v);
    return out;
}

inline std::string viewpoint_tag(const Viewpoint& v) {
    return "h" + text::format_double(v.h_cm) + "_d" + text::format_double(v.d_m) + "_t" + text::format_double(v.theta_deg);
}

inline json viewpoint_json(const Viewpoint& v) { return {{"h_cm", v.h_cm}, {"d_m", v.d_m}, {"theta_deg", v.theta_deg}}; }

inline SceneConfig load_config(const std::string& path) {
    if (path.empty()) fail(ErrorCode::invalid_argument, "--config is required");
    return load_scene_config(path);
}

inline std::optional<ColorCorrectionMatrix> load_matrix(const std::string& path) {
    if (path.empty()) return std::nullopt;
    try {
        return ccm_from_json(json::parse(text::read_file(path)));
    } catch (const json::exception& e) {
        fail(ErrorCode::format, path + ": " + e.what());
    }
}

struct ViewpointArgs {
    std::optional<double> h, d, theta;

    void add(CLI::App* app) {
        app->add_option("--h-cm", h, "eye height [cm]");
        app->add_option("--d-m", d, "horizontal distance [m]");
        app->add_option("--theta-deg", theta, "azimuth around the pixel [deg]");
    }

    bool any() const { return h || d || theta; }

    Viewpoint resolve(const SceneConfig& scene) const {
        const Viewpoint f = scene.viewpoints.front();
        return {h.value_or(f.h_cm), d.value_or(f.d_m), theta.value_or(f.theta_deg)};
    }
};

inline void write_json(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

}  // namespace cli

/// Runs the CLI on `args` (without the program name). Returns the exit code.
inline int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"grassim: grass display color characteristic simulator"};
    app.require_subcommand(1);
    int workers = 0;
    app.add_option("--workers", workers, "render threads (0 = all cores)");

    // render
    std::string config, out_path, quality = "default", matrix_path;
    std::uint64_t seed = 1;
    double length = 0;
    cli::ViewpointArgs vp;
    auto* render_cmd = app.add_subcommand("render", "render one grass-pixel image and report its region mean");
    render_cmd->add_option("--config", config, "scene JSON")->required();
    vp.add(render_cmd);
    render_cmd->add_option("--length", length, "adjustable blade length [mm]")->required();
    render_cmd->add_option("--quality", quality, "preview | default | final | measure");
    render_cmd->add_option("--seed", seed, "sampler seed");
    render_cmd->add_option("--out", out_path, "output prefix; writes <prefix>.hdr and <prefix>.png")->required();

    // sweep
    std::vector<std::string> grid;
    std::string lengths_arg, workspace_dir;
    auto* sweep_cmd = app.add_subcommand("sweep", "measure characteristic curves over lengths for one or more viewpoints");
    sweep_cmd->add_option("--config", config, "scene JSON")->required();
    vp.add(sweep_cmd);
    sweep_cmd->add_option("--grid", grid, "viewpoint grid, e.g. h=150,160,170,180 theta=0,30,60,90 [d=2]");
    sweep_cmd->add_option("--lengths", lengths_arg, "comma-separated lengths [mm]; default: the adjustable range at 1 mm");
    sweep_cmd->add_option("--quality", quality, "preview | default | final | measure");
    sweep_cmd->add_option("--seed", seed, "sampler seed");
    sweep_cmd->add_option("--matrix", matrix_path, "color correction matrix JSON applied to virtual colors");
    sweep_cmd->add_option("--out", out_path, "output directory")->required();
    sweep_cmd->add_option("--workspace", workspace_dir, "also store curves in this workspace");

    // compare
    std::string virtual_path, real_path;
    auto* compare_cmd = app.add_subcommand("compare", "compare a virtual and a real characteristic curve");
    compare_cmd->add_option("--virtual", virtual_path, "virtual curve CSV (curve or per-length RGB)")->required();
    compare_cmd->add_option("--real", real_path, "real curve CSV (curve or per-length RGB)")->required();
    compare_cmd->add_option("--matrix", matrix_path, "color correction matrix for a virtual RGB CSV");
    compare_cmd->add_option("--out", out_path, "write the report JSON here as well");

    // calibrate
    std::string curve_path;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "8-bit calibration table from a characteristic curve");
    calibrate_cmd->add_option("--curve", curve_path, "curve CSV")->required();
    calibrate_cmd->add_option("--out", out_path, "table CSV (256 rows)")->required();

    // fit-ccm
    std::string virtual_patches, save_virtual;
    auto* ccm_cmd = app.add_subcommand("fit-ccm", "fit the 3x3 correction matrix from color checker patches");
    ccm_cmd->add_option("--real", real_path, "measured patch CSV (24 rows of ProPhoto linear R,G,B)")->required();
    ccm_cmd->add_option("--virtual", virtual_patches, "rendered patch CSV; default: render the scene's checker");
    ccm_cmd->add_option("--config", config, "scene JSON (needed when rendering the checker)");
    vp.add(ccm_cmd);
    ccm_cmd->add_option("--quality", quality, "preview | default | final | measure");
    ccm_cmd->add_option("--seed", seed, "sampler seed");
    ccm_cmd->add_option("--save-virtual", save_virtual, "write the rendered patch CSV here");
    ccm_cmd->add_option("--out", out_path, "matrix JSON")->required();

    // serve
    std::string host = "127.0.0.1", static_dir;
    int port = 8080, runners = 1;
    std::vector<std::string> scene_files;
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    serve_cmd->add_option("--workspace", workspace_dir, std::string("workspace root; default $") + kWorkspaceEnv +
                                                            " or ./grassim-workspace");
    serve_cmd->add_option("--host", host, "bind address");
    serve_cmd->add_option("--port", port, "port (0 picks a free one)");
    serve_cmd->add_option("--static", static_dir, "directory of UI assets served at /");
    serve_cmd->add_option("--scene", scene_files, "scene JSON files to add to the workspace");
    serve_cmd->add_option("--runners", runners, "concurrent sweep jobs");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*render_cmd) {
            const SceneConfig scene = cli::load_config(config);
            const LightingRig rig = build_rig(scene);
            RenderJob job{vp.resolve(scene), length, quality, seed, workers};
            const RenderOutput r = render_grass(scene, rig, job);
            save_linear_hdr(out_path + ".hdr", r.image);
            text::write_file(out_path + ".png", encode_preview_png(r.image));
            const Vec3& m = r.region_prophoto.values;
            cli::write_json(out, {{"viewpoint", cli::viewpoint_json(job.viewpoint)},
                                  {"length_mm", length},
                                  {"quality", quality},
                                  {"seed", seed},
                                  {"region_mean_prophoto", {m.x, m.y, m.z}},
                                  {"hdr", out_path + ".hdr"},
                                  {"png", out_path + ".png"}});
            return 0;
        }

        if (*sweep_cmd) {
            const SceneConfig scene = cli::load_config(config);
            std::vector<Viewpoint> vps;
            if (!grid.empty()) vps = cli::parse_grid(grid, vp.resolve(scene));
            else if (vp.any()) vps = {vp.resolve(scene)};
            else vps = scene.viewpoints;
            SweepJob job;
            job.quality = quality;
            job.seed = seed;
            job.ccm = cli::load_matrix(matrix_path);
            if (!lengths_arg.empty()) job.lengths = cli::parse_list(lengths_arg, "--lengths");
            job.workers = workers;
            quality_preset(quality);

            std::filesystem::create_directories(out_path);
            std::optional<Workspace> ws;
            if (!workspace_dir.empty()) ws.emplace(workspace_dir);
            const LightingRig rig = build_rig(scene);
            json curves = json::array(), failures = json::array();
            for (std::size_t i = 0; i < vps.size(); ++i) {
                job.viewpoint = vps[i];
                const std::string tag = cli::viewpoint_tag(vps[i]);
                err << "[" << i + 1 << "/" << vps.size() << "] " << tag << " ..." << std::flush;
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    const SweepRequest req = make_sweep_request(scene, job);
                    const SweepResult r = sweep(req, rig);
                    const std::string id = sha256_hex(sweep_fingerprint(scene, req).dump());
                    const std::string file = "curve_" + tag + ".csv";
                    text::write_file((std::filesystem::path(out_path) / file).string(), curve_to_csv(r.curve));
                    text::write_file((std::filesystem::path(out_path) / ("rgb_" + tag + ".csv")).string(),
                                     rgb_to_csv(r.curve.lengths(), r.prophoto));
                    if (ws) store_sweep_result(*ws, scene, req, r);
                    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    curves.push_back({{"viewpoint", cli::viewpoint_json(vps[i])},
                                      {"file", file},
                                      {"id", id},
                                      {"range", r.curve.range()},
                                      {"seconds", secs}});
                    err << " done in " << secs << " s\n";
                } catch (const Error& e) {
                    failures.push_back({{"viewpoint", cli::viewpoint_json(vps[i])},
                                        {"code", std::string(to_string(e.code()))},
                                        {"message", e.what()}});
                    err << " failed: " << e.what() << "\n";
                }
            }
            const json manifest = {{"scene", scene.name},
                                   {"environment", environment_id(scene)},
                                   {"quality", quality},
                                   {"seed", seed},
                                   {"curves", curves},
                                   {"failures", failures}};
            text::write_file((std::filesystem::path(out_path) / "manifest.json").string(), manifest.dump(2) + "\n");
            cli::write_json(out, manifest);
            if (!failures.empty()) {
                err << "error: " << failures.size() << " of " << vps.size() << " viewpoints failed; see manifest.json\n";
                return 1;
            }
            return 0;
        }

        if (*compare_cmd) {
            const auto ccm = cli::load_matrix(matrix_path);
            const CharacteristicCurve v = load_curve_text(text::read_file(virtual_path), CurveSource::Virtual, ccm);
            const CharacteristicCurve r = load_curve_text(text::read_file(real_path), CurveSource::Real);
            const json report = comparison_to_json(compare_curves(v, r));
            if (!out_path.empty()) text::write_file(out_path, report.dump(2) + "\n");
            cli::write_json(out, report);
            return 0;
        }

        if (*calibrate_cmd) {
            const CharacteristicCurve c = load_curve_text(text::read_file(curve_path), CurveSource::Virtual);
            const CalibrationTable t = calibrate_8bit(c);
            text::write_file(out_path, calibration_to_csv(t));
            cli::write_json(out, {{"r2_before", t.r2_before}, {"r2_after", t.r2_after}, {"table", out_path}});
            return 0;
        }

        if (*ccm_cmd) {
            const PatchSet real = patch_set_from_csv(text::read_file(real_path), PatchSource::Real);
            PatchSet virt;
            if (!virtual_patches.empty()) {
                virt = patch_set_from_csv(text::read_file(virtual_patches), PatchSource::Virtual);
            } else {
                const SceneConfig scene = cli::load_config(config);
                virt = render_checker_patches(scene, build_rig(scene), vp.resolve(scene), quality, seed);
            }
            if (!save_virtual.empty()) text::write_file(save_virtual, patch_set_to_csv(virt));
            const ColorCorrectionMatrix m = fit_ccm(real, virt);
            text::write_file(out_path, ccm_to_json(m).dump(2) + "\n");
            cli::write_json(out, ccm_to_json(m));
            return 0;
        }

        if (*serve_cmd) {
            Workspace ws(workspace_dir.empty() ? Workspace::default_root() : std::filesystem::path(workspace_dir));
            for (const auto& f : scene_files) ws.save_scene(load_scene_config(f));
            Service service(ws, {static_dir, runners, workers, {}});
            const int bound = service.bind(host, port);
            err << "serving workspace " << ws.root().string() << " on http://" << host << ":" << bound << "\n";
            service.run();
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace grassim
