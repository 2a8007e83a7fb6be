#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <thread>

#include "grassim/image_io.hpp"
#include "grassim/jobs.hpp"
#include "grassim/pipeline.hpp"
#include "grassim/workspace.hpp"

using namespace grassim;
using namespace std::chrono_literals;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("grassim_io_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

CharacteristicCurve small_curve(CurveSource src = CurveSource::Virtual) {
    CharacteristicCurve c;
    c.source = src;
    c.samples = {{0, 0}, {1, 2.5}, {2, 4.0}, {3, 4.5}};
    c.meta.viewpoint = {160, 2, 45};
    c.meta.environment = "builtin:indoor@2000lx";
    return c;
}

}  // namespace

TEST(Png, PreviewRoundTrip) {
    LinearImage img(3, 2);
    img.at(0, 0) = {0, 0, 0};
    img.at(1, 0) = {1, 1, 1};
    img.at(2, 0) = {0.18, 0.5, 2.0};  // 2.0 clips
    img.at(0, 1) = {-1, 0.0031308, 1e-4};
    const DecodedPng d = decode_png(encode_preview_png(img));
    ASSERT_EQ(d.width, 3);
    ASSERT_EQ(d.height, 2);
    EXPECT_EQ(d.bit_depth, 8);
    ASSERT_EQ(d.samples.size(), 18u);
    EXPECT_EQ(d.samples[0], 0);
    EXPECT_EQ(d.samples[3], 255);
    // 0.18 linear encodes to 118/255 in sRGB; 0.5 to 188.
    EXPECT_EQ(d.samples[6], 118);
    EXPECT_EQ(d.samples[7], 188);
    EXPECT_EQ(d.samples[8], 255);
    EXPECT_EQ(d.samples[9], 0);
}

TEST(Png, Linear16RoundTrip) {
    LinearImage img(2, 1);
    img.at(0, 0) = {0.25, 0.5, 1.0};
    img.at(1, 0) = {0.0, 1.0 / 65535.0, 3.0};
    const DecodedPng d = decode_png(encode_linear_png16(img));
    EXPECT_EQ(d.bit_depth, 16);
    const std::vector<std::uint16_t> want = {16384, 32768, 65535, 0, 1, 65535};
    EXPECT_EQ(d.samples, want);
}

TEST(Png, RejectsGarbage) {
    EXPECT_THROW(decode_png("not a png"), Error);
    const std::string good = encode_preview_png(LinearImage(4, 4));
    try {
        decode_png(good.substr(0, good.size() / 2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::format);
    }
}

TEST(Hdr, LinearDumpRoundTrip) {
    const auto dir = temp_dir("hdr");
    std::filesystem::create_directories(dir);
    LinearImage img(4, 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = {0.1 * i, 0.5, 2.0};
    save_linear_hdr((dir / "a.hdr").string(), img);
    const std::string bytes = text::read_file((dir / "a.hdr").string());
    const RgbeImage r = decode_rgbe({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
    ASSERT_EQ(r.width, 4);
    ASSERT_EQ(r.height, 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        // RGBE keeps 8 mantissa bits relative to the largest channel.
        EXPECT_NEAR(r.pixels[i].z, 2.0, 2.0 / 128);
        EXPECT_NEAR(r.pixels[i].x, img.pixels[i].x, 2.0 / 128);
    }
}

TEST(Workspace, CurveReloadsAfterRestart) {
    const auto root = temp_dir("ws_reload");
    std::string id;
    {
        Workspace ws(root);
        id = ws.put_curve(small_curve(), {{"spp", 16}});
    }
    Workspace ws(root);
    ASSERT_TRUE(ws.has_curve(id));
    const StoredCurve s = ws.curve(id);
    EXPECT_EQ(s.curve.samples, small_curve().samples);
    EXPECT_EQ(s.curve.source, CurveSource::Virtual);
    EXPECT_EQ(s.curve.meta.viewpoint.theta_deg, 45);
    EXPECT_EQ(s.curve.meta.environment, "builtin:indoor@2000lx");
    EXPECT_EQ(s.meta["spp"], 16);
    EXPECT_EQ(ws.curve_ids(), std::vector<std::string>{id});
}

TEST(Workspace, ArtifactsAreImmutable) {
    Workspace ws(temp_dir("ws_immutable"));
    const std::string id = ws.put_curve("fixed-id", small_curve());
    EXPECT_NO_THROW(ws.put_curve("fixed-id", small_curve()));  // same content
    CharacteristicCurve other = small_curve();
    other.samples[1].ogcd = 2.6;
    try {
        ws.put_curve(id, other);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::conflict);
    }
    EXPECT_EQ(ws.curve(id).curve.samples, small_curve().samples);
}

TEST(Workspace, RealAndVirtualGetDifferentIds) {
    Workspace ws(temp_dir("ws_ids"));
    EXPECT_NE(ws.put_curve(small_curve(CurveSource::Real)), ws.put_curve(small_curve(CurveSource::Virtual)));
}

TEST(Workspace, RejectsBadIdsAndMissing) {
    Workspace ws(temp_dir("ws_bad"));
    auto code = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::cancelled;
    };
    EXPECT_EQ(code([&] { ws.curve("../etc/passwd"); }), ErrorCode::invalid_argument);
    EXPECT_EQ(code([&] { ws.curve("abc"); }), ErrorCode::not_found);
    EXPECT_EQ(code([&] { ws.matrix("abc"); }), ErrorCode::not_found);
    EXPECT_EQ(code([&] { ws.scene("nope"); }), ErrorCode::not_found);
    EXPECT_EQ(code([&] { ws.scene("../x"); }), ErrorCode::invalid_argument);
}

TEST(Workspace, ScenesMatricesCalibrations) {
    const auto root = temp_dir("ws_misc");
    Workspace ws(root);
    SceneConfig c;
    c.name = "lawn";
    ws.save_scene(c);
    EXPECT_NO_THROW(ws.save_scene(c));
    SceneConfig changed = c;
    changed.grass.fixed_density = 50;
    EXPECT_THROW(ws.save_scene(changed), Error);
    EXPECT_EQ(ws.scene_names(), std::vector<std::string>{"lawn"});
    EXPECT_EQ(canonical_json(ws.scene("lawn")), canonical_json(c));

    ColorCorrectionMatrix m;
    m.m = Mat3{{1.1, 0, 0, 0, 1, 0, 0, 0.2, 0.9}};
    m.residual_rms = 0.5;
    const std::string mid = ws.put_matrix(m);
    EXPECT_EQ(ws.put_matrix(m), mid);
    EXPECT_EQ(ws.matrix(mid).m, m.m);

    const CalibrationTable t = calibrate_8bit(fit_monotone(small_curve()));
    const std::string cid = ws.put_calibration(t, "curve-a");
    const CalibrationTable back = Workspace(root).calibration(cid);
    EXPECT_EQ(back.length_mm, t.length_mm);
    EXPECT_EQ(back.r2_after, t.r2_after);
}

TEST(Workspace, DefaultRootFromEnvironment) {
    ::setenv(kWorkspaceEnv, "/tmp/somewhere", 1);
    EXPECT_EQ(Workspace::default_root(), std::filesystem::path("/tmp/somewhere"));
    ::unsetenv(kWorkspaceEnv);
    EXPECT_EQ(Workspace::default_root("fb"), std::filesystem::path("fb"));
}

TEST(Sha256, KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Jobs, RunsAndReportsProgress) {
    JobManager jm(1);
    const std::string id = jm.submit("test", [](JobContext& ctx) {
        for (std::size_t i = 1; i <= 4; ++i) ctx.progress(i, 4);
        return std::string("result-1");
    });
    const JobStatus s = jm.wait(id);
    EXPECT_EQ(s.state, JobState::done);
    EXPECT_EQ(s.result, "result-1");
    EXPECT_DOUBLE_EQ(s.progress(), 1.0);
    try {
        jm.cancel(id);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::conflict);
    }
    EXPECT_THROW(jm.status("job-999"), Error);
}

TEST(Jobs, FailureKeepsMessage) {
    JobManager jm(1);
    const std::string id = jm.submit("test", [](JobContext&) -> std::string { fail(ErrorCode::io, "disk full"); });
    const JobStatus s = jm.wait(id);
    EXPECT_EQ(s.state, JobState::failed);
    EXPECT_EQ(s.error, "disk full");
}

TEST(Jobs, CancelRunningKeepsPartialResult) {
    JobManager jm(1);
    std::atomic<bool> started{false};
    const std::string id = jm.submit("test", [&](JobContext& ctx) {
        started = true;
        while (!ctx.cancelled()) std::this_thread::sleep_for(1ms);
        return std::string("partial");
    });
    // Queued behind the first job, so it is cancelled without running.
    std::atomic<bool> ran{false};
    const std::string queued = jm.submit("test", [&](JobContext&) {
        ran = true;
        return std::string();
    });
    while (!started) std::this_thread::sleep_for(1ms);
    EXPECT_EQ(jm.cancel(queued).state, JobState::cancelled);
    jm.cancel(id);
    const JobStatus s = jm.wait(id);
    EXPECT_EQ(s.state, JobState::cancelled);
    EXPECT_EQ(s.result, "partial");
    EXPECT_EQ(jm.wait(queued).state, JobState::cancelled);
    EXPECT_FALSE(ran);
}

TEST(Pipeline, RenderGrassSmoke) {
    SceneConfig scene;
    scene.lighting.env_height = 16;
    const LightingRig rig = build_rig(scene);
    RenderJob job;
    job.quality = "preview";
    job.length_mm = 8;
    const RenderOutput out = render_grass(scene, rig, job);
    EXPECT_EQ(out.image.width, 600);
    EXPECT_EQ(out.image.height, 400);
    EXPECT_EQ(out.region_prophoto.space, ColorSpace::ProPhotoLinearRGB);
    EXPECT_GT(out.region_prophoto.values.y, 0.0);
    EXPECT_TRUE(std::isfinite(out.region_prophoto.values.x));
}

TEST(Pipeline, CheckerPatchesSmoke) {
    SceneConfig scene;
    scene.lighting.env_height = 16;
    const LightingRig rig = build_rig(scene);
    const PatchSet patches = render_checker_patches(scene, rig, {170, 2, 0}, "preview");
    // White patch (index 18) is brighter than black (index 23).
    EXPECT_GT(patches.patches[18].values.y, 3 * patches.patches[23].values.y);
}

TEST(Pipeline, SweepRequestCarriesEnvironment) {
    SceneConfig scene;
    SweepJob job;
    job.quality = "preview";
    job.lengths = {4, 5};
    const SweepRequest r = make_sweep_request(scene, job);
    EXPECT_EQ(r.environment, "builtin:indoor@2000lx");
    EXPECT_EQ(r.lengths, (std::vector<double>{4, 5}));
    EXPECT_EQ(r.render.spp, 4);
}
