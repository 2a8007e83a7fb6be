#include <gtest/gtest.h>

#include <filesystem>

#include "grassim/config.hpp"

using namespace grassim;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("grassim_config_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(SceneConfig, EmptyObjectGivesDefaults) {
    const SceneConfig c = parse_scene_config("{}");
    const GrassPixelParams d;
    const GrassPixelParams p = c.params();
    EXPECT_EQ(p.surface_size, d.surface_size);
    EXPECT_EQ(p.fixed_density, d.fixed_density);
    EXPECT_EQ(p.fixed_albedo, d.fixed_albedo);
    EXPECT_EQ(p.slit_albedo, d.slit_albedo);
    EXPECT_EQ(c.lighting.hdri_path, "builtin:indoor");
    ASSERT_EQ(c.viewpoints.size(), 1u);
    EXPECT_EQ(c.viewpoints[0].h_cm, 170);
}

TEST(SceneConfig, JsonRoundTrip) {
    SceneConfig c;
    c.name = "roof";
    c.grass.fixed_density = 77.5;
    c.grass.adjustable_max = 18;
    c.albedos.adjustable = {10, 200, 30};
    c.checker.albedos[3] = {1, 2, 3};
    c.lighting.hdri_path = "maps/roof.hdr";
    c.lighting.sun = SunConfig{120, 35, 50000};
    c.viewpoints = {{150, 2, 30}, {180, 2, 90}};
    const SceneConfig back = parse_scene_config(canonical_json(c));
    EXPECT_EQ(canonical_json(back), canonical_json(c));
    EXPECT_EQ(back.lighting, c.lighting);
    EXPECT_EQ(back.checker, c.checker);
    EXPECT_EQ(back.albedos, c.albedos);
    EXPECT_EQ(back.grass.adjustable_max, 18);
}

TEST(SceneConfig, MillimetersAndSrgbAtBoundary) {
    const SceneConfig c = parse_scene_config(R"({"grass": {"slit_width_mm": 5.0, "albedo": {"fixed": [255, 0, 128]}}})");
    EXPECT_EQ(c.grass.slit_width, 5.0);
    const Color f = c.params().fixed_albedo;
    EXPECT_DOUBLE_EQ(f.values.x, 1.0);
    EXPECT_DOUBLE_EQ(f.values.y, 0.0);
    EXPECT_DOUBLE_EQ(f.values.z, srgb_decode(128 / 255.0));
}

TEST(SceneConfig, RejectsBadInput) {
    auto code = [](const std::string& text) {
        try {
            parse_scene_config(text);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::conflict;  // no error
    };
    EXPECT_EQ(code("{"), ErrorCode::format);
    EXPECT_EQ(code(R"({"grasss": {}})"), ErrorCode::format);
    EXPECT_EQ(code(R"({"grass": {"slit_count": "three"}})"), ErrorCode::format);
    EXPECT_EQ(code(R"({"grass": {"albedo": {"fixed": [300, 0, 0]}}})"), ErrorCode::format);
    EXPECT_EQ(code(R"({"grass": {"adjustable_range_mm": [0]}})"), ErrorCode::format);
    EXPECT_EQ(code(R"({"checker": {"albedo": [[1, 2, 3]]}})"), ErrorCode::format);
    EXPECT_EQ(code(R"({"viewpoints": []})"), ErrorCode::format);
    EXPECT_EQ(code(R"({"lighting": {"ambient_lux": 0}})"), ErrorCode::invalid_argument);
    EXPECT_EQ(code(R"({"lighting": {"ambient_lux": 5000, "sun": {"total_lux": 1000}}})"), ErrorCode::invalid_argument);
    EXPECT_EQ(code(R"({"grass": {"slit_width_mm": -1}})"), ErrorCode::invalid_argument);
    EXPECT_EQ(code(R"({"viewpoints": [{"h_cm": 170, "d_m": 0}]})"), ErrorCode::invalid_argument);
}

TEST(SceneConfig, BuiltinRigIsNormalized) {
    for (const char* name : {"builtin:uniform", "builtin:gradient", "builtin:indoor"}) {
        SceneConfig c;
        c.lighting.hdri_path = name;
        c.lighting.env_height = 32;
        c.lighting.ambient_lux = 1500;
        const LightingRig rig = build_rig(c);
        EXPECT_NEAR(rig_illuminance(rig), 1500, 1500 * 1e-3) << name;
        EXPECT_FALSE(rig.sun);
    }
    SceneConfig bad;
    bad.lighting.hdri_path = "builtin:nope";
    EXPECT_THROW(build_rig(bad), Error);
}

TEST(SceneConfig, SunSplitsTotalMinusAmbient) {
    SceneConfig c;
    c.lighting.env_height = 16;
    c.lighting.ambient_lux = 20000;
    c.lighting.sun = SunConfig{90, 30, 50000};
    const LightingRig rig = build_rig(c);
    ASSERT_TRUE(rig.sun);
    EXPECT_DOUBLE_EQ(rig.sun->illuminance, 30000);
    EXPECT_NEAR(rig.sun->direction.y, 0.5, 1e-15);
    EXPECT_NEAR(rig.sun->direction.x, std::cos(kPi / 6), 1e-15);
}

TEST(SceneConfig, RelativeHdriResolvesAgainstConfigDir) {
    const auto dir = temp_dir("hdri");
    std::filesystem::create_directories(dir / "maps");
    RgbeImage img;
    img.width = 8;
    img.height = 4;
    img.pixels.assign(32, Vec3{1, 1, 1});
    save_hdr((dir / "maps" / "flat.hdr").string(), img);
    text::write_file((dir / "scene.json").string(), R"({"lighting": {"hdri_path": "maps/flat.hdr", "ambient_lux": 800}})");
    const SceneConfig c = load_scene_config(dir / "scene.json");
    EXPECT_NEAR(rig_illuminance(build_rig(c)), 800, 0.8);
}

TEST(SceneConfig, MissingHdriNamesPath) {
    SceneConfig c;
    c.lighting.hdri_path = "/nonexistent/dir/sky.hdr";
    try {
        build_rig(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::io);
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/sky.hdr"), std::string::npos);
    }
}

TEST(SceneConfig, EnvironmentId) {
    SceneConfig c;
    EXPECT_EQ(environment_id(c), "builtin:indoor@2000lx");
    c.lighting.sun = SunConfig{0, 45, 3000};
    EXPECT_EQ(environment_id(c), "builtin:indoor@2000lx+sun3000lx");
}

TEST(CcmJson, RoundTripsExactly) {
    ColorCorrectionMatrix m;
    m.m = Mat3{{1.1, -0.2, 0.05, 0.01, 0.97, 0.3333333333333333, -0.04, 0.2, 1.2}};
    m.residual_rms = 0.0123;
    const auto back = ccm_from_json(json::parse(ccm_to_json(m).dump()));
    EXPECT_EQ(back.m, m.m);
    EXPECT_EQ(back.residual_rms, m.residual_rms);
    EXPECT_THROW(ccm_from_json(json::parse(R"({"matrix": [[1, 0], [0, 1]]})")), Error);
    EXPECT_THROW(ccm_from_json(json::parse(R"({"matrix": "I"})")), Error);
}
