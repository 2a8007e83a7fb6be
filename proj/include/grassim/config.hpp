#pragma once

// Scene configuration files (JSON). Lengths are millimeters and albedos are
// 8-bit sRGB triples at this boundary; both are converted on load.

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "grassim/camera.hpp"
#include "grassim/ccm.hpp"
#include "grassim/error.hpp"
#include "grassim/hdr_io.hpp"
#include "grassim/lighting.hpp"
#include "grassim/scene.hpp"
#include "grassim/text.hpp"

namespace grassim {

using nlohmann::json;

struct SunConfig {
    double azimuth_deg = 0.0;
    double elevation_deg = 45.0;
    double total_lux = 0.0;
    friend bool operator==(const SunConfig&, const SunConfig&) = default;
};

struct LightingConfig {
    /// File path (relative to the config file) or builtin:uniform,
    /// builtin:gradient, builtin:indoor.
    std::string hdri_path = "builtin:indoor";
    int env_height = 128;  // builtin maps only
    double ambient_lux = 2000.0;
    std::optional<SunConfig> sun;
    friend bool operator==(const LightingConfig&, const LightingConfig&) = default;
};

struct AlbedoConfig {
    EncodedSRGB fixed{214, 186, 52};
    EncodedSRGB adjustable{58, 128, 42};
    EncodedSRGB base{46, 46, 46};
    EncodedSRGB slit{18, 18, 18};
    friend bool operator==(const AlbedoConfig&, const AlbedoConfig&) = default;
};

struct CheckerConfig {
    std::array<EncodedSRGB, kCheckerPatches> albedos = kColorCheckerSRGB;
    double patch_mm = 40.0;
    double gutter_mm = 6.0;
    EncodedSRGB board{30, 30, 30};
    friend bool operator==(const CheckerConfig&, const CheckerConfig&) = default;
};

struct SceneConfig {
    std::string name = "scene";
    GrassPixelParams grass;  // albedo fields are derived from `albedos`
    AlbedoConfig albedos;
    CheckerConfig checker;
    LightingConfig lighting;
    std::vector<Viewpoint> viewpoints{{170, 2, 0}};
    std::filesystem::path base_dir;  // resolves relative HDRI paths; not serialized

    GrassPixelParams params() const {
        GrassPixelParams p = grass;
        p.fixed_albedo = decode_srgb(albedos.fixed);
        p.adjustable_albedo = decode_srgb(albedos.adjustable);
        p.base_albedo = decode_srgb(albedos.base);
        p.slit_albedo = decode_srgb(albedos.slit);
        return p;
    }

    CheckerLayout checker_layout() const { return {checker.patch_mm, checker.gutter_mm, decode_srgb(checker.board)}; }

    std::array<Color, kCheckerPatches> checker_albedos() const {
        std::array<Color, kCheckerPatches> out;
        for (std::size_t i = 0; i < kCheckerPatches; ++i) out[i] = decode_srgb(checker.albedos[i]);
        return out;
    }
};

namespace detail {

inline json srgb_json(EncodedSRGB c) { return json::array({c.r, c.g, c.b}); }

inline EncodedSRGB srgb_from(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) fail(ErrorCode::format, what + ": expected [r, g, b]");
    std::array<std::uint8_t, 3> v{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!j[i].is_number_integer() || j[i].get<long>() < 0 || j[i].get<long>() > 255)
            fail(ErrorCode::format, what + ": components must be integers in 0..255");
        v[i] = static_cast<std::uint8_t>(j[i].get<long>());
    }
    return {v[0], v[1], v[2]};
}

/// Rejects keys outside `allowed` so typos do not silently fall back to defaults.
inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
    if (!j.is_object()) fail(ErrorCode::format, what + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) fail(ErrorCode::format, what + ": unknown key '" + k + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& what) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::format, what + "." + key + ": wrong type");
    }
}

}  // namespace detail

inline void validate(const SceneConfig& c) {
    try {
        validate(c.params());
        for (const auto& v : c.viewpoints) validate(v);
    } catch (const Error& e) {
        fail(ErrorCode::invalid_argument, std::string("config: ") + e.what());
    }
    if (!(c.checker.patch_mm > 0) || !(c.checker.gutter_mm >= 0))
        fail(ErrorCode::invalid_argument, "config: checker sizes must be positive");
    if (!(c.lighting.ambient_lux > 0) || !std::isfinite(c.lighting.ambient_lux))
        fail(ErrorCode::invalid_argument, "config: ambient_lux must be positive");
    if (c.lighting.env_height < 2) fail(ErrorCode::invalid_argument, "config: env_height must be at least 2");
    if (c.lighting.sun && !(c.lighting.sun->total_lux >= c.lighting.ambient_lux))
        fail(ErrorCode::invalid_argument, "config: sun total_lux must be at least ambient_lux");
}

inline json to_json(const SceneConfig& c) {
    const GrassPixelParams& g = c.grass;
    json grass = {
        {"surface_size_mm", g.surface_size},
        {"base_height_mm", g.base_height},
        {"fixed_length_mm", g.fixed_length},
        {"slit_count", g.slit_count},
        {"slit_width_mm", g.slit_width},
        {"adjustable_range_mm", {g.adjustable_min, g.adjustable_max}},
        {"fixed_density", g.fixed_density},
        {"adjustable_density", g.adjustable_density},
        {"fixed_blade_width_mm", g.fixed_blade_width},
        {"adjustable_blade_width_mm", g.adjustable_blade_width},
        {"tip_taper", g.tip_taper},
        {"fixed_max_tilt_deg", g.fixed_max_tilt},
        {"adjustable_max_tilt_deg", g.adjustable_max_tilt},
        {"smoothness", g.smoothness},
        {"specular_weight", g.specular_weight},
        {"seed", g.seed},
        {"albedo",
         {{"fixed", detail::srgb_json(c.albedos.fixed)},
          {"adjustable", detail::srgb_json(c.albedos.adjustable)},
          {"base", detail::srgb_json(c.albedos.base)},
          {"slit", detail::srgb_json(c.albedos.slit)}}},
    };
    json patches = json::array();
    for (const auto& p : c.checker.albedos) patches.push_back(detail::srgb_json(p));
    json lighting = {{"hdri_path", c.lighting.hdri_path},
                     {"env_height", c.lighting.env_height},
                     {"ambient_lux", c.lighting.ambient_lux}};
    if (c.lighting.sun)
        lighting["sun"] = {{"azimuth_deg", c.lighting.sun->azimuth_deg},
                           {"elevation_deg", c.lighting.sun->elevation_deg},
                           {"total_lux", c.lighting.sun->total_lux}};
    json vps = json::array();
    for (const auto& v : c.viewpoints) vps.push_back({{"h_cm", v.h_cm}, {"d_m", v.d_m}, {"theta_deg", v.theta_deg}});
    return {{"name", c.name},
            {"grass", grass},
            {"checker",
             {{"albedo", patches},
              {"patch_mm", c.checker.patch_mm},
              {"gutter_mm", c.checker.gutter_mm},
              {"board", detail::srgb_json(c.checker.board)}}},
            {"lighting", lighting},
            {"viewpoints", vps}};
}

inline SceneConfig scene_config_from_json(const json& j) {
    using detail::read;
    SceneConfig c;
    detail::check_keys(j, {"name", "grass", "checker", "lighting", "viewpoints"}, "config");
    read(j, "name", c.name, "config");
    if (j.contains("grass")) {
        const json& g = j["grass"];
        detail::check_keys(g,
                           {"surface_size_mm", "base_height_mm", "fixed_length_mm", "slit_count", "slit_width_mm",
                            "adjustable_range_mm", "fixed_density", "adjustable_density", "fixed_blade_width_mm",
                            "adjustable_blade_width_mm", "tip_taper", "fixed_max_tilt_deg", "adjustable_max_tilt_deg",
                            "smoothness", "specular_weight", "seed", "albedo"},
                           "grass");
        GrassPixelParams& p = c.grass;
        read(g, "surface_size_mm", p.surface_size, "grass");
        read(g, "base_height_mm", p.base_height, "grass");
        read(g, "fixed_length_mm", p.fixed_length, "grass");
        read(g, "slit_count", p.slit_count, "grass");
        read(g, "slit_width_mm", p.slit_width, "grass");
        if (g.contains("adjustable_range_mm")) {
            std::vector<double> r;
            read(g, "adjustable_range_mm", r, "grass");
            if (r.size() != 2) fail(ErrorCode::format, "grass.adjustable_range_mm: expected [min, max]");
            p.adjustable_min = r[0];
            p.adjustable_max = r[1];
        }
        read(g, "fixed_density", p.fixed_density, "grass");
        read(g, "adjustable_density", p.adjustable_density, "grass");
        read(g, "fixed_blade_width_mm", p.fixed_blade_width, "grass");
        read(g, "adjustable_blade_width_mm", p.adjustable_blade_width, "grass");
        read(g, "tip_taper", p.tip_taper, "grass");
        read(g, "fixed_max_tilt_deg", p.fixed_max_tilt, "grass");
        read(g, "adjustable_max_tilt_deg", p.adjustable_max_tilt, "grass");
        read(g, "smoothness", p.smoothness, "grass");
        read(g, "specular_weight", p.specular_weight, "grass");
        read(g, "seed", p.seed, "grass");
        if (g.contains("albedo")) {
            const json& a = g["albedo"];
            detail::check_keys(a, {"fixed", "adjustable", "base", "slit"}, "grass.albedo");
            if (a.contains("fixed")) c.albedos.fixed = detail::srgb_from(a["fixed"], "grass.albedo.fixed");
            if (a.contains("adjustable")) c.albedos.adjustable = detail::srgb_from(a["adjustable"], "grass.albedo.adjustable");
            if (a.contains("base")) c.albedos.base = detail::srgb_from(a["base"], "grass.albedo.base");
            if (a.contains("slit")) c.albedos.slit = detail::srgb_from(a["slit"], "grass.albedo.slit");
        }
    }
    if (j.contains("checker")) {
        const json& k = j["checker"];
        detail::check_keys(k, {"albedo", "patch_mm", "gutter_mm", "board"}, "checker");
        if (k.contains("albedo")) {
            if (!k["albedo"].is_array() || k["albedo"].size() != kCheckerPatches)
                fail(ErrorCode::format, "checker.albedo: expected 24 [r, g, b] entries");
            for (std::size_t i = 0; i < kCheckerPatches; ++i)
                c.checker.albedos[i] = detail::srgb_from(k["albedo"][i], "checker.albedo[" + std::to_string(i) + "]");
        }
        read(k, "patch_mm", c.checker.patch_mm, "checker");
        read(k, "gutter_mm", c.checker.gutter_mm, "checker");
        if (k.contains("board")) c.checker.board = detail::srgb_from(k["board"], "checker.board");
    }
    if (j.contains("lighting")) {
        const json& l = j["lighting"];
        detail::check_keys(l, {"hdri_path", "env_height", "ambient_lux", "sun"}, "lighting");
        read(l, "hdri_path", c.lighting.hdri_path, "lighting");
        read(l, "env_height", c.lighting.env_height, "lighting");
        read(l, "ambient_lux", c.lighting.ambient_lux, "lighting");
        if (l.contains("sun") && !l["sun"].is_null()) {
            const json& s = l["sun"];
            detail::check_keys(s, {"azimuth_deg", "elevation_deg", "total_lux"}, "lighting.sun");
            SunConfig sun;
            read(s, "azimuth_deg", sun.azimuth_deg, "lighting.sun");
            read(s, "elevation_deg", sun.elevation_deg, "lighting.sun");
            read(s, "total_lux", sun.total_lux, "lighting.sun");
            c.lighting.sun = sun;
        }
    }
    if (j.contains("viewpoints")) {
        if (!j["viewpoints"].is_array() || j["viewpoints"].empty())
            fail(ErrorCode::format, "viewpoints: expected a non-empty array");
        c.viewpoints.clear();
        for (const auto& v : j["viewpoints"]) {
            detail::check_keys(v, {"h_cm", "d_m", "theta_deg"}, "viewpoints[]");
            Viewpoint vp;
            read(v, "h_cm", vp.h_cm, "viewpoints[]");
            read(v, "d_m", vp.d_m, "viewpoints[]");
            read(v, "theta_deg", vp.theta_deg, "viewpoints[]");
            c.viewpoints.push_back(vp);
        }
    }
    validate(c);
    return c;
}

inline SceneConfig parse_scene_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::format, std::string("config: invalid JSON: ") + e.what());
    }
    return scene_config_from_json(j);
}

inline SceneConfig load_scene_config(const std::filesystem::path& path) {
    SceneConfig c = parse_scene_config(text::read_file(path.string()));
    c.base_dir = path.parent_path();
    return c;
}

/// Canonical text used for hashing and storage.
inline std::string canonical_json(const SceneConfig& c) { return to_json(c).dump(); }

inline EnvironmentMap builtin_environment(std::string_view name, int height) {
    if (name == "uniform") return make_uniform_env(height, {1, 1, 1});
    if (name == "gradient") return make_gradient_sky(height, {0.35, 0.5, 0.9}, {0.9, 0.95, 1.0}, {0.25, 0.22, 0.18});
    if (name == "indoor") return make_indoor_env(height);
    fail(ErrorCode::invalid_argument, "unknown builtin environment '" + std::string(name) + "'");
}

inline LightingRig build_rig(const SceneConfig& c, std::vector<std::string>* warnings = nullptr) {
    const LightingConfig& l = c.lighting;
    EnvironmentMap env;
    constexpr std::string_view kBuiltin = "builtin:";
    if (l.hdri_path.starts_with(kBuiltin)) {
        env = builtin_environment(std::string_view(l.hdri_path).substr(kBuiltin.size()), l.env_height);
    } else {
        std::filesystem::path p(l.hdri_path);
        if (p.is_relative() && !c.base_dir.empty()) p = c.base_dir / p;
        env = load_hdri(p.string(), warnings);
    }
    std::optional<SunLight> sun;
    if (l.sun)
        sun = split_sun(l.sun->total_lux, l.ambient_lux,
                        direction_from_azimuth_elevation(l.sun->azimuth_deg, l.sun->elevation_deg));
    return make_rig(std::move(env), l.ambient_lux, sun);
}

/// Short identifier of the lighting setup, stored with curves.
inline std::string environment_id(const SceneConfig& c) {
    std::string id = c.lighting.hdri_path + "@" + text::format_double(c.lighting.ambient_lux) + "lx";
    if (c.lighting.sun) id += "+sun" + text::format_double(c.lighting.sun->total_lux) + "lx";
    return id;
}

// ---------------------------------------------------------------- matrices

inline json ccm_to_json(const ColorCorrectionMatrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < 3; ++r) rows.push_back({m.m(r, 0), m.m(r, 1), m.m(r, 2)});
    return {{"matrix", rows}, {"residual_rms", m.residual_rms}};
}

inline ColorCorrectionMatrix ccm_from_json(const json& j) {
    ColorCorrectionMatrix m;
    try {
        const json& rows = j.at("matrix");
        if (!rows.is_array() || rows.size() != 3) fail(ErrorCode::format, "ccm: matrix must have 3 rows");
        for (std::size_t r = 0; r < 3; ++r) {
            if (!rows[r].is_array() || rows[r].size() != 3) fail(ErrorCode::format, "ccm: rows must have 3 entries");
            for (std::size_t c = 0; c < 3; ++c) m.m(r, c) = rows[r][c].get<double>();
        }
        if (j.contains("residual_rms")) m.residual_rms = j["residual_rms"].get<double>();
    } catch (const json::exception& e) {
        fail(ErrorCode::format, std::string("ccm: ") + e.what());
    }
    for (double v : m.m.m)
        if (!std::isfinite(v)) fail(ErrorCode::format, "ccm: entries must be finite");
    return m;
}

}  // namespace grassim
