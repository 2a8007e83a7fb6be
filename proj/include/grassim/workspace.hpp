#pragma once

// On-disk workspace: named scene configs plus immutable, content-addressed
// artifacts (curves, correction matrices, calibration tables).
//
// Layout under the root:
//   scenes/<name>.json
//   curves/<id>.csv         curve CSV
//   curves/<id>.json        metadata (source, viewpoint, environment, ...)
//   matrices/<id>.json
//   calibrations/<id>.csv   calibration CSV
//   calibrations/<id>.json  r2 values and the source curve id

#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "grassim/characteristic.hpp"
#include "grassim/config.hpp"
#include "grassim/curve_io.hpp"
#include "grassim/error.hpp"
#include "grassim/text.hpp"

namespace grassim {

inline constexpr const char* kWorkspaceEnv = "GRASSIM_WORKSPACE";

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        fail(ErrorCode::io, "SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

/// Everything that determines a virtual curve, in canonical form.
inline json sweep_fingerprint(const SceneConfig& scene, const SweepRequest& r) {
    json m = nullptr;
    if (r.ccm) m = ccm_to_json(*r.ccm)["matrix"];
    return {{"scene", to_json(scene)},
            {"viewpoint", {{"h_cm", r.viewpoint.h_cm}, {"d_m", r.viewpoint.d_m}, {"theta_deg", r.viewpoint.theta_deg}}},
            {"lengths_mm", r.lengths},
            {"spp", r.render.spp},
            {"seed", r.render.seed},
            {"bounces", r.render.bounces},
            {"width", r.width},
            {"height", r.height},
            {"fill", r.fill},
            {"ccm", m}};
}

struct StoredCurve {
    std::string id;
    CharacteristicCurve curve;
    json meta;
};

inline bool valid_artifact_id(std::string_view id) {
    if (id.empty() || id.size() > 128) return false;
    for (char ch : id)
        if (!((ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || ch == '-' || ch == '_')) return false;
    return true;
}

inline bool valid_scene_name(std::string_view name) {
    if (name.empty() || name.size() > 64 || name.front() == '.') return false;
    for (char ch : name)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') return false;
    return true;
}

class Workspace {
public:
    explicit Workspace(std::filesystem::path root) : root_(std::move(root)) {
        std::error_code ec;
        for (const char* d : {"scenes", "curves", "matrices", "calibrations"}) {
            std::filesystem::create_directories(root_ / d, ec);
            if (ec) fail(ErrorCode::io, "cannot create workspace directory '" + (root_ / d).string() + "': " + ec.message());
        }
    }

    /// Root from GRASSIM_WORKSPACE, falling back to `fallback`.
    static std::filesystem::path default_root(const std::filesystem::path& fallback = "grassim-workspace") {
        const char* env = std::getenv(kWorkspaceEnv);
        return env && *env ? std::filesystem::path(env) : fallback;
    }

    const std::filesystem::path& root() const { return root_; }

    // ---- scenes

    std::vector<std::string> scene_names() const {
        std::vector<std::string> out;
        for (const auto& e : std::filesystem::directory_iterator(root_ / "scenes"))
            if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
        std::sort(out.begin(), out.end());
        return out;
    }

    SceneConfig scene(const std::string& name) const {
        if (!valid_scene_name(name)) fail(ErrorCode::invalid_argument, "invalid scene name '" + name + "'");
        const auto path = root_ / "scenes" / (name + ".json");
        if (!std::filesystem::exists(path)) fail(ErrorCode::not_found, "no scene named '" + name + "'");
        return load_scene_config(path);
    }

    /// Stores a scene under its name. Re-saving identical content is a no-op;
    /// different content under an existing name is a conflict.
    void save_scene(const SceneConfig& c) {
        if (!valid_scene_name(c.name)) fail(ErrorCode::invalid_argument, "invalid scene name '" + c.name + "'");
        validate(c);
        write_immutable(root_ / "scenes" / (c.name + ".json"), to_json(c).dump(2) + "\n", "scene '" + c.name + "'");
    }

    // ---- curves

    /// Stores a curve under `id` (content address chosen by the caller).
    std::string put_curve(const std::string& id, const CharacteristicCurve& c, json meta = json::object()) {
        check_id(id);
        meta["source"] = std::string(to_string(c.source));
        meta["viewpoint"] = {{"h_cm", c.meta.viewpoint.h_cm}, {"d_m", c.meta.viewpoint.d_m}, {"theta_deg", c.meta.viewpoint.theta_deg}};
        meta["environment"] = c.meta.environment;
        write_immutable(root_ / "curves" / (id + ".csv"), curve_to_csv(c), "curve " + id);
        write_immutable(root_ / "curves" / (id + ".json"), meta.dump(2) + "\n", "curve " + id);
        return id;
    }

    /// Content address for imported curves: hash of the CSV text.
    std::string put_curve(const CharacteristicCurve& c, json meta = json::object()) {
        return put_curve(sha256_hex(std::string(to_string(c.source)) + "\n" + curve_to_csv(c)), c, std::move(meta));
    }

    bool has_curve(const std::string& id) const {
        return valid_artifact_id(id) && std::filesystem::exists(root_ / "curves" / (id + ".csv"));
    }

    StoredCurve curve(const std::string& id) const {
        check_id(id);
        const auto csv = root_ / "curves" / (id + ".csv");
        if (!std::filesystem::exists(csv)) fail(ErrorCode::not_found, "no curve with id '" + id + "'");
        const json meta = json::parse(text::read_file((root_ / "curves" / (id + ".json")).string()));
        const CurveSource src = meta.value("source", "virtual") == "real" ? CurveSource::Real : CurveSource::Virtual;
        StoredCurve out{id, curve_from_csv(text::read_file(csv.string()), src), meta};
        if (meta.contains("viewpoint")) {
            const auto& v = meta["viewpoint"];
            out.curve.meta.viewpoint = {v.value("h_cm", 170.0), v.value("d_m", 2.0), v.value("theta_deg", 0.0)};
        }
        out.curve.meta.environment = meta.value("environment", "");
        return out;
    }

    std::string curve_csv(const std::string& id) const {
        check_id(id);
        const auto csv = root_ / "curves" / (id + ".csv");
        if (!std::filesystem::exists(csv)) fail(ErrorCode::not_found, "no curve with id '" + id + "'");
        return text::read_file(csv.string());
    }

    std::vector<std::string> curve_ids() const { return ids("curves", ".csv"); }

    // ---- matrices

    std::string put_matrix(const ColorCorrectionMatrix& m) {
        const std::string body = ccm_to_json(m).dump(2) + "\n";
        const std::string id = sha256_hex(body);
        write_immutable(root_ / "matrices" / (id + ".json"), body, "matrix " + id);
        return id;
    }

    ColorCorrectionMatrix matrix(const std::string& id) const {
        check_id(id);
        const auto path = root_ / "matrices" / (id + ".json");
        if (!std::filesystem::exists(path)) fail(ErrorCode::not_found, "no matrix with id '" + id + "'");
        return ccm_from_json(json::parse(text::read_file(path.string())));
    }

    std::vector<std::string> matrix_ids() const { return ids("matrices", ".json"); }

    // ---- calibration tables

    std::string put_calibration(const CalibrationTable& t, const std::string& curve_id) {
        const std::string csv = calibration_to_csv(t);
        const std::string id = sha256_hex(curve_id + "\n" + csv);
        const json meta = {{"curve", curve_id}, {"r2_before", t.r2_before}, {"r2_after", t.r2_after}};
        write_immutable(root_ / "calibrations" / (id + ".csv"), csv, "calibration " + id);
        write_immutable(root_ / "calibrations" / (id + ".json"), meta.dump(2) + "\n", "calibration " + id);
        return id;
    }

    CalibrationTable calibration(const std::string& id) const {
        check_id(id);
        const auto csv = root_ / "calibrations" / (id + ".csv");
        if (!std::filesystem::exists(csv)) fail(ErrorCode::not_found, "no calibration with id '" + id + "'");
        const json meta = json::parse(text::read_file((root_ / "calibrations" / (id + ".json")).string()));
        CalibrationTable t;
        const auto rows = text::lines(text::read_file(csv.string()));
        if (rows.size() != kLevels + 1) fail(ErrorCode::format, "calibration " + id + ": expected 256 rows");
        for (std::size_t k = 0; k < kLevels; ++k)
            t.length_mm[k] = text::parse_double(text::split(rows[k + 1]).at(1), "length_mm");
        t.r2_before = meta.at("r2_before").get<double>();
        t.r2_after = meta.at("r2_after").get<double>();
        return t;
    }

    std::vector<std::string> calibration_ids() const { return ids("calibrations", ".csv"); }

private:
    static void check_id(const std::string& id) {
        if (!valid_artifact_id(id)) fail(ErrorCode::invalid_argument, "invalid artifact id '" + id + "'");
    }

    std::vector<std::string> ids(const char* dir, const char* ext) const {
        std::vector<std::string> out;
        for (const auto& e : std::filesystem::directory_iterator(root_ / dir))
            if (e.path().extension() == ext) out.push_back(e.path().stem().string());
        std::sort(out.begin(), out.end());
        return out;
    }

    // Single writer; files appear atomically through rename, so readers never
    // see partial content.
    void write_immutable(const std::filesystem::path& path, const std::string& body, const std::string& what) {
        std::lock_guard lock(write_mutex_);
        if (std::filesystem::exists(path)) {
            if (text::read_file(path.string()) != body) fail(ErrorCode::conflict, what + " already exists with different content");
            return;
        }
        const auto tmp = path.string() + ".tmp";
        text::write_file(tmp, body);
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec) fail(ErrorCode::io, "cannot store " + what + ": " + ec.message());
    }

    std::filesystem::path root_;
    std::mutex write_mutex_;
};

}  // namespace grassim
