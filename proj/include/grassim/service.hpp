#pragma once

// HTTP/JSON service over a workspace: previews, asynchronous sweeps with
// polling and cancellation, curve import, comparison and calibration, plus
// static assets for the browser client.
//
// Errors are returned as {"code": ..., "message": ...} with status 422 for
// invalid parameters, 404 for unknown resources and 409 for conflicts such as
// cancelling a finished job.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "grassim/curve_io.hpp"
#include "grassim/image_io.hpp"
#include "grassim/jobs.hpp"
#include "grassim/pipeline.hpp"
#include "grassim/workspace.hpp"

namespace grassim {

/// Viewpoint ranges accepted by the service (and advertised to clients).
struct ViewpointLimits {
    double h_min_cm = 50, h_max_cm = 300;
    double d_min_m = 0.5, d_max_m = 10;
    double theta_min_deg = 0, theta_max_deg = 90;
};

inline int http_status(ErrorCode c) {
    switch (c) {
        case ErrorCode::not_found: return 404;
        case ErrorCode::conflict:
        case ErrorCode::cancelled: return 409;
        case ErrorCode::io: return 500;
        default: return 422;
    }
}

inline json error_json(ErrorCode c, const std::string& message) {
    return {{"code", std::string(to_string(c))}, {"message", message}};
}

inline json job_to_json(const JobStatus& s) {
    json j = {{"id", s.id},
              {"kind", s.kind},
              {"state", std::string(to_string(s.state))},
              {"progress", s.progress()},
              {"completed", s.completed},
              {"total", s.total},
              {"result", nullptr},
              {"error", nullptr}};
    if (!s.result.empty()) j["result"] = s.result;
    if (!s.error.empty()) j["error"] = s.error;
    return j;
}

/// Stores a sweep result under the hash of its fingerprint. Cancelled sweeps
/// record the lengths actually measured so partial curves get their own id.
inline std::string store_sweep_result(Workspace& ws, const SceneConfig& scene, const SweepRequest& req,
                                      const SweepResult& r) {
    if (r.curve.samples.empty()) return {};
    json fp = sweep_fingerprint(scene, req);
    if (r.cancelled) fp["partial_lengths_mm"] = r.curve.lengths();
    const std::string id = sha256_hex(fp.dump());
    return ws.put_curve(id, r.curve, {{"fingerprint", fp}, {"partial", r.cancelled}});
}

struct ServiceOptions {
    std::filesystem::path static_dir;  // empty: no static assets
    int sweep_runners = 1;             // concurrent sweep jobs
    int render_workers = 0;            // threads per render; 0 = all cores
    ViewpointLimits limits;
};

class Service {
public:
    Service(Workspace& ws, ServiceOptions opts = {}) : ws_(ws), opts_(std::move(opts)), jobs_(opts_.sweep_runners) {
        if (!opts_.static_dir.empty()) {
            if (!std::filesystem::is_directory(opts_.static_dir))
                fail(ErrorCode::io, "static asset directory '" + opts_.static_dir.string() + "' does not exist");
            server_.set_mount_point("/", opts_.static_dir.string());
        }
        routes();
    }

    ~Service() { stop(); }

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    httplib::Server& http() { return server_; }
    JobManager& jobs() { return jobs_; }

    /// Binds to `port` (0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port) {
        const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (bound < 0) fail(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
        return bound;
    }

    /// Serves until stop() is called.
    void run() { server_.listen_after_bind(); }

    void stop() {
        if (server_.is_running()) server_.stop();
    }

private:
    using Req = httplib::Request;
    using Res = httplib::Response;

    static void send_json(Res& res, const json& j, int status = 200) {
        res.status = status;
        res.set_content(j.dump(), "application/json");
    }

    static json body_json(const Req& req) {
        try {
            json j = json::parse(req.body);
            if (!j.is_object()) fail(ErrorCode::format, "request body must be a JSON object");
            return j;
        } catch (const json::exception& e) {
            fail(ErrorCode::format, std::string("invalid JSON body: ") + e.what());
        }
    }

    template <class T>
    static T field(const json& j, const char* key, T fallback) {
        if (!j.contains(key) || j[key].is_null()) return fallback;
        try {
            return j[key].get<T>();
        } catch (const json::exception&) {
            fail(ErrorCode::invalid_argument, std::string("field '") + key + "' has the wrong type");
        }
    }

    static std::string required_string(const json& j, const char* key) {
        const std::string v = field<std::string>(j, key, "");
        if (v.empty()) fail(ErrorCode::invalid_argument, std::string("field '") + key + "' is required");
        return v;
    }

    static double query_double(const Req& req, const char* key, double fallback) {
        if (!req.has_param(key)) return fallback;
        double v = 0;
        if (!text::try_parse_double(req.get_param_value(key), v) || !std::isfinite(v))
            fail(ErrorCode::invalid_argument, std::string("parameter '") + key + "' must be a number");
        return v;
    }

    void check_viewpoint(const Viewpoint& v) const {
        const auto& l = opts_.limits;
        auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
        if (!in(v.h_cm, l.h_min_cm, l.h_max_cm))
            fail(ErrorCode::invalid_argument, "h must lie in [" + text::format_double(l.h_min_cm) + ", " +
                                                  text::format_double(l.h_max_cm) + "] cm");
        if (!in(v.d_m, l.d_min_m, l.d_max_m))
            fail(ErrorCode::invalid_argument, "d must lie in [" + text::format_double(l.d_min_m) + ", " +
                                                  text::format_double(l.d_max_m) + "] m");
        if (!in(v.theta_deg, l.theta_min_deg, l.theta_max_deg))
            fail(ErrorCode::invalid_argument, "theta must lie in [" + text::format_double(l.theta_min_deg) + ", " +
                                                  text::format_double(l.theta_max_deg) + "] degrees");
    }

    std::shared_ptr<const LightingRig> rig_for(const SceneConfig& scene) {
        const std::string key = scene.base_dir.string() + "\n" + canonical_json(scene);
        std::lock_guard lock(rig_mutex_);
        auto& slot = rigs_[key];
        if (!slot) slot = std::make_shared<const LightingRig>(build_rig(scene));
        return slot;
    }

    json scene_json(const std::string& name) {
        const SceneConfig s = ws_.scene(name);
        const auto& l = opts_.limits;
        json vps = json::array();
        for (const auto& v : s.viewpoints) vps.push_back({{"h_cm", v.h_cm}, {"d_m", v.d_m}, {"theta_deg", v.theta_deg}});
        json qualities = json::array();
        for (const auto& q : kQualityPresets) qualities.push_back(std::string(q.name));
        return {{"name", name},
                {"environment", environment_id(s)},
                {"length_mm", {s.grass.adjustable_min, s.grass.adjustable_max}},
                {"viewpoints", vps},
                {"limits",
                 {{"h_cm", {l.h_min_cm, l.h_max_cm}},
                  {"d_m", {l.d_min_m, l.d_max_m}},
                  {"theta_deg", {l.theta_min_deg, l.theta_max_deg}}}},
                {"qualities", qualities}};
    }

    void wrap(const Req& req, Res& res, const std::function<void(const Req&, Res&)>& fn) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            send_json(res, error_json(e.code(), e.what()), http_status(e.code()));
        } catch (const std::exception& e) {
            send_json(res, error_json(ErrorCode::io, e.what()), 500);
        }
    }

    template <class Fn>
    httplib::Server::Handler handler(Fn fn) {
        return [this, fn](const Req& req, Res& res) { wrap(req, res, [&](const Req& q, Res& r) { (this->*fn)(q, r); }); };
    }

    void routes() {
        server_.Get("/api/scenes", handler(&Service::get_scenes));
        server_.Get("/api/preview", handler(&Service::get_preview));
        server_.Post("/api/sweep", handler(&Service::post_sweep));
        server_.Get(R"(/api/jobs/([^/]+))", handler(&Service::get_job));
        server_.Delete(R"(/api/jobs/([^/]+))", handler(&Service::delete_job));
        server_.Get(R"(/api/curves/([^/]+))", handler(&Service::get_curve));
        server_.Get("/api/curves", handler(&Service::list_curves));
        server_.Post("/api/curves", handler(&Service::post_curve));
        server_.Post("/api/matrices", handler(&Service::post_matrix));
        server_.Get(R"(/api/matrices/([^/]+))", handler(&Service::get_matrix));
        server_.Post("/api/compare", handler(&Service::post_compare));
        server_.Post("/api/calibrate", handler(&Service::post_calibrate));
        server_.Get(R"(/api/calibrations/([^/]+))", handler(&Service::get_calibration));
        // Unmatched routes and other library-generated errors get the same
        // JSON shape as handler errors.
        server_.set_error_handler([](const Req& req, Res& res) {
            if (!res.body.empty()) return;
            const ErrorCode c = res.status == 404 ? ErrorCode::not_found : ErrorCode::invalid_argument;
            send_json(res, error_json(c, "no route for " + req.method + " " + req.path), res.status);
        });
    }

    void get_scenes(const Req&, Res& res) {
        json out = json::array();
        for (const auto& name : ws_.scene_names()) out.push_back(scene_json(name));
        send_json(res, {{"scenes", out}});
    }

    // Rendered on the request thread, so previews never wait behind sweeps.
    void get_preview(const Req& req, Res& res) {
        if (!req.has_param("scene")) fail(ErrorCode::invalid_argument, "parameter 'scene' is required");
        const SceneConfig scene = ws_.scene(req.get_param_value("scene"));
        const Viewpoint dv = scene.viewpoints.front();
        RenderJob job;
        job.viewpoint = {query_double(req, "h", dv.h_cm), query_double(req, "d", dv.d_m), query_double(req, "theta", dv.theta_deg)};
        check_viewpoint(job.viewpoint);
        job.length_mm = query_double(req, "length", 0.5 * (scene.grass.adjustable_min + scene.grass.adjustable_max));
        job.quality = req.has_param("quality") ? req.get_param_value("quality") : "default";
        quality_preset(job.quality);
        const double seed = query_double(req, "seed", 1);
        if (!(seed >= 0 && seed == std::floor(seed))) fail(ErrorCode::invalid_argument, "seed must be a non-negative integer");
        job.seed = static_cast<std::uint64_t>(seed);
        job.workers = opts_.render_workers;
        const RenderOutput out = render_grass(scene, *rig_for(scene), job);
        const Vec3& m = out.region_prophoto.values;
        res.set_header("X-Region-Mean-ProPhoto",
                       text::format_double(m.x) + "," + text::format_double(m.y) + "," + text::format_double(m.z));
        res.set_header("Cache-Control", "no-store");
        res.set_content(encode_preview_png(out.image), "image/png");
    }

    void post_sweep(const Req& req, Res& res) {
        const json b = body_json(req);
        const SceneConfig scene = ws_.scene(required_string(b, "scene"));
        SweepJob job;
        const Viewpoint dv = scene.viewpoints.front();
        job.viewpoint = {field(b, "h", dv.h_cm), field(b, "d", dv.d_m), field(b, "theta", dv.theta_deg)};
        check_viewpoint(job.viewpoint);
        job.quality = field<std::string>(b, "quality", "default");
        job.seed = field<std::uint64_t>(b, "seed", 1);
        job.lengths = field<std::vector<double>>(b, "lengths_mm", {});
        const std::string matrix_id = field<std::string>(b, "matrix", "");
        if (!matrix_id.empty()) job.ccm = ws_.matrix(matrix_id);
        job.workers = opts_.render_workers;
        const SweepRequest r = make_sweep_request(scene, job);
        // Reject bad lengths now rather than as a failed job.
        const GrassPixelParams p = scene.params();
        if (r.lengths.empty()) fail(ErrorCode::invalid_argument, "no lengths to sweep");
        for (std::size_t i = 0; i < r.lengths.size(); ++i) {
            if (!(r.lengths[i] >= p.adjustable_min && r.lengths[i] <= p.adjustable_max))
                fail(ErrorCode::out_of_range, "length out of range: " + text::format_double(r.lengths[i]) + " mm");
            if (i > 0 && !(r.lengths[i] > r.lengths[i - 1]))
                fail(ErrorCode::invalid_argument, "lengths must be strictly increasing");
        }
        const auto rig = rig_for(scene);
        const std::string id = jobs_.submit("sweep", [this, scene, r, rig](JobContext& ctx) {
            SweepControl control;
            control.cancel = &ctx.cancel_flag();
            control.progress = [&ctx](std::size_t done, std::size_t total) { ctx.progress(done, total); };
            ctx.progress(0, r.lengths.size());
            return store_sweep_result(ws_, scene, r, sweep(r, *rig, control));
        });
        send_json(res, job_to_json(jobs_.status(id)), 202);
    }

    void get_job(const Req& req, Res& res) { send_json(res, job_to_json(jobs_.status(req.matches[1]))); }

    void delete_job(const Req& req, Res& res) { send_json(res, job_to_json(jobs_.cancel(req.matches[1]))); }

    void get_curve(const Req& req, Res& res) {
        const std::string id = req.matches[1];
        if (req.get_param_value("format") == "csv") {
            res.set_content(ws_.curve_csv(id), "text/csv");
            return;
        }
        const StoredCurve s = ws_.curve(id);
        json j = curve_to_json(s.curve);
        j["id"] = id;
        j["meta"] = s.meta;
        send_json(res, j);
    }

    void list_curves(const Req&, Res& res) { send_json(res, {{"curves", ws_.curve_ids()}}); }

    /// Imports a measured or externally produced curve: {"source", "csv"}.
    void post_curve(const Req& req, Res& res) {
        const json b = body_json(req);
        const std::string src = field<std::string>(b, "source", "real");
        if (src != "real" && src != "virtual") fail(ErrorCode::invalid_argument, "source must be 'real' or 'virtual'");
        CharacteristicCurve c = load_curve_text(required_string(b, "csv"), src == "real" ? CurveSource::Real : CurveSource::Virtual);
        validate(c);
        c.meta.environment = field<std::string>(b, "environment", "");
        send_json(res, {{"id", ws_.put_curve(c)}}, 201);
    }

    void post_matrix(const Req& req, Res& res) {
        send_json(res, {{"id", ws_.put_matrix(ccm_from_json(body_json(req)))}}, 201);
    }

    void get_matrix(const Req& req, Res& res) { send_json(res, ccm_to_json(ws_.matrix(req.matches[1]))); }

    void post_compare(const Req& req, Res& res) {
        const json b = body_json(req);
        const std::string vid = required_string(b, "virtual"), rid = required_string(b, "real");
        json j = comparison_to_json(compare_curves(ws_.curve(vid).curve, ws_.curve(rid).curve));
        j["virtual"] = vid;
        j["real"] = rid;
        send_json(res, j);
    }

    void post_calibrate(const Req& req, Res& res) {
        const json b = body_json(req);
        const std::string cid = required_string(b, "curve");
        const CalibrationTable t = calibrate_8bit(ws_.curve(cid).curve);
        json j = calibration_to_json(t);
        j["id"] = ws_.put_calibration(t, cid);
        j["curve"] = cid;
        send_json(res, j, 201);
    }

    void get_calibration(const Req& req, Res& res) {
        const std::string id = req.matches[1];
        const CalibrationTable t = ws_.calibration(id);
        if (req.get_param_value("format") == "csv") {
            res.set_content(calibration_to_csv(t), "text/csv");
            return;
        }
        json j = calibration_to_json(t);
        j["id"] = id;
        send_json(res, j);
    }

    Workspace& ws_;
    ServiceOptions opts_;
    httplib::Server server_;
    std::mutex rig_mutex_;
    std::map<std::string, std::shared_ptr<const LightingRig>> rigs_;
    JobManager jobs_;  // last: destroyed first, while the members its jobs use are alive
};

}  // namespace grassim
