// Acceptance suite: one PASS/FAIL line per criterion, each with its measured
// values, tolerance and runtime against the budget.
//
//   acceptance [criterion ...]     (no arguments: run all)

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "grassim/ccm.hpp"
#include "grassim/characteristic.hpp"
#include "grassim/colorimetry.hpp"
#include "grassim/config.hpp"
#include "grassim/pipeline.hpp"
#include "grassim/renderer.hpp"
#include "support/oracles.hpp"

using namespace grassim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;
    double extra_seconds = 0;  // shared work done earlier but owed to this criterion

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what;
        if (!ok) detail += " [not met]";
    }
};

// ------------------------------------------------------------ shared sweeps

const std::string kDemoScene = std::string(GRASSIM_DATA_DIR) + "/demo_scene.json";

struct TimedCurve {
    CharacteristicCurve curve;
    double seconds = 0;
};

class Sweeps {
public:
    Sweeps() : scene_(load_scene_config(kDemoScene)), rig_(build_rig(scene_)) {}

    const SceneConfig& scene() const { return scene_; }
    const LightingRig& rig() const { return rig_; }

    /// Demo scene at (170, 2, theta), measure preset.
    const TimedCurve& curve(double theta, std::uint64_t seed) {
        const auto key = std::make_pair(theta, seed);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const auto t0 = Clock::now();
        SweepRequest r = sweep_request(scene_.params(), {170, 2, theta}, quality_preset("measure"), seed);
        TimedCurve tc{sweep(r, rig_).curve, 0};
        tc.seconds = seconds_since(t0);
        std::fprintf(stderr, "  sweep theta=%g seed=%llu: %.1f s\n", theta, static_cast<unsigned long long>(seed), tc.seconds);
        return cache_.emplace(key, std::move(tc)).first->second;
    }

private:
    SceneConfig scene_;
    LightingRig rig_;
    std::map<std::pair<double, std::uint64_t>, TimedCurve> cache_;
};

Sweeps& sweeps() {
    static Sweeps s;
    return s;
}

// ---------------------------------------------------------------- criteria

Color lab(double l, double a, double b) { return Color::lab(l, a, b, WhitePoint::D50); }

Outcome ciede2000_criterion() {
    Outcome o;
    double max_err = 0;
    for (const auto& r : oracle::kSharma)
        max_err = std::max(max_err, std::fabs(ciede2000(lab(r.l1, r.a1, r.b1), lab(r.l2, r.a2, r.b2)) - r.de));
    o.check(max_err <= 1e-4, fmt("34 reference pairs max |dE err| %.2e (tol 1e-4)", max_err));

    std::mt19937_64 rng(20261019);
    std::uniform_real_distribution<double> L(0, 100), AB(-128, 128);
    int asym = 0, nonzero = 0;
    for (int i = 0; i < 100000; ++i) {
        const Color a = lab(L(rng), AB(rng), AB(rng)), b = lab(L(rng), AB(rng), AB(rng));
        if (ciede2000(a, b) != ciede2000(b, a)) ++asym;
        if (ciede2000(a, a) != 0.0) ++nonzero;
    }
    o.check(asym == 0 && nonzero == 0, fmt("1e5 random pairs: %d asymmetric, %d nonzero self-distances", asym, nonzero));
    return o;
}

Outcome round_trip_criterion() {
    Outcome o;
    std::mt19937_64 rng(7001);
    std::uniform_real_distribution<double> u(0, 1);
    double worst = 0;
    auto err = [](const Vec3& a, const Vec3& b) {
        return std::max({std::fabs(a.x - b.x), std::fabs(a.y - b.y), std::fabs(a.z - b.z)});
    };
    for (int i = 0; i < 20000; ++i) {
        // display -> XYZ -> ProPhoto -> Lab -> ProPhoto -> XYZ -> display
        const Color d = Color::linear_display(u(rng), u(rng), u(rng));
        const Color x = convert(d, ColorSpace::XYZ, WhitePoint::D65);
        const Color p = convert(x, ColorSpace::ProPhotoLinearRGB);
        const Color l = convert(p, ColorSpace::CIELAB, WhitePoint::D50);
        const Color p2 = convert(l, ColorSpace::ProPhotoLinearRGB);
        const Color x2 = convert(p2, ColorSpace::XYZ, WhitePoint::D65);
        const Color d2 = convert(x2, ColorSpace::LinearDisplayRGB);
        worst = std::max({worst, err(d.values, d2.values), err(p.values, p2.values), err(x.values, x2.values)});
        // ProPhoto-gamut start: ProPhoto -> Lab -> XYZ -> display -> ProPhoto
        const Color q = Color::prophoto(u(rng), u(rng), u(rng));
        const Color ql = convert(q, ColorSpace::CIELAB, WhitePoint::D50);
        const Color qx = convert(ql, ColorSpace::XYZ, WhitePoint::D50);
        const Color qd = convert(qx, ColorSpace::LinearDisplayRGB);
        const Color q2 = convert(qd, ColorSpace::ProPhotoLinearRGB);
        const Color ql2 = convert(q2, ColorSpace::CIELAB, WhitePoint::D50);
        worst = std::max({worst, err(q.values, q2.values), err(ql.values, ql2.values)});
    }
    o.check(worst <= 1e-6, fmt("40000 chains, max per-channel error %.2e (tol 1e-6)", worst));
    return o;
}

Outcome ccm_criterion() {
    Outcome o;
    std::mt19937_64 rng(424242);
    std::uniform_real_distribution<double> patch(0.02, 1.0), entry(-0.3, 0.3);
    std::normal_distribution<double> gauss(0, 1);
    double worst_exact = 0, worst_noisy = 0, ratio_min = 1e9, ratio_max = 0;
    int sets = 0;
    while (sets < 100) {
        PatchSet virt;
        for (auto& p : virt.patches) p = Color::prophoto(patch(rng), patch(rng), patch(rng));
        Mat3 m0 = Mat3::identity();
        for (auto& v : m0.m) v += entry(rng);
        PatchSet real;
        real.source = PatchSource::Real;
        bool ok = true;
        for (std::size_t i = 0; i < kPatchCount; ++i) {
            const Vec3 v = m0 * virt.patches[i].values;
            ok = ok && v.x > 0.01 && v.y > 0.01 && v.z > 0.01;
            real.patches[i] = Color::prophoto(std::max(v.x, 0.0), std::max(v.y, 0.0), std::max(v.z, 0.0));
        }
        if (!ok) continue;  // real patches must be non-negative; draw again
        ++sets;
        const ColorCorrectionMatrix exact = fit_ccm(real, virt);
        for (std::size_t k = 0; k < 9; ++k) worst_exact = std::max(worst_exact, std::fabs(exact.m.m[k] - m0.m[k]));

        // 1% Gaussian noise on the measured side. M0 is a feasible fit, so the
        // least-squares residual cannot exceed the injected noise; a residual
        // far below it would mean the fit absorbed noise.
        PatchSet noisy = real;
        double noise2 = 0;
        for (auto& p : noisy.patches) {
            Vec3 n{gauss(rng), gauss(rng), gauss(rng)};
            const Vec3 e = p.values * n * 0.01;
            noise2 += dot(e, e);
            p.values += e;
        }
        const double noise_rms = std::sqrt(noise2 / (3.0 * kPatchCount));
        const ColorCorrectionMatrix fit = fit_ccm(noisy, virt);
        const double ratio = fit.residual_rms / noise_rms;
        ratio_min = std::min(ratio_min, ratio);
        ratio_max = std::max(ratio_max, ratio);
        for (std::size_t k = 0; k < 9; ++k) worst_noisy = std::max(worst_noisy, std::fabs(fit.m.m[k] - m0.m[k]));
    }
    o.check(worst_exact <= 1e-9, fmt("noiseless: 100 sets, max |M - M0| %.2e (tol 1e-9)", worst_exact));
    o.check(ratio_max <= 1 + 1e-9 && ratio_min >= 0.6,
            fmt("1%% noise: residual / injected rms in [%.3f, %.3f] (want within [0.6, 1]), max |M - M0| %.4f", ratio_min,
                ratio_max, worst_noisy));
    return o;
}

Vec3 image_mean(const LinearImage& img) {
    Vec3 s{};
    for (const auto& p : img.pixels) s += p;
    return s / static_cast<double>(img.pixels.size());
}

Outcome furnace_criterion() {
    Outcome o;
    const double rho = 0.5, L = 0.8;
    {
        // Lambertian plane filling the frame: every pixel sees rho * L.
        SceneGeometry g;
        g.materials = {Material{Color::linear_display(rho, rho, rho), 0.0, 0.5, 0.0}};
        g.add_quad({-1, 0, -1}, {-1, 0, 1}, {1, 0, 1}, {1, 0, -1}, 0, PrimitiveKind::Board);
        Camera cam;
        cam.position = {0, 1, 0};
        cam.look_at = {0, 0, 0};
        cam.up = {0, 0, -1};
        cam.vertical_fov = 20;
        cam.width = 8;
        cam.height = 8;
        const LightingRig rig{make_uniform_env(32, {L, L, L}), std::nullopt, 1.0};
        const LinearImage img = render(g, rig, cam, RenderSettings{1024, 1, 2, 0, {}});
        const double mean = image_mean(img).y;
        double worst_px = 0;
        for (const auto& p : img.pixels) worst_px = std::max(worst_px, std::fabs(p.y / (rho * L) - 1));
        o.check(std::fabs(mean / (rho * L) - 1) <= 0.02,
                fmt("plane rho=0.5: mean %.5f vs %.5f (err %.3f%%, tol 2%%), worst pixel %.2f%%", mean, rho * L,
                    100 * std::fabs(mean / (rho * L) - 1), 100 * worst_px));
    }
    {
        // Concave grass pixel, every surface rho: with B bounces the radiance
        // is bounded by L * (rho + ... + rho^(B+1)) and, since no surface can
        // see more than L, by rho * L as well.
        GrassPixelParams p;
        p.fixed_albedo = p.adjustable_albedo = p.base_albedo = p.slit_albedo = Color::linear_display(rho, rho, rho);
        p.specular_weight = 0.0;
        const SceneGeometry g = build_grass_pixel(p, 12.0);
        const Camera cam = viewpoint_to_camera({170, 2, 0}, {grass_pixel_bounds(p), 0.8, 96, 64});
        const Quad q = project_pixel_corners(g, cam);
        const LightingRig rig{make_uniform_env(32, {L, L, L}), std::nullopt, 1.0};
        std::string s;
        bool ok = true;
        for (int b : {0, 1, 2, 8}) {
            const LinearImage img = render(g, rig, cam, RenderSettings{1024, 3, b, 0, {}});
            const double mean = average_region(img, q).values.y;
            const double bound = L * rho * (1 - std::pow(rho, b + 1)) / (1 - rho);
            ok = ok && mean <= bound * 1.01 && mean <= rho * L * 1.01;
            s += fmt("%sB=%d %.4f (bound %.4f)", s.empty() ? "" : ", ", b, mean, bound);
        }
        o.check(ok, "concave region mean vs per-budget bound: " + s);
    }
    return o;
}

Outcome determinism_criterion() {
    Outcome o;
    const SceneConfig scene = load_scene_config(kDemoScene);
    const GrassPixelParams p = scene.params();
    const SceneGeometry g = build_grass_pixel(p, 12.0);
    const LightingRig rig =
        make_rig(make_indoor_env(64), 2000.0, split_sun(6000.0, 2000.0, direction_from_azimuth_elevation(200, 55)));
    const Camera cam = viewpoint_to_camera({170, 2, 30}, {grass_pixel_bounds(p), 0.8, 150, 100});
    RenderSettings s{16, 99, 2, 1, {}};
    const LinearImage one = render(g, rig, cam, s);
    bool same = true;
    for (int w : {4, 16}) {
        s.workers = w;
        same = same && render(g, rig, cam, s) == one;
    }
    o.check(same, "150x100 16 spp render with sun: 1/4/16 workers bit-identical");

    SweepRequest r = sweep_request(p, {170, 2, 60}, quality_preset("preview"), 5);
    r.lengths = {0, 4, 8, 12};
    r.width = 150;
    r.height = 100;
    r.render.workers = 1;
    const SweepResult a = sweep(r, rig);
    bool sweep_same = true;
    for (int w : {4, 16}) {
        r.render.workers = w;
        const SweepResult b = sweep(r, rig);
        sweep_same = sweep_same && b.curve.samples == a.curve.samples && b.prophoto.size() == a.prophoto.size();
        for (std::size_t i = 0; sweep_same && i < a.prophoto.size(); ++i) sweep_same = b.prophoto[i].values == a.prophoto[i].values;
    }
    o.check(sweep_same, "4-length sweep: 1/4/16 workers bit-identical");
    return o;
}

Outcome frechet_criterion() {
    Outcome o;
    std::mt19937_64 rng(5150);
    std::uniform_int_distribution<int> len(1, 10);
    std::uniform_real_distribution<double> u(-5, 5);
    int mismatches = 0;
    for (int t = 0; t < 500; ++t) {
        std::vector<CurvePoint> a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
        for (auto& pt : a) pt = {u(rng), u(rng)};
        for (auto& pt : b) pt = {u(rng), u(rng)};
        if (discrete_frechet(a, b) != oracle::frechet(a, b)) ++mismatches;
    }
    o.check(mismatches == 0, fmt("500 random pairs (1-10 points): %d differ from the recursive oracle (exact)", mismatches));
    return o;
}

Outcome sweep_invariants_criterion() {
    Outcome o;
    auto& sw = sweeps();
    std::vector<CharacteristicCurve> runs;
    bool zero = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const TimedCurve& tc = sw.curve(0, seed);
        zero = zero && tc.curve.samples.front().ogcd == 0.0;
        runs.push_back(tc.curve);
    }
    o.check(zero, "ogcd(min) == 0 exactly on all 10 curves");

    // Equal albedo: white furnace (albedo 1, no glossy lobe, deep bounce cap).
    SweepRequest r = sweep_request(sw.scene().params(), {170, 2, 0}, quality_preset("measure"), 1);
    const Color white = Color::linear_display(1, 1, 1);
    r.params.fixed_albedo = r.params.adjustable_albedo = r.params.base_albedo = r.params.slit_albedo = white;
    r.params.specular_weight = 0.0;
    r.render.bounces = 1000;
    const auto t0 = Clock::now();
    const SweepResult flat = sweep(r, make_rig(make_uniform_env(32, {1, 1, 1}), 2000.0));
    std::fprintf(stderr, "  white furnace sweep: %.1f s\n", seconds_since(t0));
    double flat_max = 0;
    for (const auto& s : flat.curve.samples) flat_max = std::max(flat_max, s.ogcd);
    o.check(flat_max < 0.5, fmt("equal-albedo max ogcd %.4f (< 0.5)", flat_max));

    const double rep = mean_sample_std(runs);
    o.check(rep < 0.42, fmt("repeatability over 10 seeds: mean std %.4f (< 0.42)", rep));
    return o;
}

Outcome qualitative_criterion() {
    Outcome o;
    auto& sw = sweeps();
    const TimedCurve& c0 = sw.curve(0, 1);
    const TimedCurve& c90 = sw.curve(90, 1);
    o.extra_seconds = c0.seconds;
    const int i0 = count_inflections(c0.curve), i90 = count_inflections(c90.curve);
    o.check(i0 >= 1, fmt("theta=0 inflections %d (>= 1)", i0));
    o.check(i90 <= i0, fmt("theta=90 inflections %d (<= %d)", i90, i0));
    o.check(c0.curve.range() >= 10, fmt("theta=0 ogcd range %.2f (>= 10)", c0.curve.range()));
    o.detail += fmt(" (theta=90 range %.2f)", c90.curve.range());
    return o;
}

Outcome calibration_criterion() {
    Outcome o;
    const TimedCurve& c0 = sweeps().curve(0, 1);
    o.extra_seconds = c0.seconds;
    const CalibrationTable t = calibrate_8bit(c0.curve);
    o.check(t.r2_after >= 0.99, fmt("r2_after %.4f (>= 0.99)", t.r2_after));
    o.check(t.r2_after > t.r2_before, fmt("r2_before %.4f < r2_after", t.r2_before));
    return o;
}

Outcome interactive_criterion() {
    Outcome o;
    const SceneConfig scene = load_scene_config(kDemoScene);
    auto t0 = Clock::now();
    const LightingRig rig = build_rig(scene);
    const double rig_s = seconds_since(t0);

    t0 = Clock::now();
    const RenderOutput one = render_grass(scene, rig, RenderJob{{170, 2, 0}, 10.0, "default", 1, 0});
    const double single = seconds_since(t0);
    o.check(single <= 5.0 && one.region_prophoto.values.y > 0,
            fmt("default-preset preview + region mean %.2f s (<= 5 s; rig build %.2f s, cached by the service)", single, rig_s));

    t0 = Clock::now();
    for (double h : {150.0, 160.0, 170.0, 180.0})
        for (double theta : {0.0, 30.0, 60.0, 90.0}) render_grass(scene, rig, RenderJob{{h, 2, theta}, 10.0, "preview", 1, 0});
    const double batch = seconds_since(t0);
    o.check(batch <= 80.0, fmt("16-viewpoint preview batch %.1f s (<= 80 s)", batch));
    return o;
}

struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {"ciede2000", 1, ciede2000_criterion},
        {"color_round_trips", 1, round_trip_criterion},
        {"ccm_recovery", 5, ccm_criterion},
        {"renderer_furnace", 60, furnace_criterion},
        {"determinism", 30, determinism_criterion},
        {"discrete_frechet", 5, frechet_criterion},
        {"sweep_invariants", 15 * 60, sweep_invariants_criterion},
        {"qualitative_shape", 20 * 60, qualitative_criterion},
        {"calibration", 5 * 60, calibration_criterion},
        {"interactive_budget", 0, interactive_criterion},  // budgets checked inside
    };
    std::set<std::string> only(argv + 1, argv + argc);
    for (const auto& name : only) {
        bool known = false;
        for (const auto& c : all) known = known || name == c.name;
        if (!known) {
            std::fprintf(stderr, "unknown criterion '%s'\n", name.c_str());
            return 2;
        }
    }

    std::printf("acceptance: %u hardware threads\n", std::thread::hardware_concurrency());
    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.name)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("threw: ") + e.what();
        }
        const double secs = seconds_since(t0) + o.extra_seconds;
        std::string timing = fmt("%.2f s", secs);
        if (c.budget_s > 0) {
            const bool in_budget = secs <= c.budget_s;
            timing += fmt(" (budget %.0f s%s)", c.budget_s, in_budget ? "" : ", OVER");
            o.pass = o.pass && in_budget;
        }
        std::printf("%s  %-20s %s | %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), timing.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("acceptance: %d failed\n", failed);
    return failed == 0 ? 0 : 1;
}
