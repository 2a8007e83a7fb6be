#pragma once

// Grass color characteristic: OGCD (CIEDE2000 from the shortest-length color)
// as a function of green grass length, plus curve fitting, comparison and
// 8-bit calibration.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grassim/camera.hpp"
#include "grassim/ccm.hpp"
#include "grassim/colorimetry.hpp"
#include "grassim/error.hpp"
#include "grassim/lighting.hpp"
#include "grassim/parallel.hpp"
#include "grassim/renderer.hpp"
#include "grassim/scene.hpp"
#include "grassim/text.hpp"

namespace grassim {

enum class CurveSource { Real, Virtual };

inline std::string_view to_string(CurveSource s) { return s == CurveSource::Real ? "real" : "virtual"; }

struct CurveSample {
    double length_mm = 0.0;
    double ogcd = 0.0;
    friend bool operator==(const CurveSample&, const CurveSample&) = default;
};

struct CurveMeta {
    Viewpoint viewpoint;
    std::string environment;
};

struct CharacteristicCurve {
    std::vector<CurveSample> samples;
    std::vector<Color> labs;  // CIELAB (D50), parallel to samples; may be empty for external curves
    CurveSource source = CurveSource::Virtual;
    CurveMeta meta;

    std::vector<double> lengths() const {
        std::vector<double> out;
        out.reserve(samples.size());
        for (const auto& s : samples) out.push_back(s.length_mm);
        return out;
    }
    double range() const {
        double hi = 0.0;
        for (const auto& s : samples) hi = std::max(hi, s.ogcd);
        return hi;
    }
};

/// Sample checks shared by every curve: finite, non-negative, strictly
/// increasing lengths.
inline void validate_samples(const CharacteristicCurve& c) {
    if (c.samples.empty()) fail(ErrorCode::invalid_argument, "curve has no samples");
    if (!c.labs.empty() && c.labs.size() != c.samples.size())
        fail(ErrorCode::invalid_argument, "curve Lab list does not match its samples");
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
        const auto& s = c.samples[i];
        if (!std::isfinite(s.length_mm) || !std::isfinite(s.ogcd))
            fail(ErrorCode::invalid_argument, "curve sample " + std::to_string(i) + " is not finite");
        if (s.ogcd < 0) fail(ErrorCode::invalid_argument, "curve sample " + std::to_string(i) + " has negative ogcd");
        if (i > 0 && !(s.length_mm > c.samples[i - 1].length_mm))
            fail(ErrorCode::invalid_argument, "curve lengths must be strictly increasing");
    }
}

inline void validate(const CharacteristicCurve& c) {
    validate_samples(c);
    if (c.samples.front().ogcd != 0.0) fail(ErrorCode::invalid_argument, "first curve sample must have ogcd 0");
}

/// Builds a curve from per-length CIELAB colors: ogcd(x) = dE00(lab(first), lab(x)).
inline CharacteristicCurve curve_from_labs(std::span<const double> lengths, std::span<const Color> labs,
                                           CurveSource source = CurveSource::Virtual) {
    if (lengths.size() != labs.size()) fail(ErrorCode::invalid_argument, "lengths and colors differ in count");
    CharacteristicCurve c;
    c.source = source;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        c.samples.push_back({lengths[i], i == 0 ? 0.0 : ciede2000(labs[0], labs[i])});
        c.labs.push_back(labs[i]);
    }
    validate(c);
    return c;
}

/// Lengths lo, lo + step, ... up to hi (hi included when it lands on the grid).
inline std::vector<double> length_grid(double lo, double hi, double step) {
    if (!(step > 0) || !(hi >= lo)) fail(ErrorCode::invalid_argument, "invalid length grid");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= n; ++k) out.push_back(lo + static_cast<double>(k) * step);
    return out;
}

/// 0, 1, ..., 20 mm for the default adjustable range.
inline std::vector<double> default_lengths(const GrassPixelParams& p) { return length_grid(p.adjustable_min, p.adjustable_max, 1.0); }

// ---------------------------------------------------------------- sweep

struct SweepRequest {
    GrassPixelParams params;
    Viewpoint viewpoint;
    std::vector<double> lengths;
    std::optional<ColorCorrectionMatrix> ccm;
    RenderSettings render;  // spp, seed, bounces, workers; crop is chosen per viewpoint
    int width = 600;
    int height = 400;
    double fill = 0.8;
    std::string environment;
};

inline SweepRequest sweep_request(const GrassPixelParams& p, const Viewpoint& vp, const QualityPreset& q,
                                  std::uint64_t seed = 1) {
    SweepRequest r;
    r.params = p;
    r.viewpoint = vp;
    r.lengths = default_lengths(p);
    r.render.spp = q.spp;
    r.render.bounces = q.bounces;
    r.render.seed = seed;
    r.width = q.width;
    r.height = q.height;
    return r;
}

struct SweepControl {
    const std::atomic<bool>* cancel = nullptr;
    /// Called with (completed lengths, total) after each length finishes.
    std::function<void(std::size_t, std::size_t)> progress;
};

/// Per-length measurement: region mean in ProPhoto linear RGB (after M when
/// given) and its CIELAB value relative to D50.
struct LengthMeasurement {
    Color prophoto;
    Color lab;
};

inline Camera sweep_camera(const SweepRequest& r) {
    return viewpoint_to_camera(r.viewpoint, {grass_pixel_bounds(r.params), r.fill, r.width, r.height});
}

inline LengthMeasurement measure_length(const SweepRequest& r, const LightingRig& rig, const Camera& cam, double length,
                                        int workers) {
    const SceneGeometry geo = build_grass_pixel(r.params, length);
    const Quad quad = project_pixel_corners(geo, cam);
    RenderSettings s = r.render;
    s.workers = workers;
    s.crop = bounding_rect(quad, cam.width, cam.height);
    const LinearImage img = expose_gray_card(render(geo, rig, cam, s), rig);
    Color rgb = convert(average_region(img, quad), ColorSpace::ProPhotoLinearRGB);
    if (r.ccm) rgb = apply_ccm(*r.ccm, rgb);
    return {rgb, convert(rgb, ColorSpace::CIELAB, WhitePoint::D50)};
}

/// Renders every length and computes the characteristic. Lengths run in
/// parallel; each render is deterministic, so the result does not depend on
/// the worker count. On cancellation the longest completed prefix is returned
/// (possibly empty) and `cancelled` is set.
struct SweepResult {
    CharacteristicCurve curve;
    std::vector<Color> prophoto;
    bool cancelled = false;
};

inline SweepResult sweep(const SweepRequest& r, const LightingRig& rig, const SweepControl& control = {}) {
    validate(r.params);
    validate(r.viewpoint);
    if (r.lengths.empty()) fail(ErrorCode::invalid_argument, "sweep needs at least one length");
    for (std::size_t i = 0; i < r.lengths.size(); ++i) {
        const double x = r.lengths[i];
        if (!(x >= r.params.adjustable_min && x <= r.params.adjustable_max))
            fail(ErrorCode::out_of_range, "length out of range: " + text::format_double(x) + " mm");
        if (i > 0 && !(x > r.lengths[i - 1])) fail(ErrorCode::invalid_argument, "sweep lengths must be strictly increasing");
    }
    const Camera cam = sweep_camera(r);
    const std::size_t n = r.lengths.size();
    const int total = r.render.workers > 0 ? r.render.workers : default_workers();
    const int outer = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(total), n));
    const int inner = std::max(1, total / outer);

    std::vector<std::optional<LengthMeasurement>> got(n);
    std::mutex progress_mutex;
    std::size_t done = 0;
    parallel_for(n, outer, [&](std::size_t i) {
        if (control.cancel && control.cancel->load()) return;
        got[i] = measure_length(r, rig, cam, r.lengths[i], inner);
        if (control.progress) {
            std::lock_guard lock(progress_mutex);
            control.progress(++done, n);
        }
    });

    SweepResult out;
    std::vector<double> lengths;
    std::vector<Color> labs;
    for (std::size_t i = 0; i < n && got[i]; ++i) {
        lengths.push_back(r.lengths[i]);
        labs.push_back(got[i]->lab);
        out.prophoto.push_back(got[i]->prophoto);
    }
    out.cancelled = lengths.size() < n;
    if (!lengths.empty()) out.curve = curve_from_labs(lengths, labs);
    out.curve.source = CurveSource::Virtual;
    out.curve.meta = {r.viewpoint, r.environment};
    return out;
}

// ---------------------------------------------------------------- fitting

/// Pool-adjacent-violators: least-squares non-decreasing fit with unit weights.
inline std::vector<double> isotonic(std::span<const double> y) {
    struct Block {
        double sum;
        std::size_t count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    for (double v : y) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
            const Block b = blocks.back();
            blocks.pop_back();
            blocks.back().sum += b.sum;
            blocks.back().count += b.count;
        }
    }
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean());
    return out;
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
/// Constant extension outside the knot range.
class MonotoneCurve {
public:
    MonotoneCurve(std::vector<double> xs, std::vector<double> ys) : xs_(std::move(xs)), ys_(std::move(ys)) {
        const std::size_t n = xs_.size();
        d_.assign(n, 0.0);
        if (n < 2) return;
        std::vector<double> delta(n - 1), h(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = xs_[i + 1] - xs_[i];
            delta[i] = (ys_[i + 1] - ys_[i]) / h[i];
        }
        if (n == 2) {
            d_[0] = d_[1] = delta[0];
            return;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] <= 0) continue;
            const double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
        d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }

    double operator()(double x) const {
        if (x <= xs_.front()) return ys_.front();
        if (x >= xs_.back()) return ys_.back();
        const std::size_t i = segment(x);
        const double h = xs_[i + 1] - xs_[i];
        const double t = (x - xs_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * ys_[i] + (t3 - 2 * t2 + t) * h * d_[i] + (-2 * t3 + 3 * t2) * ys_[i + 1] +
               (t3 - t2) * h * d_[i + 1];
    }

    /// Smallest x in the knot range with f(x) >= y.
    double inverse(double y) const {
        if (y <= ys_.front()) return xs_.front();
        if (y > ys_.back()) fail(ErrorCode::out_of_range, "value above the curve range");
        std::size_t i = 0;
        while (ys_[i + 1] < y) ++i;
        // Strictly below y inside a monotone segment, so a knot hit is exact.
        if (ys_[i + 1] == y) return xs_[i + 1];
        double lo = xs_[i], hi = xs_[i + 1];
        for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            ((*this)(mid) >= y ? hi : lo) = mid;
        }
        return hi;
    }

    double min_x() const { return xs_.front(); }
    double max_x() const { return xs_.back(); }
    double max_y() const { return ys_.back(); }
    const std::vector<double>& knots_x() const { return xs_; }
    const std::vector<double>& knots_y() const { return ys_; }

private:
    static double end_slope(double h0, double h1, double d0, double d1) {
        double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0) return 0.0;
        if (d0 * d1 <= 0 && std::abs(d) > 3 * std::abs(d0)) d = 3 * d0;
        return d;
    }

    std::size_t segment(double x) const {
        const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        return static_cast<std::size_t>(it - xs_.begin()) - 1;
    }

    std::vector<double> xs_, ys_, d_;
};

/// Isotonic regression of ogcd over length, then monotone cubic interpolation
/// through the isotonic values.
inline MonotoneCurve fit_monotone(const CharacteristicCurve& c) {
    if (c.samples.size() < 3) fail(ErrorCode::invalid_argument, "curve fitting needs at least 3 samples");
    validate_samples(c);
    std::vector<double> xs, ys;
    for (const auto& s : c.samples) xs.push_back(s.length_mm), ys.push_back(s.ogcd);
    return MonotoneCurve(std::move(xs), isotonic(ys));
}

// ---------------------------------------------------------------- comparison

inline constexpr double kCompareGridStep = 0.5;  // mm

/// lo, every multiple of `step` strictly inside (lo, hi), then hi.
inline std::vector<double> aligned_grid(double lo, double hi, double step = kCompareGridStep) {
    std::vector<double> out{lo};
    for (double k = std::floor(lo / step) + 1; k * step < hi; ++k)
        if (k * step > lo) out.push_back(k * step);
    if (hi > lo) out.push_back(hi);
    return out;
}

struct CurvePoint {
    double x;
    double y;
};

/// Discrete Frechet distance by dynamic programming.
inline double discrete_frechet(std::span<const CurvePoint> a, std::span<const CurvePoint> b) {
    if (a.empty() || b.empty()) fail(ErrorCode::invalid_argument, "Frechet distance of an empty curve");
    const std::size_t m = b.size();
    std::vector<double> prev(m), cur(m);
    auto dist = [](CurvePoint p, CurvePoint q) { return std::hypot(p.x - q.x, p.y - q.y); };
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double d = dist(a[i], b[j]);
            if (i == 0 && j == 0) cur[j] = d;
            else if (i == 0) cur[j] = std::max(cur[j - 1], d);
            else if (j == 0) cur[j] = std::max(prev[0], d);
            else cur[j] = std::max(std::min({prev[j], prev[j - 1], cur[j - 1]}), d);
        }
        std::swap(prev, cur);
    }
    return prev[m - 1];
}

namespace detail {

/// Evaluator for a curve: the monotone fit with >= 3 samples, otherwise
/// linear interpolation of the raw samples.
inline std::function<double(double)> curve_function(const CharacteristicCurve& c) {
    if (c.samples.size() >= 3) return [f = fit_monotone(c)](double x) { return f(x); };
    return [s = c.samples](double x) {
        if (s.size() == 1 || x <= s.front().length_mm) return s.front().ogcd;
        if (x >= s.back().length_mm) return s.back().ogcd;
        const double t = (x - s[0].length_mm) / (s[1].length_mm - s[0].length_mm);
        return s[0].ogcd + t * (s[1].ogcd - s[0].ogcd);
    };
}

inline std::vector<CurvePoint> resample(const CharacteristicCurve& c) {
    std::vector<CurvePoint> out;
    if (c.samples.size() < 3) {
        for (const auto& s : c.samples) out.push_back({s.length_mm, s.ogcd});
        return out;
    }
    const MonotoneCurve f = fit_monotone(c);
    for (double x : aligned_grid(c.samples.front().length_mm, c.samples.back().length_mm)) out.push_back({x, f(x)});
    return out;
}

}  // namespace detail

/// Frechet distance between fitted curves resampled on a 0.5 mm grid, with
/// points embedded as (length mm, ogcd). Curves with fewer than 3 samples use
/// their raw points.
inline double frechet_distance(const CharacteristicCurve& a, const CharacteristicCurve& b) {
    if (a.samples.empty() || b.samples.empty()) fail(ErrorCode::invalid_argument, "Frechet distance of an empty curve");
    const auto pa = detail::resample(a), pb = detail::resample(b);
    return discrete_frechet(pa, pb);
}

struct MaxError {
    double error = 0.0;
    double length_mm = 0.0;
};

/// Largest |a - b| over the 0.5 mm grid of the overlapping length range;
/// ties go to the smallest length.
inline MaxError max_ogcd_error(const CharacteristicCurve& a, const CharacteristicCurve& b) {
    if (a.samples.empty() || b.samples.empty()) fail(ErrorCode::invalid_argument, "cannot compare an empty curve");
    const double lo = std::max(a.samples.front().length_mm, b.samples.front().length_mm);
    const double hi = std::min(a.samples.back().length_mm, b.samples.back().length_mm);
    if (lo > hi) fail(ErrorCode::invalid_argument, "curves have disjoint length ranges");
    const auto fa = detail::curve_function(a), fb = detail::curve_function(b);
    MaxError best{-1.0, lo};
    for (double x : aligned_grid(lo, hi)) {
        const double e = std::abs(fa(x) - fb(x));
        if (e > best.error) best = {e, x};
    }
    return best;
}

struct CurveComparison {
    double frechet = 0.0;
    double max_error = 0.0;
    double max_error_length_mm = 0.0;
};

inline CurveComparison compare_curves(const CharacteristicCurve& a, const CharacteristicCurve& b) {
    const MaxError m = max_ogcd_error(a, b);
    return {frechet_distance(a, b), m.error, m.length_mm};
}

// ---------------------------------------------------------------- calibration

inline constexpr int kLevels = 256;

struct CalibrationTable {
    std::array<double, kLevels> length_mm{};
    double r2_before = 0.0;
    double r2_after = 0.0;
};

/// Coefficient of determination of the least-squares line through (x, y).
inline double r_squared(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (syy == 0.0) return 1.0;
    if (sxx == 0.0) return 0.0;
    return sxy * sxy / (sxx * syy);
}

/// Level k targets ogcd (k / 255) * max and maps to the smallest length whose
/// fitted ogcd reaches it. r2_before uses uniformly spaced lengths per level.
inline CalibrationTable calibrate_8bit(const MonotoneCurve& f) {
    const double top = f.max_y();
    if (!(top > 0.0)) fail(ErrorCode::invalid_argument, "curve has zero ogcd range");
    CalibrationTable t;
    std::vector<double> level(kLevels), before(kLevels), after(kLevels);
    for (int k = 0; k < kLevels; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        level[ku] = k;
        const double target = std::min(top, top * k / (kLevels - 1.0));
        t.length_mm[ku] = f.inverse(target);
        before[ku] = f(f.min_x() + (f.max_x() - f.min_x()) * k / (kLevels - 1.0));
        after[ku] = f(t.length_mm[ku]);
    }
    t.r2_before = r_squared(level, before);
    t.r2_after = r_squared(level, after);
    return t;
}

inline CalibrationTable calibrate_8bit(const CharacteristicCurve& c) { return calibrate_8bit(fit_monotone(c)); }

// ---------------------------------------------------------------- statistics

inline double mean_sample_std(std::span<const CharacteristicCurve> runs) {
    if (runs.size() < 2) fail(ErrorCode::invalid_argument, "repeatability needs at least 2 trials");
    const std::size_t n = runs[0].samples.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (const auto& r : runs) mean += r.samples.at(i).ogcd;
        mean /= static_cast<double>(runs.size());
        double ss = 0.0;
        for (const auto& r : runs) ss += (r.samples[i].ogcd - mean) * (r.samples[i].ogcd - mean);
        total += std::sqrt(ss / static_cast<double>(runs.size() - 1));
    }
    return total / static_cast<double>(n);
}

/// Mean over lengths of the sample standard deviation of ogcd across sweeps
/// that differ only in seed.
inline double repeatability(const SweepRequest& base, const LightingRig& rig, std::span<const std::uint64_t> seeds) {
    if (seeds.size() < 2) fail(ErrorCode::invalid_argument, "repeatability needs at least 2 trials");
    std::vector<CharacteristicCurve> runs;
    for (auto seed : seeds) {
        SweepRequest r = base;
        r.render.seed = seed;
        runs.push_back(sweep(r, rig).curve);
    }
    return mean_sample_std(runs);
}

// ---------------------------------------------------------------- shape

inline constexpr double kInflectionHysteresis = 0.25;  // fraction of the mean slope

/// Number of inflections of the fitted curve. Slopes between consecutive
/// sample lengths form a sequence whose local extrema are the inflections; an
/// extremum counts once the slope has moved away from it by at least
/// `hysteresis` times the mean slope, so sampling noise and small wiggles are
/// ignored.
inline int count_inflections(const CharacteristicCurve& c, double hysteresis = kInflectionHysteresis) {
    const MonotoneCurve f = fit_monotone(c);
    const auto xs = c.lengths();
    const double mean = (f(xs.back()) - f(xs.front())) / (xs.back() - xs.front());
    if (!(mean > 0.0)) return 0;
    const double h = hysteresis * mean;
    std::vector<double> slope;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) slope.push_back((f(xs[i + 1]) - f(xs[i])) / (xs[i + 1] - xs[i]));

    int count = 0, dir = 0;
    double hi = slope[0], lo = slope[0];
    for (std::size_t i = 1; i < slope.size(); ++i) {
        const double s = slope[i];
        if (dir == 0) {
            hi = std::max(hi, s);
            lo = std::min(lo, s);
            if (s - lo >= h) dir = 1, hi = s;
            else if (hi - s >= h) dir = -1, lo = s;
        } else if (dir > 0) {
            if (s > hi) hi = s;
            else if (hi - s >= h) ++count, dir = -1, lo = s;
        } else {
            if (s < lo) lo = s;
            else if (s - lo >= h) ++count, dir = 1, hi = s;
        }
    }
    return count;
}

}  // namespace grassim
