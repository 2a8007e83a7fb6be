#pragma once

// Text formats for characteristic curves, comparison reports and calibration
// tables.

#include <string>

#include <json.hpp>

#include "grassim/characteristic.hpp"
#include "grassim/text.hpp"

namespace grassim {

inline constexpr std::string_view kCurveCsvHeader = "length_mm,ogcd,L,a,b";
inline constexpr std::string_view kRgbCsvHeader = "length_mm,R,G,B";
inline constexpr std::string_view kCalibrationCsvHeader = "level,length_mm";

/// Lab columns are left empty for curves without colors.
inline std::string curve_to_csv(const CharacteristicCurve& c) {
    std::string out(kCurveCsvHeader);
    out += '\n';
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
        out += text::format_double(c.samples[i].length_mm) + ',' + text::format_double(c.samples[i].ogcd);
        if (c.labs.empty()) {
            out += ",,,\n";
            continue;
        }
        const Vec3& lab = c.labs[i].values;
        out += ',' + text::format_double(lab.x) + ',' + text::format_double(lab.y) + ',' + text::format_double(lab.z) + '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::vector<std::string_view>> csv_rows(const std::vector<std::string>& lines, std::string_view header,
                                                           std::string_view what) {
    if (lines.empty() || lines[0] != header)
        fail(ErrorCode::format, std::string(what) + ": expected header '" + std::string(header) + "'");
    const std::size_t cols = text::split(header).size();
    std::vector<std::vector<std::string_view>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto f = text::split(lines[i]);
        if (f.size() != cols)
            fail(ErrorCode::format, std::string(what) + ": line " + std::to_string(i + 1) + " has " +
                                        std::to_string(f.size()) + " fields, expected " + std::to_string(cols));
        rows.push_back(std::move(f));
    }
    if (rows.empty()) fail(ErrorCode::format, std::string(what) + ": no data rows");
    return rows;
}

}  // namespace detail

inline CharacteristicCurve curve_from_csv(const std::string& body, CurveSource source) {
    const auto lines = text::lines(body);
    const auto rows = detail::csv_rows(lines, kCurveCsvHeader, "curve CSV");
    CharacteristicCurve c;
    c.source = source;
    const bool has_lab = !rows[0][2].empty();
    for (const auto& f : rows) {
        c.samples.push_back({text::parse_double(f[0], "length_mm"), text::parse_double(f[1], "ogcd")});
        if (has_lab != !f[2].empty()) fail(ErrorCode::format, "curve CSV: Lab columns must be all present or all empty");
        if (has_lab)
            c.labs.push_back({{text::parse_double(f[2], "L"), text::parse_double(f[3], "a"), text::parse_double(f[4], "b")},
                              ColorSpace::CIELAB, WhitePoint::D50});
    }
    try {
        validate(c);
    } catch (const Error& e) {
        fail(ErrorCode::format, std::string("curve CSV: ") + e.what());
    }
    return c;
}

/// Per-length ProPhoto linear RGB measurements, optionally corrected by M,
/// turned into a curve.
inline CharacteristicCurve curve_from_rgb_csv(const std::string& body, CurveSource source,
                                              const std::optional<ColorCorrectionMatrix>& ccm = std::nullopt) {
    const auto lines = text::lines(body);
    const auto rows = detail::csv_rows(lines, kRgbCsvHeader, "RGB CSV");
    std::vector<double> lengths;
    std::vector<Color> labs;
    for (const auto& f : rows) {
        lengths.push_back(text::parse_double(f[0], "length_mm"));
        Color rgb = Color::prophoto(text::parse_double(f[1], "R"), text::parse_double(f[2], "G"),
                                    text::parse_double(f[3], "B"));
        if (!is_finite(rgb.values) || rgb.values.x < 0 || rgb.values.y < 0 || rgb.values.z < 0)
            fail(ErrorCode::format, "RGB CSV: values must be finite and non-negative");
        if (ccm) rgb = apply_ccm(*ccm, rgb);
        labs.push_back(convert(rgb, ColorSpace::CIELAB, WhitePoint::D50));
    }
    try {
        return curve_from_labs(lengths, labs, source);
    } catch (const Error& e) {
        fail(ErrorCode::format, std::string("RGB CSV: ") + e.what());
    }
}

inline std::string rgb_to_csv(std::span<const double> lengths, std::span<const Color> prophoto) {
    std::string out(kRgbCsvHeader);
    out += '\n';
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        const Vec3& v = prophoto[i].values;
        out += text::format_double(lengths[i]) + ',' + text::format_double(v.x) + ',' + text::format_double(v.y) + ',' +
               text::format_double(v.z) + '\n';
    }
    return out;
}

/// Accepts either the curve CSV or the per-length RGB CSV, picked by header.
inline CharacteristicCurve load_curve_text(const std::string& body, CurveSource source,
                                           const std::optional<ColorCorrectionMatrix>& ccm = std::nullopt) {
    const auto lines = text::lines(body);
    if (!lines.empty() && lines[0] == kRgbCsvHeader) return curve_from_rgb_csv(body, source, ccm);
    return curve_from_csv(body, source);
}

/// Samples as objects; `lab` is null for curves without colors.
inline nlohmann::json curve_to_json(const CharacteristicCurve& c) {
    auto samples = nlohmann::json::array();
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
        nlohmann::json s = {{"length_mm", c.samples[i].length_mm}, {"ogcd", c.samples[i].ogcd}, {"lab", nullptr}};
        if (!c.labs.empty()) s["lab"] = {c.labs[i].values.x, c.labs[i].values.y, c.labs[i].values.z};
        samples.push_back(std::move(s));
    }
    return {{"source", std::string(to_string(c.source))},
            {"viewpoint", {{"h_cm", c.meta.viewpoint.h_cm}, {"d_m", c.meta.viewpoint.d_m}, {"theta_deg", c.meta.viewpoint.theta_deg}}},
            {"environment", c.meta.environment},
            {"samples", std::move(samples)}};
}

inline nlohmann::json comparison_to_json(const CurveComparison& c) {
    return {{"frechet", c.frechet}, {"max_error", c.max_error}, {"max_error_length_mm", c.max_error_length_mm}};
}

inline std::string calibration_to_csv(const CalibrationTable& t) {
    std::string out(kCalibrationCsvHeader);
    out += '\n';
    for (int k = 0; k < kLevels; ++k) out += std::to_string(k) + ',' + text::format_double(t.length_mm[static_cast<std::size_t>(k)]) + '\n';
    return out;
}

inline nlohmann::json calibration_to_json(const CalibrationTable& t) {
    return {{"r2_before", t.r2_before},
            {"r2_after", t.r2_after},
            {"length_mm", std::vector<double>(t.length_mm.begin(), t.length_mm.end())}};
}

}  // namespace grassim
