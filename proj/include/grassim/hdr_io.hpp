#pragma once

// Radiance RGBE (.hdr) reading and writing.
//
// Decoding follows the common rgbe convention: a pixel (r, g, b, e) with e != 0
// is (r, g, b) * 2^(e - 136); e == 0 is black. Both flat and new-style
// run-length-encoded scanlines are read; files are written flat.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "grassim/error.hpp"
#include "grassim/lighting.hpp"
#include "grassim/text.hpp"

namespace grassim {

using Rgbe = std::array<std::uint8_t, 4>;

inline Vec3 rgbe_to_float(const Rgbe& p) {
    if (p[3] == 0) return {};
    const int exp = static_cast<int>(p[3]) - 136;
    return {std::ldexp(static_cast<double>(p[0]), exp), std::ldexp(static_cast<double>(p[1]), exp),
            std::ldexp(static_cast<double>(p[2]), exp)};
}

inline Rgbe float_to_rgbe(const Vec3& c) {
    const double v = max_component(c);
    if (!(v >= 1e-32)) return {0, 0, 0, 0};
    int e = 0;
    const double m = std::frexp(v, &e) * 256.0 / v;
    auto q = [&](double x) { return static_cast<std::uint8_t>(std::max(0.0, x * m)); };
    return {q(c.x), q(c.y), q(c.z), static_cast<std::uint8_t>(e + 128)};
}

struct RgbeImage {
    int width = 0;
    int height = 0;
    std::vector<Vec3> pixels;
};

namespace detail {

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    bool eof() const { return pos_ >= data_.size(); }
    std::uint8_t byte() {
        if (eof()) fail(ErrorCode::format, "RGBE: unexpected end of file");
        return data_[pos_++];
    }
    std::string line() {
        std::string out;
        while (true) {
            if (eof()) fail(ErrorCode::format, "RGBE: unexpected end of header");
            const char c = static_cast<char>(data_[pos_++]);
            if (c == '\n') return out;
            out.push_back(c);
        }
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline void read_scanline(ByteReader& in, int width, std::vector<Rgbe>& row) {
    row.assign(static_cast<std::size_t>(width), Rgbe{});
    const Rgbe first{in.byte(), in.byte(), in.byte(), in.byte()};
    const bool rle = width >= 8 && width < 0x8000 && first[0] == 2 && first[1] == 2 && (first[2] & 0x80) == 0;
    if (!rle) {
        row[0] = first;
        for (int x = 1; x < width; ++x) row[static_cast<std::size_t>(x)] = {in.byte(), in.byte(), in.byte(), in.byte()};
        return;
    }
    if (((first[2] << 8) | first[3]) != width) fail(ErrorCode::format, "RGBE: run-length scanline width mismatch");
    for (std::size_t ch = 0; ch < 4; ++ch) {
        int x = 0;
        while (x < width) {
            int count = in.byte();
            if (count > 128) {
                count -= 128;
                if (count == 0 || x + count > width) fail(ErrorCode::format, "RGBE: bad run length");
                const std::uint8_t v = in.byte();
                for (int k = 0; k < count; ++k) row[static_cast<std::size_t>(x++)][ch] = v;
            } else {
                if (count == 0 || x + count > width) fail(ErrorCode::format, "RGBE: bad literal length");
                for (int k = 0; k < count; ++k) row[static_cast<std::size_t>(x++)][ch] = in.byte();
            }
        }
    }
}

}  // namespace detail

inline RgbeImage decode_rgbe(std::span<const std::uint8_t> bytes) {
    detail::ByteReader in(bytes);
    const std::string magic = in.line();
    if (magic.rfind("#?", 0) != 0) fail(ErrorCode::format, "RGBE: missing #? signature");
    while (true) {
        const std::string l = in.line();
        if (l.empty()) break;
        if (l.rfind("FORMAT=", 0) == 0 && l != "FORMAT=32-bit_rle_rgbe")
            fail(ErrorCode::format, "RGBE: unsupported pixel format '" + l.substr(7) + "'");
    }
    const std::string res = in.line();
    char ya[3] = {}, xa[3] = {};
    int h = 0, w = 0;
    if (std::sscanf(res.c_str(), "%2s %d %2s %d", ya, &h, xa, &w) != 4 || std::string(ya) != "-Y" ||
        std::string(xa) != "+X")
        fail(ErrorCode::format, "RGBE: unsupported resolution line '" + res + "'");
    if (w <= 0 || h <= 0 || w > 1 << 16 || h > 1 << 16) fail(ErrorCode::format, "RGBE: bad image size");

    RgbeImage img{w, h, std::vector<Vec3>(static_cast<std::size_t>(w) * h)};
    std::vector<Rgbe> row;
    for (int y = 0; y < h; ++y) {
        detail::read_scanline(in, w, row);
        for (int x = 0; x < w; ++x)
            img.pixels[static_cast<std::size_t>(y) * w + x] = rgbe_to_float(row[static_cast<std::size_t>(x)]);
    }
    return img;
}

inline std::string encode_rgbe(const RgbeImage& img) {
    std::ostringstream out;
    out << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << img.height << " +X " << img.width << "\n";
    std::string body = out.str();
    body.reserve(body.size() + img.pixels.size() * 4);
    for (const auto& p : img.pixels) {
        const Rgbe e = float_to_rgbe(p);
        body.append(reinterpret_cast<const char*>(e.data()), 4);
    }
    return body;
}

/// Pads a non-2:1 image with black rows (too wide) or columns (too tall),
/// keeping the content centered.
inline EnvironmentMap letterbox(const RgbeImage& img) {
    const int w = std::max(img.width + (img.width & 1), 2 * img.height);
    const int h = w / 2;
    EnvironmentMap env(w, h);
    const int ox = (w - img.width) / 2, oy = (h - img.height) / 2;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            env.texel(x + ox, y + oy) = img.pixels[static_cast<std::size_t>(y) * img.width + x];
    return env;
}

/// Reads an equirectangular .hdr. Maps that are not 2:1 are letterboxed and a
/// warning is appended to `warnings` (or printed to stderr when null).
inline EnvironmentMap load_hdri(const std::string& path, std::vector<std::string>* warnings = nullptr) {
    const std::string raw = text::read_file(path);
    RgbeImage img;
    try {
        img = decode_rgbe({reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()});
    } catch (const Error& e) {
        fail(e.code(), std::string(e.what()) + " in '" + path + "'");
    }
    EnvironmentMap env;
    if (img.width != 2 * img.height) {
        const std::string msg = "HDRI '" + path + "' is " + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + ", not 2:1; letterboxing";
        if (warnings) warnings->push_back(msg);
        else std::cerr << "warning: " << msg << "\n";
        env = letterbox(img);
    } else {
        env = EnvironmentMap(img.width, img.height);
        env.texels = std::move(img.pixels);
    }
    validate(env);
    return env;
}

inline void save_hdr(const std::string& path, const RgbeImage& img) { text::write_file(path, encode_rgbe(img)); }

}  // namespace grassim
