#pragma once

// Image files: 8-bit sRGB previews and 16-bit linear debug dumps as PNG, and
// scene-linear renders as Radiance .hdr.

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "grassim/colorimetry.hpp"
#include "grassim/error.hpp"
#include "grassim/hdr_io.hpp"
#include "grassim/image.hpp"
#include "grassim/text.hpp"

namespace grassim {

struct DecodedPng {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    std::vector<std::uint16_t> samples;  // RGB, row-major
};

namespace detail {

struct PngWriteState {
    std::string out;
};

inline void png_write_cb(png_structp png, png_bytep data, png_size_t n) {
    auto* st = static_cast<PngWriteState*>(png_get_io_ptr(png));
    st->out.append(reinterpret_cast<const char*>(data), n);
}

inline void png_flush_cb(png_structp) {}

// libpng reports errors by longjmp; the message is kept for the Error thrown
// after control is back in C++ code.
struct PngMessage {
    char text[256] = "";
};

[[noreturn]] inline void png_error_cb(png_structp png, png_const_charp msg) {
    auto* m = static_cast<PngMessage*>(png_get_error_ptr(png));
    std::snprintf(m->text, sizeof m->text, "%s", msg);
    png_longjmp(png, 1);
}

inline void png_warning_cb(png_structp, png_const_charp) {}

inline std::string encode_png(int width, int height, int bit_depth, const std::vector<std::uint8_t>& rows) {
    PngMessage msg;
    PngWriteState st;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &msg, png_error_cb, png_warning_cb);
    if (!png) fail(ErrorCode::io, "PNG: cannot create writer");
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::format, std::string("PNG: ") + msg.text);
    }
    png_set_write_fn(png, &st, png_write_cb, png_flush_cb);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * 3 * static_cast<std::size_t>(bit_depth / 8);
    for (int y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(rows.data() + static_cast<std::size_t>(y) * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return std::move(st.out);
}

struct PngReadState {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;
};

inline void png_read_cb(png_structp png, png_bytep out, png_size_t n) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->pos + n > st->size) png_error(png, "truncated data");
    std::memcpy(out, st->data + st->pos, n);
    st->pos += n;
}

}  // namespace detail

/// Display-only tone map: gray-card exposed linear values encoded as sRGB
/// with clipping. The image's exposure_scale must already be applied.
inline std::string encode_preview_png(const LinearImage& img) {
    std::vector<std::uint8_t> rows;
    rows.reserve(img.pixels.size() * 3);
    for (const Vec3& p : img.pixels) {
        const EncodedSRGB e = encode_srgb(Color::linear_display(p.x, p.y, p.z));
        rows.insert(rows.end(), {e.r, e.g, e.b});
    }
    return detail::encode_png(img.width, img.height, 8, rows);
}

/// Linear values clipped to [0, 1] and quantized to 16 bits, big-endian.
inline std::string encode_linear_png16(const LinearImage& img) {
    std::vector<std::uint8_t> rows;
    rows.reserve(img.pixels.size() * 6);
    for (const Vec3& p : img.pixels)
        for (double v : {p.x, p.y, p.z}) {
            const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0) * 65535.0));
            rows.push_back(static_cast<std::uint8_t>(q >> 8));
            rows.push_back(static_cast<std::uint8_t>(q & 0xff));
        }
    return detail::encode_png(img.width, img.height, 16, rows);
}

inline DecodedPng decode_png(const std::string& bytes) {
    if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
        fail(ErrorCode::format, "PNG: bad signature");
    detail::PngMessage msg;
    detail::PngReadState st{reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()};
    DecodedPng out;
    std::vector<std::uint8_t> row;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &msg, detail::png_error_cb, detail::png_warning_cb);
    if (!png) fail(ErrorCode::io, "PNG: cannot create reader");
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::format, std::string("PNG: ") + msg.text);
    }
    png_set_read_fn(png, &st, detail::png_read_cb);
    png_read_info(png, info);
    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int depth = png_get_bit_depth(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_RGB || (depth != 8 && depth != 16)) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::format, "PNG: only 8/16-bit RGB is supported");
    }
    const std::size_t bytes_per = static_cast<std::size_t>(depth / 8);
    row.resize(static_cast<std::size_t>(width) * 3 * bytes_per);
    out.width = width;
    out.height = height;
    out.bit_depth = depth;
    out.samples.reserve(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    for (int y = 0; y < height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (std::size_t i = 0; i < row.size(); i += bytes_per)
            out.samples.push_back(bytes_per == 1 ? row[i] : static_cast<std::uint16_t>(row[i] << 8 | row[i + 1]));
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

inline RgbeImage to_rgbe_image(const LinearImage& img) {
    RgbeImage out;
    out.width = img.width;
    out.height = img.height;
    out.pixels = img.pixels;
    return out;
}

/// Scene-linear dump (Radiance RGBE). Values are stored as rendered, with the
/// exposure already applied when the image was exposed.
inline void save_linear_hdr(const std::string& path, const LinearImage& img) { save_hdr(path, to_rgbe_image(img)); }

}  // namespace grassim
