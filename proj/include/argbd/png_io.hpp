#pragma once

#include <cstdio>
#include <memory>

#include <png.h>

#include "argbd/rgbd.hpp"

namespace argbd {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngReader() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) info = png_create_info_struct(png);
        if (!png || !info) throw IoError("png: failed to allocate read structs");
    }
    ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngWriter() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) info = png_create_info_struct(png);
        if (!png || !info) throw IoError("png: failed to allocate write structs");
    }
    ~PngWriter() { png_destroy_write_struct(&png, &info); }
    PngWriter(const PngWriter&) = delete;
    PngWriter& operator=(const PngWriter&) = delete;
};

} // namespace detail

// 8-bit RGB image. Palette, gray and alpha variants are expanded; 16-bit
// color input is rejected.
inline RgbImage load_rgb_png(const std::string& path) {
    detail::FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("png: cannot open '" + path + "'");
    detail::PngReader r;
    if (setjmp(png_jmpbuf(r.png))) throw IoError("png: failed to decode '" + path + "'");
    png_init_io(r.png, f.get());
    png_read_info(r.png, r.info);

    const png_byte depth = png_get_bit_depth(r.png, r.info);
    const png_byte color = png_get_color_type(r.png, r.info);
    if (depth == 16) {
        throw IoError("png: '" + path + "' has 16-bit samples, expected an 8-bit color image");
    }
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(r.png);
    }
    if (depth < 8) png_set_packing(r.png);
    png_set_strip_alpha(r.png);
    png_read_update_info(r.png, r.info);

    RgbImage img;
    img.width = png_get_image_width(r.png, r.info);
    img.height = png_get_image_height(r.png, r.info);
    if (png_get_rowbytes(r.png, r.info) != static_cast<png_size_t>(img.width * 3)) {
        throw IoError("png: '" + path + "' did not decode to 8-bit RGB");
    }
    img.pixels.resize(static_cast<std::size_t>(img.width * img.height * 3));
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (index_t y = 0; y < img.height; ++y) {
        rows[static_cast<std::size_t>(y)] = img.pixels.data() + y * img.width * 3;
    }
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return img;
}

inline void save_rgb_png(const RgbImage& img, const std::string& path) {
    detail::FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("png: cannot open '" + path + "' for writing");
    detail::PngWriter w;
    if (setjmp(png_jmpbuf(w.png))) throw IoError("png: failed to encode '" + path + "'");
    png_init_io(w.png, f.get());
    png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (index_t y = 0; y < img.height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(img.pixels.data() + y * img.width * 3);
    }
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);
}

// 16-bit single-channel depth image in millimeters; the exact sample values
// round-trip. Anything but 16-bit grayscale is rejected.
inline std::pair<std::vector<std::uint16_t>, std::pair<index_t, index_t>> load_depth_png(
    const std::string& path) {
    detail::FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("png: cannot open '" + path + "'");
    detail::PngReader r;
    if (setjmp(png_jmpbuf(r.png))) throw IoError("png: failed to decode '" + path + "'");
    png_init_io(r.png, f.get());
    png_read_info(r.png, r.info);

    const png_byte depth = png_get_bit_depth(r.png, r.info);
    const png_byte color = png_get_color_type(r.png, r.info);
    if (color != PNG_COLOR_TYPE_GRAY || depth != 16) {
        throw IoError("png: '" + path + "' is not a 16-bit grayscale depth image (bit depth " +
                      std::to_string(depth) + ")");
    }
    if (png_get_channels(r.png, r.info) != 1) {
        throw IoError("png: '" + path + "' must be single-channel");
    }
    png_set_swap(r.png); // stream is big-endian
    png_read_update_info(r.png, r.info);

    const index_t width = png_get_image_width(r.png, r.info);
    const index_t height = png_get_image_height(r.png, r.info);
    std::vector<std::uint16_t> data(static_cast<std::size_t>(width * height));
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (index_t y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            reinterpret_cast<png_bytep>(data.data() + y * width);
    }
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return {std::move(data), {width, height}};
}

inline void save_depth_png(const std::vector<std::uint16_t>& depth, index_t width, index_t height,
                           const std::string& path) {
    if (static_cast<index_t>(depth.size()) != width * height) {
        throw ShapeError("save_depth_png: buffer does not match dims");
    }
    detail::FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("png: cannot open '" + path + "' for writing");
    detail::PngWriter w;
    if (setjmp(png_jmpbuf(w.png))) throw IoError("png: failed to encode '" + path + "'");
    png_init_io(w.png, f.get());
    png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    png_set_swap(w.png);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (index_t y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(reinterpret_cast<const png_byte*>(depth.data() + y * width));
    }
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);
}

// Loads an aligned RGB + depth pair; the two must agree on dimensions.
inline RgbdImage load_rgbd(const std::string& rgb_path, const std::string& depth_path) {
    RgbImage rgb = load_rgb_png(rgb_path);
    auto [depth, dims] = load_depth_png(depth_path);
    if (dims.first != rgb.width || dims.second != rgb.height) {
        throw IoError("load_rgbd: rgb and depth dimensions differ");
    }
    RgbdImage img;
    img.width = rgb.width;
    img.height = rgb.height;
    img.rgb = std::move(rgb.pixels);
    img.depth = std::move(depth);
    return img;
}

inline void save_rgbd(const RgbdImage& img, const std::string& rgb_path,
                      const std::string& depth_path) {
    RgbImage rgb{img.width, img.height, img.rgb};
    save_rgb_png(rgb, rgb_path);
    save_depth_png(img.depth, img.width, img.height, depth_path);
}

} // namespace argbd
