#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "argbd/filter_map.hpp"
#include "argbd/tensor.hpp"

namespace argbd {

// Pinhole camera parameters for back-projection.
struct CameraIntrinsics {
    double fx = 525.0;
    double fy = 525.0;
    double cx = 319.5;
    double cy = 239.5;
};

// Aligned color + depth frame. Depth is 16-bit millimeters with 0 marking an
// invalid measurement (structured-light convention); rgb is interleaved
// 8-bit, row major.
struct RgbdImage {
    index_t width = 0;
    index_t height = 0;
    std::vector<std::uint8_t> rgb;     // height * width * 3
    std::vector<std::uint16_t> depth;  // height * width
    CameraIntrinsics intrinsics;

    std::uint16_t depth_at(index_t y, index_t x) const {
        return depth[static_cast<std::size_t>(y * width + x)];
    }
    void set_depth(index_t y, index_t x, std::uint16_t v) {
        depth[static_cast<std::size_t>(y * width + x)] = v;
    }
    const std::uint8_t* rgb_at(index_t y, index_t x) const {
        return rgb.data() + static_cast<std::size_t>((y * width + x) * 3);
    }
    std::uint8_t* rgb_at(index_t y, index_t x) {
        return rgb.data() + static_cast<std::size_t>((y * width + x) * 3);
    }

    static RgbdImage allocate(index_t width, index_t height) {
        RgbdImage img;
        img.width = width;
        img.height = height;
        img.rgb.assign(static_cast<std::size_t>(width * height * 3), 0);
        img.depth.assign(static_cast<std::size_t>(width * height), 0);
        return img;
    }
};

// Plain 8-bit RGB raster (error maps, visualizations).
struct RgbImage {
    index_t width = 0;
    index_t height = 0;
    std::vector<std::uint8_t> pixels; // height * width * 3
};

// Validity map: depth 0 <=> invalid <=> map 0.
inline FilterMap filter_map_from_depth(const RgbdImage& img) {
    FilterMap map(img.height, img.width, 0);
    for (index_t y = 0; y < img.height; ++y) {
        for (index_t x = 0; x < img.width; ++x) {
            map.set(y, x, img.depth_at(y, x) != 0 ? 1 : 0);
        }
    }
    return map;
}

// Per-image min-max normalization of the valid depths into [0, 1]; the range
// is kept so results can be mapped back to millimeters.
struct DepthNormalization {
    double min_mm = 0.0;
    double max_mm = 0.0;

    double span() const { return std::max(1.0, max_mm - min_mm); }
};

template <typename T = float>
std::pair<Tensor<T>, DepthNormalization> normalize_depth(const RgbdImage& img) {
    DepthNormalization norm;
    norm.min_mm = 0.0;
    norm.max_mm = 0.0;
    bool any = false;
    for (std::uint16_t d : img.depth) {
        if (d == 0) continue;
        if (!any || d < norm.min_mm) norm.min_mm = d;
        if (!any || d > norm.max_mm) norm.max_mm = d;
        any = true;
    }
    if (!any) throw IoError("normalize_depth: image has no valid depth pixels");
    Tensor<T> out(1, 1, img.height, img.width);
    const double inv = 1.0 / norm.span();
    for (index_t y = 0; y < img.height; ++y) {
        T* dst = out.row(0, 0, y);
        for (index_t x = 0; x < img.width; ++x) {
            const std::uint16_t d = img.depth_at(y, x);
            dst[x] = d == 0 ? T(0) : static_cast<T>((d - norm.min_mm) * inv);
        }
    }
    return {std::move(out), norm};
}

template <typename T>
std::vector<std::uint16_t> denormalize_depth(const Tensor<T>& depth,
                                             const DepthNormalization& norm) {
    const Shape& s = depth.shape();
    std::vector<std::uint16_t> out(static_cast<std::size_t>(s.height * s.width));
    for (index_t y = 0; y < s.height; ++y) {
        const T* src = depth.row(0, 0, y);
        for (index_t x = 0; x < s.width; ++x) {
            const double unit = std::min(1.0, std::max(0.0, static_cast<double>(src[x])));
            const double mm = norm.min_mm + unit * norm.span();
            out[static_cast<std::size_t>(y * s.width + x)] =
                static_cast<std::uint16_t>(std::lround(std::min(65535.0, std::max(0.0, mm))));
        }
    }
    return out;
}

template <typename T = float>
Tensor<T> rgb_to_tensor(const RgbdImage& img) {
    Tensor<T> out(1, 3, img.height, img.width);
    for (index_t y = 0; y < img.height; ++y) {
        for (index_t x = 0; x < img.width; ++x) {
            const std::uint8_t* px = img.rgb_at(y, x);
            out(0, 0, y, x) = static_cast<T>(px[0]);
            out(0, 1, y, x) = static_cast<T>(px[1]);
            out(0, 2, y, x) = static_cast<T>(px[2]);
        }
    }
    return out;
}

namespace detail {

// Catmull-Rom cubic interpolation weight (a = -1/2).
inline double cubic_weight(double t) {
    const double a = -0.5;
    t = std::abs(t);
    if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
    if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
    return 0.0;
}

} // namespace detail

// Bicubic color up-scaling used for the RGB channel of the pipeline output.
inline std::vector<std::uint8_t> bicubic_upscale_rgb(const std::vector<std::uint8_t>& rgb,
                                                     index_t width, index_t height,
                                                     index_t factor) {
    const index_t ow = width * factor, oh = height * factor;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(ow * oh * 3));
    for (index_t oy = 0; oy < oh; ++oy) {
        const double sy = (oy + 0.5) / factor - 0.5;
        const index_t y0 = static_cast<index_t>(std::floor(sy));
        for (index_t ox = 0; ox < ow; ++ox) {
            const double sx = (ox + 0.5) / factor - 0.5;
            const index_t x0 = static_cast<index_t>(std::floor(sx));
            double acc[3] = {0.0, 0.0, 0.0};
            double wsum = 0.0;
            for (index_t dy = -1; dy <= 2; ++dy) {
                const index_t y = std::min(height - 1, std::max<index_t>(0, y0 + dy));
                const double wy = detail::cubic_weight(sy - (y0 + dy));
                for (index_t dx = -1; dx <= 2; ++dx) {
                    const index_t x = std::min(width - 1, std::max<index_t>(0, x0 + dx));
                    const double w = wy * detail::cubic_weight(sx - (x0 + dx));
                    const std::uint8_t* px = rgb.data() + static_cast<std::size_t>((y * width + x) * 3);
                    wsum += w;
                    for (int c = 0; c < 3; ++c) acc[c] += w * px[c];
                }
            }
            std::uint8_t* dst = out.data() + static_cast<std::size_t>((oy * ow + ox) * 3);
            for (int c = 0; c < 3; ++c) {
                dst[c] = static_cast<std::uint8_t>(
                    std::lround(std::min(255.0, std::max(0.0, acc[c] / wsum))));
            }
        }
    }
    return out;
}

// Back-projects every valid pixel into camera space and writes an ASCII
// polygon-format point file with per-point color. Depth converts to meters.
inline void export_pointcloud(const RgbdImage& img, const std::string& path) {
    std::vector<std::string> lines;
    lines.reserve(static_cast<std::size_t>(img.width * img.height / 2));
    char buf[128];
    for (index_t y = 0; y < img.height; ++y) {
        for (index_t x = 0; x < img.width; ++x) {
            const std::uint16_t d = img.depth_at(y, x);
            if (d == 0) continue;
            const double z = d / 1000.0;
            const double px = (x - img.intrinsics.cx) * z / img.intrinsics.fx;
            const double py = (y - img.intrinsics.cy) * z / img.intrinsics.fy;
            const std::uint8_t* c = img.rgb_at(y, x);
            std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %u %u %u", px, py, z, c[0], c[1], c[2]);
            lines.emplace_back(buf);
        }
    }
    std::ofstream os(path);
    if (!os) throw IoError("export_pointcloud: cannot open '" + path + "'");
    os << "ply\nformat ascii 1.0\n";
    os << "element vertex " << lines.size() << "\n";
    os << "property float x\nproperty float y\nproperty float z\n";
    os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    os << "end_header\n";
    for (const std::string& l : lines) os << l << "\n";
    if (!os) throw IoError("export_pointcloud: write to '" + path + "' failed");
}

// Small key=value config file with fx, fy, cx, cy entries.
inline CameraIntrinsics load_intrinsics(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("intrinsics: cannot open '" + path + "'");
    CameraIntrinsics k;
    bool saw[4] = {false, false, false, false};
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("intrinsics: malformed line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const double value = std::stod(line.substr(eq + 1));
        if (key == "fx") { k.fx = value; saw[0] = true; }
        else if (key == "fy") { k.fy = value; saw[1] = true; }
        else if (key == "cx") { k.cx = value; saw[2] = true; }
        else if (key == "cy") { k.cy = value; saw[3] = true; }
        else throw ConfigError("intrinsics: unknown key '" + key + "'");
    }
    if (!saw[0] || !saw[1] || !saw[2] || !saw[3]) {
        throw ConfigError("intrinsics: fx, fy, cx and cy are all required");
    }
    return k;
}

inline void save_intrinsics(const CameraIntrinsics& k, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("intrinsics: cannot open '" + path + "' for writing");
    os << "fx=" << k.fx << "\nfy=" << k.fy << "\ncx=" << k.cx << "\ncy=" << k.cy << "\n";
}

} // namespace argbd
