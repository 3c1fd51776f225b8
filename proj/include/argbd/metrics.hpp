#pragma once

#include <cmath>
#include <limits>
#include <ostream>

#include "argbd/rgbd.hpp"

namespace argbd {

// Evaluation restricted to the pixels a map marks valid: per-pixel absolute
// errors, RMSE and PSNR over exactly that set. Inputs are normalized depths,
// so the PSNR peak is 1.0. Excluded pixels carry a sentinel in the error map.
struct ErrorReport {
    static constexpr double kExcluded = -1.0;

    double rmse = 0.0;
    double psnr = 0.0; // +infinity when the masked error is exactly zero
    double mean_abs = 0.0;
    double max_abs = 0.0;
    index_t evaluated = 0;
    index_t height = 0;
    index_t width = 0;
    std::vector<double> error_map; // |gt - pred| per pixel, kExcluded outside the mask
};

template <typename T>
ErrorReport masked_errors(const Tensor<T>& gt, const Tensor<T>& pred, const FilterMap& map) {
    const Shape& s = gt.shape();
    if (s != pred.shape()) throw ShapeError("masked_errors: shapes differ");
    if (s.batch != 1 || s.channels != 1) {
        throw ShapeError("masked_errors: expects (1,1,H,W) depth tensors");
    }
    if (map.height() != s.height || map.width() != s.width) {
        throw ShapeError("masked_errors: map dims do not match");
    }
    ErrorReport r;
    r.height = s.height;
    r.width = s.width;
    r.error_map.assign(static_cast<std::size_t>(s.height * s.width), ErrorReport::kExcluded);
    double sq_sum = 0.0, abs_sum = 0.0;
    for (index_t y = 0; y < s.height; ++y) {
        const T* g = gt.row(0, 0, y);
        const T* p = pred.row(0, 0, y);
        const std::uint8_t* m = map.row(y);
        for (index_t x = 0; x < s.width; ++x) {
            if (!m[x]) continue;
            const double d = std::abs(static_cast<double>(g[x]) - static_cast<double>(p[x]));
            r.error_map[static_cast<std::size_t>(y * s.width + x)] = d;
            sq_sum += d * d;
            abs_sum += d;
            r.max_abs = std::max(r.max_abs, d);
            ++r.evaluated;
        }
    }
    if (r.evaluated == 0) throw ShapeError("masked_errors: no pixels selected for evaluation");
    const double mse = sq_sum / static_cast<double>(r.evaluated);
    r.rmse = std::sqrt(mse);
    r.mean_abs = abs_sum / static_cast<double>(r.evaluated);
    r.psnr = mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
    return r;
}

// Linear blue-to-red ramp over [0, cap] (red = 255 * t, blue = 255 * (1-t),
// green = 0); errors at or beyond the cap saturate, excluded pixels render
// black.
inline RgbImage error_colormap(const ErrorReport& report, double cap = 0.1) {
    if (cap <= 0) throw ShapeError("error_colormap: cap must be > 0");
    RgbImage img;
    img.width = report.width;
    img.height = report.height;
    img.pixels.assign(static_cast<std::size_t>(report.width * report.height * 3), 0);
    for (std::size_t i = 0; i < report.error_map.size(); ++i) {
        const double e = report.error_map[i];
        if (e == ErrorReport::kExcluded) continue; // black
        const double t = std::min(1.0, e / cap);
        img.pixels[i * 3 + 0] = static_cast<std::uint8_t>(std::lround(255.0 * t));
        img.pixels[i * 3 + 1] = 0;
        img.pixels[i * 3 + 2] = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)));
    }
    return img;
}

// Line-delimited key-value record of the statistics.
inline void write_report(const ErrorReport& r, std::ostream& os) {
    os << "rmse=" << r.rmse << "\n";
    os << "psnr=" << r.psnr << "\n";
    os << "mean_abs_error=" << r.mean_abs << "\n";
    os << "max_abs_error=" << r.max_abs << "\n";
    os << "evaluated_pixels=" << r.evaluated << "\n";
}

} // namespace argbd
