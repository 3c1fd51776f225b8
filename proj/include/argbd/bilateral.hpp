#pragma once

#include <cmath>
#include <vector>

#include "argbd/common.hpp"
#include "argbd/tensor.hpp"

namespace argbd {

// Guided bilateral filtering of the completed depth. Parameter-free: the
// window summation realizes the single fixed convolution of the refinement
// stage, so there is nothing to train.
struct BilateralConfig {
    index_t window = 9;        // odd
    double sigma_spatial = 7.0; // pixels
    double sigma_range = 5.0;   // 8-bit intensity units

    void validate() const {
        if (window < 1 || window % 2 == 0) throw ShapeError("BilateralConfig: window must be odd");
        if (sigma_spatial <= 0 || sigma_range <= 0) {
            throw ShapeError("BilateralConfig: sigmas must be > 0");
        }
    }
};

// For each pixel p, a weighted average of the depths in its window:
//   D_p = (1/W_p) * sum_q Gs(||p - q||) * Gr(||I_p - I_q||) * D_q
// where Gs and Gr are Gaussians over the spatial distance and the Euclidean
// RGB difference and W_p the sum of the weights. Normalization cancels the
// Gaussian prefactors, so they are dropped. Borders use the window's
// in-image intersection. depth: (B, 1, H, W); rgb: (B, 3, H, W) in 0..255.
template <typename T>
Tensor<T> refine(const Tensor<T>& depth, const Tensor<T>& rgb,
                 const BilateralConfig& cfg = {}, const RunContext& ctx = {}) {
    cfg.validate();
    const Shape& s = depth.shape();
    if (s.channels != 1 || s.count() == 0) {
        throw ShapeError("refine: depth must be a non-empty single-channel tensor");
    }
    const Shape& rs = rgb.shape();
    if (rs.channels != 3 || rs.batch != s.batch || rs.height != s.height || rs.width != s.width) {
        throw ShapeError("refine: rgb must be 3-channel and spatially aligned with depth");
    }
    const index_t r = cfg.window / 2;

    // spatial kernel depends only on the offset
    std::vector<double> spatial(static_cast<std::size_t>(cfg.window * cfg.window));
    for (index_t dy = -r; dy <= r; ++dy) {
        for (index_t dx = -r; dx <= r; ++dx) {
            const double d2 = static_cast<double>(dy * dy + dx * dx);
            spatial[static_cast<std::size_t>((dy + r) * cfg.window + (dx + r))] =
                std::exp(-d2 / (2.0 * cfg.sigma_spatial * cfg.sigma_spatial));
        }
    }
    const double inv_2sr2 = 1.0 / (2.0 * cfg.sigma_range * cfg.sigma_range);

    Tensor<T> out(s);
    for (index_t b = 0; b < s.batch; ++b) {
        parallel_for(s.height, ctx, [&, b](index_t lo, index_t hi) {
            for (index_t y = lo; y < hi; ++y) {
                for (index_t x = 0; x < s.width; ++x) {
                    const double cr = rgb(b, 0, y, x);
                    const double cg = rgb(b, 1, y, x);
                    const double cb = rgb(b, 2, y, x);
                    double wsum = 0.0, dsum = 0.0;
                    const index_t y0 = std::max<index_t>(0, y - r);
                    const index_t y1 = std::min<index_t>(s.height - 1, y + r);
                    const index_t x0 = std::max<index_t>(0, x - r);
                    const index_t x1 = std::min<index_t>(s.width - 1, x + r);
                    for (index_t qy = y0; qy <= y1; ++qy) {
                        const double* sp = nullptr;
                        const std::size_t srow =
                            static_cast<std::size_t>((qy - y + r) * cfg.window + (x0 - x + r));
                        sp = spatial.data() + srow;
                        const T* dq = depth.row(b, 0, qy);
                        const T* rr = rgb.row(b, 0, qy);
                        const T* rg = rgb.row(b, 1, qy);
                        const T* rb = rgb.row(b, 2, qy);
                        for (index_t qx = x0; qx <= x1; ++qx, ++sp) {
                            const double er = rr[qx] - cr;
                            const double eg = rg[qx] - cg;
                            const double eb = rb[qx] - cb;
                            const double w = *sp * std::exp(-(er * er + eg * eg + eb * eb) * inv_2sr2);
                            wsum += w;
                            dsum += w * static_cast<double>(dq[qx]);
                        }
                    }
                    out(b, 0, y, x) = static_cast<T>(dsum / wsum);
                }
            }
        });
    }
    return out;
}

} // namespace argbd
