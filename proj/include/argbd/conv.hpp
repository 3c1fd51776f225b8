#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "argbd/common.hpp"
#include "argbd/filter_map.hpp"
#include "argbd/simd.hpp"
#include "argbd/tensor.hpp"

namespace argbd {

// Divisor guard for windows whose validity count is zero.
inline constexpr double kConvEpsilon = 1e-5;

// Learnable parameters of one convolution layer. The kernel is odd so every
// window has a center pixel; "same" spatial semantics follow from a virtual
// zero border of kernel/2 whose pixels are always treated as invalid.
template <typename T>
struct ConvParams {
    Tensor<T> weights;   // (out_ch, in_ch, k, k)
    std::vector<T> bias; // out_ch
    index_t stride = 1;

    index_t kernel() const { return weights.shape().height; }
    index_t in_channels() const { return weights.shape().channels; }
    index_t out_channels() const { return weights.shape().batch; }

    void validate() const {
        const Shape& w = weights.shape();
        if (w.height != w.width || w.height % 2 == 0 || w.height < 1) {
            throw ShapeError("ConvParams: kernel must be odd and square, got " + w.str());
        }
        if (static_cast<index_t>(bias.size()) != w.batch) {
            throw ShapeError("ConvParams: bias size does not match out_channels");
        }
        if (stride < 1) throw ShapeError("ConvParams: stride must be >= 1");
    }
};

// Decides whether a neighboring depth sample may enter a convolution window.
// The comparison G(|dD|) vs tau reduces to a threshold on |dD| because G is
// strictly decreasing in |dD|; the Gaussian prefactor 1/(sigma*sqrt(2*pi))
// is part of G and therefore shifts the threshold.
//
// The printed inequality of the source formula admits pixels whose depth
// DIFFERS from the center (G < tau), which contradicts the stated goal of
// not mixing across depth boundaries. Both readings are kept: the default
// keeps similar pixels, literal_eq applies the inequality as printed.
enum class GateOrientation { similarity_keeping, literal_eq };

struct DepthGateConfig {
    double sigma = 0.0028; // normalized-depth units
    double tau = 1.0;
    GateOrientation orientation = GateOrientation::similarity_keeping;

    void validate() const {
        if (sigma <= 0 || tau <= 0) throw ShapeError("DepthGateConfig: sigma and tau must be > 0");
    }

    // Largest |dD| with G(|dD|) >= tau, or a negative value when even
    // G(0) < tau (no difference is similar enough).
    double difference_threshold() const {
        const double peak = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
        if (tau > peak) return -1.0;
        return sigma * std::sqrt(2.0 * std::log(peak / tau));
    }
};

// Binary gate between a window's center depth and one neighbor, both already
// normalized to [0, 1].
inline std::uint8_t depth_gate(double center_depth, double neighbor_depth,
                               const DepthGateConfig& cfg) {
    const double diff = std::abs(neighbor_depth - center_depth);
    const bool similar = diff <= cfg.difference_threshold();
    if (cfg.orientation == GateOrientation::similarity_keeping) return similar ? 1 : 0;
    return similar ? 0 : 1;
}

// Per-call byproducts kept for the backward pass. inv_m holds 1/M per output
// pixel; the input copy and gating source allow the backward contractions to
// re-derive every mask bit.
template <typename T>
struct ConvCache {
    Tensor<T> input;      // x as given to the forward pass
    FilterMap map;        // region-adaptive gating map (empty for depth-adaptive)
    Tensor<T> guide;      // depth-adaptive guide (empty for region-adaptive)
    DepthGateConfig gate_cfg;
    std::vector<T> inv_m; // 1/(eps + valid count), batch * out_h * out_w
    Shape out_shape;
};

template <typename T>
struct ConvGrads {
    Tensor<T> x;
    Tensor<T> w;
    std::vector<T> b;
};

namespace detail {

inline index_t conv_out_dim(index_t dim, index_t stride) { return (dim + stride - 1) / stride; }

// Precomputed gates of a depth-adaptive convolution: for every window center
// one bit per kernel offset (dy * k + dx), out-of-image offsets cleared.
class GateTable {
public:
    template <typename T>
    GateTable(const Tensor<T>& guide, index_t kernel, const DepthGateConfig& cfg, index_t batch) {
        if (kernel * kernel > 64) throw ShapeError("GateTable: kernel too large");
        const Shape& s = guide.shape();
        height_ = s.height;
        width_ = s.width;
        kernel_ = kernel;
        bits_.assign(static_cast<std::size_t>(batch * height_ * width_), 0);
        counts_.assign(bits_.size(), 0);
        const index_t r = kernel / 2;
        const double thr = cfg.difference_threshold();
        const bool keep_similar = cfg.orientation == GateOrientation::similarity_keeping;
        for (index_t b = 0; b < batch; ++b) {
            for (index_t cy = 0; cy < height_; ++cy) {
                for (index_t cx = 0; cx < width_; ++cx) {
                    const double center = static_cast<double>(guide(b, 0, cy, cx));
                    std::uint64_t bits = 0;
                    std::uint8_t count = 0;
                    for (index_t dy = 0; dy < kernel; ++dy) {
                        const index_t y = cy + dy - r;
                        if (y < 0 || y >= height_) continue;
                        for (index_t dx = 0; dx < kernel; ++dx) {
                            const index_t x = cx + dx - r;
                            if (x < 0 || x >= width_) continue;
                            const double diff =
                                std::abs(static_cast<double>(guide(b, 0, y, x)) - center);
                            if ((diff <= thr) == keep_similar) {
                                bits |= std::uint64_t(1) << (dy * kernel + dx);
                                ++count;
                            }
                        }
                    }
                    const std::size_t at = static_cast<std::size_t>((b * height_ + cy) * width_ + cx);
                    bits_[at] = bits;
                    counts_[at] = count;
                }
            }
        }
    }

    bool gate(index_t b, index_t cy, index_t cx, index_t dy, index_t dx) const {
        const std::uint64_t bits = bits_[static_cast<std::size_t>((b * height_ + cy) * width_ + cx)];
        return (bits >> (dy * kernel_ + dx)) & 1;
    }

    index_t valid_count(index_t b, index_t cy, index_t cx) const {
        return counts_[static_cast<std::size_t>((b * height_ + cy) * width_ + cx)];
    }

private:
    index_t height_ = 0, width_ = 0, kernel_ = 0;
    std::vector<std::uint64_t> bits_;
    std::vector<std::uint8_t> counts_;
};

// mask value per output column for a region-adaptive layer: the filter map
// sample under the kernel offset, 0 outside the image.
template <typename T>
inline void region_mask_row(const FilterMap& map, index_t iy, index_t dx, index_t r,
                            index_t stride, index_t ow, T* mask) {
    const std::uint8_t* src = map.row(iy);
    for (index_t ox = 0; ox < ow; ++ox) {
        const index_t ix = ox * stride + dx - r;
        mask[ox] = (ix >= 0 && ix < map.width() && src[ix]) ? T(1) : T(0);
    }
}

template <typename T>
inline void depth_mask_row(const GateTable& gates, index_t b, index_t oy, index_t dy,
                           index_t dx, index_t ow, T* mask) {
    for (index_t ox = 0; ox < ow; ++ox) {
        mask[ox] = gates.gate(b, oy, ox, dy, dx) ? T(1) : T(0);
    }
}

// Gathers one input row under a kernel offset into channel-major scratch:
// rows[c][ox] = mask[ox] * x(b, c, iy, ox * stride + dx - r).
template <typename T>
inline void gather_rows(const Tensor<T>& x, index_t b, index_t iy, index_t dx, index_t r,
                        index_t stride, index_t ow, const T* mask, T* rows) {
    const Shape& s = x.shape();
    for (index_t c = 0; c < s.channels; ++c) {
        const T* src = x.row(b, c, iy);
        T* dst = rows + c * ow;
        for (index_t ox = 0; ox < ow; ++ox) {
            const index_t ix = ox * stride + dx - r;
            dst[ox] = (ix >= 0 && ix < s.width) ? src[ix] * mask[ox] : T(0);
        }
    }
}

// Transposes the k input rows feeding one output row into channel-innermost
// scratch: win[dy][ix][c] = x(b, c, oy*stride + dy - r, ix). Out-of-image
// rows are skipped by the caller via the mask. Used when rows are short and
// channels are long, so the contraction runs over contiguous channels.
template <typename T>
inline void transpose_window(const Tensor<T>& x, index_t b, index_t oy, index_t k, index_t r,
                             index_t stride, T* win) {
    const Shape& s = x.shape();
    const index_t plane = s.height * s.width;
    const T* base = x.plane(b, 0);
    for (index_t dy = 0; dy < k; ++dy) {
        const index_t iy = oy * stride + dy - r;
        if (iy < 0 || iy >= s.height) continue;
        T* wrow = win + dy * s.width * s.channels;
        for (index_t c = 0; c < s.channels; ++c) {
            const T* src = base + c * plane + iy * s.width;
            T* dst = wrow + c;
            for (index_t ix = 0; ix < s.width; ++ix) dst[ix * s.channels] = src[ix];
        }
    }
}

// Weight slab reordered as (dy, dx, oc, ic) so the kernels read it
// contiguously per offset.
template <typename T>
std::vector<T> reorder_weights(const Tensor<T>& w) {
    const Shape& s = w.shape();
    std::vector<T> out(static_cast<std::size_t>(s.count()));
    index_t i = 0;
    for (index_t dy = 0; dy < s.height; ++dy) {
        for (index_t dx = 0; dx < s.width; ++dx) {
            for (index_t oc = 0; oc < s.batch; ++oc) {
                for (index_t ic = 0; ic < s.channels; ++ic) out[i++] = w(oc, ic, dy, dx);
            }
        }
    }
    return out;
}

// Core forward shared by both adaptive convolutions. The inner contraction
// has two layouts: wide rows vectorize along the row, short rows with many
// channels vectorize along the channels. MaskFn fills per-column gate
// factors; CountFn returns the number of valid window samples.
template <typename T, typename MaskFn, typename CountFn>
Tensor<T> adaptive_conv_fwd_impl(const Tensor<T>& x, const ConvParams<T>& p,
                                 MaskFn&& fill_mask, CountFn&& valid_count,
                                 ConvCache<T>* cache, const RunContext& ctx) {
    p.validate();
    const Shape& s = x.shape();
    if (s.count() == 0) throw ShapeError("adaptive conv: empty input");
    if (s.channels != p.in_channels()) {
        throw ShapeError("adaptive conv: input channels " + std::to_string(s.channels) +
                         " do not match weights " + std::to_string(p.in_channels()));
    }
    const index_t k = p.kernel(), r = k / 2, stride = p.stride;
    const index_t oh = conv_out_dim(s.height, stride), ow = conv_out_dim(s.width, stride);
    const index_t oc_n = p.out_channels(), ic_n = s.channels;
    Tensor<T> out(s.batch, oc_n, oh, ow);

    std::vector<T> inv_m(static_cast<std::size_t>(s.batch * oh * ow));
    for (index_t b = 0; b < s.batch; ++b) {
        for (index_t oy = 0; oy < oh; ++oy) {
            T* dst = inv_m.data() + (b * oh + oy) * ow;
            for (index_t ox = 0; ox < ow; ++ox) {
                dst[ox] = T(1) / (T(kConvEpsilon) + static_cast<T>(valid_count(b, oy, ox)));
            }
        }
    }

    const std::vector<T> wslab = reorder_weights(p.weights);
    const bool by_channel = ic_n >= ow; // pick the longer contraction axis
    for (index_t b = 0; b < s.batch; ++b) {
        parallel_for(oh, ctx, [&, b](index_t lo, index_t hi) {
            std::vector<T> acc(static_cast<std::size_t>(oc_n * ow));
            std::vector<T> scratch(static_cast<std::size_t>(
                by_channel ? k * s.width * ic_n : ic_n * ow));
            std::vector<T> mask(static_cast<std::size_t>(ow));
            for (index_t oy = lo; oy < hi; ++oy) {
                std::fill(acc.begin(), acc.end(), T(0));
                if (by_channel) transpose_window(x, b, oy, k, r, stride, scratch.data());
                for (index_t dy = 0; dy < k; ++dy) {
                    const index_t iy = oy * stride + dy - r;
                    if (iy < 0 || iy >= s.height) continue;
                    for (index_t dx = 0; dx < k; ++dx) {
                        fill_mask(b, oy, iy, dy, dx, mask.data());
                        bool any = false;
                        for (index_t ox = 0; ox < ow; ++ox) any |= mask[ox] != T(0);
                        if (!any) continue;
                        const T* w = wslab.data() + (dy * k + dx) * oc_n * ic_n;
                        if (by_channel) {
                            // a closed mask implies an in-image column, so row
                            // offsets index the transposed window directly
                            const T* wrow_base = scratch.data() + dy * s.width * ic_n;
                            for (index_t oc = 0; oc < oc_n; ++oc) {
                                const T* wrow = w + oc * ic_n;
                                T* dst = acc.data() + oc * ow;
                                for (index_t ox = 0; ox < ow; ++ox) {
                                    if (mask[ox] != T(0)) {
                                        const index_t ix = ox * stride + dx - r;
                                        dst[ox] += dot(wrow, wrow_base + ix * ic_n, ic_n);
                                    }
                                }
                            }
                        } else {
                            gather_rows(x, b, iy, dx, r, stride, ow, mask.data(), scratch.data());
                            for (index_t oc = 0; oc < oc_n; ++oc) {
                                T* dst = acc.data() + oc * ow;
                                for (index_t ic = 0; ic < ic_n; ++ic) {
                                    const T wv = w[oc * ic_n + ic];
                                    if (wv != T(0)) axpy(dst, scratch.data() + ic * ow, wv, ow);
                                }
                            }
                        }
                    }
                }
                const T* im = inv_m.data() + (b * oh + oy) * ow;
                for (index_t oc = 0; oc < oc_n; ++oc) {
                    T* dst = out.row(b, oc, oy);
                    const T* src = acc.data() + oc * ow;
                    const T bias = p.bias[static_cast<std::size_t>(oc)];
                    for (index_t ox = 0; ox < ow; ++ox) dst[ox] = bias + src[ox] * im[ox];
                }
            }
        });
    }

    if (cache) {
        cache->input = x;
        cache->inv_m = std::move(inv_m);
        cache->out_shape = out.shape();
    }
    return out;
}

// Core backward: recomputes the gating factors the same way the forward did
// and contracts grad_out (scaled by 1/M) against input and weights. Masks and
// gates receive no gradient; they are binary and treated as constants. Runs
// serially; training parallelizes across batch samples instead.
template <typename T, typename MaskFn>
ConvGrads<T> adaptive_conv_bwd_impl(const Tensor<T>& grad_out, const ConvCache<T>& cache,
                                    const ConvParams<T>& p, MaskFn&& fill_mask,
                                    bool want_grad_x, const RunContext& ctx) {
    p.validate();
    if (grad_out.shape() != cache.out_shape) {
        throw ShapeError("adaptive conv backward: grad shape " + grad_out.shape().str() +
                         " does not match cached forward " + cache.out_shape.str());
    }
    (void)ctx;
    const Tensor<T>& x = cache.input;
    const Shape& s = x.shape();
    const index_t k = p.kernel(), r = k / 2, stride = p.stride;
    const index_t oh = cache.out_shape.height, ow = cache.out_shape.width;
    const index_t oc_n = p.out_channels(), ic_n = s.channels;
    const index_t plane = s.height * s.width;

    ConvGrads<T> g;
    g.w = Tensor<T>(p.weights.shape());
    g.b.assign(static_cast<std::size_t>(oc_n), T(0));
    if (want_grad_x) g.x = Tensor<T>(s);

    const std::vector<T> wslab = reorder_weights(p.weights); // (dy, dx, oc, ic)
    std::vector<T> gw(static_cast<std::size_t>(k * k * oc_n * ic_n)); // same layout

    const bool by_channel = ic_n >= ow;
    std::vector<T> gs(static_cast<std::size_t>(oc_n * ow));  // grad_out / M
    std::vector<T> gst(static_cast<std::size_t>(ow * oc_n)); // transposed
    std::vector<T> mask(static_cast<std::size_t>(ow));
    std::vector<T> win, gwin, scratch, tr;
    if (by_channel) {
        win.assign(static_cast<std::size_t>(k * s.width * ic_n), T(0));
        if (want_grad_x) gwin.assign(win.size(), T(0));
    } else {
        scratch.assign(static_cast<std::size_t>(ic_n * ow), T(0));
        tr.assign(static_cast<std::size_t>(ic_n * ow), T(0));
    }
    for (index_t b = 0; b < s.batch; ++b) {
        for (index_t oy = 0; oy < oh; ++oy) {
            const T* im = cache.inv_m.data() + (b * oh + oy) * ow;
            for (index_t oc = 0; oc < oc_n; ++oc) {
                const T* go = grad_out.row(b, oc, oy);
                T* dst = gs.data() + oc * ow;
                T bsum = T(0);
                for (index_t ox = 0; ox < ow; ++ox) {
                    bsum += go[ox];
                    dst[ox] = go[ox] * im[ox];
                }
                g.b[static_cast<std::size_t>(oc)] += bsum;
            }
            if (by_channel) {
                for (index_t ox = 0; ox < ow; ++ox) {
                    for (index_t oc = 0; oc < oc_n; ++oc) gst[ox * oc_n + oc] = gs[oc * ow + ox];
                }
                transpose_window(x, b, oy, k, r, stride, win.data());
                if (want_grad_x) std::fill(gwin.begin(), gwin.end(), T(0));
            }
            for (index_t dy = 0; dy < k; ++dy) {
                const index_t iy = oy * stride + dy - r;
                if (iy < 0 || iy >= s.height) continue;
                for (index_t dx = 0; dx < k; ++dx) {
                    fill_mask(b, oy, iy, dy, dx, mask.data());
                    bool any = false;
                    for (index_t ox = 0; ox < ow; ++ox) any |= mask[ox] != T(0);
                    if (!any) continue;
                    const std::size_t wo = static_cast<std::size_t>((dy * k + dx) * oc_n * ic_n);
                    if (by_channel) {
                        const T* wrow_base = win.data() + dy * s.width * ic_n;
                        T* grow_base = want_grad_x ? gwin.data() + dy * s.width * ic_n : nullptr;
                        for (index_t ox = 0; ox < ow; ++ox) {
                            if (mask[ox] == T(0)) continue;
                            const index_t ix = ox * stride + dx - r;
                            const T* gcol = gst.data() + ox * oc_n;
                            const T* xcol = wrow_base + ix * ic_n;
                            T* tcol = grow_base ? grow_base + ix * ic_n : nullptr;
                            for (index_t oc = 0; oc < oc_n; ++oc) {
                                const T gv = gcol[oc];
                                if (gv == T(0)) continue;
                                axpy(gw.data() + wo + oc * ic_n, xcol, gv, ic_n);
                                if (tcol) axpy(tcol, wslab.data() + wo + oc * ic_n, gv, ic_n);
                            }
                        }
                    } else {
                        gather_rows(x, b, iy, dx, r, stride, ow, mask.data(), scratch.data());
                        for (index_t oc = 0; oc < oc_n; ++oc) {
                            const T* gsr = gs.data() + oc * ow;
                            T* gwrow = gw.data() + wo + oc * ic_n;
                            for (index_t ic = 0; ic < ic_n; ++ic) {
                                gwrow[ic] += dot(gsr, scratch.data() + ic * ow, ow);
                            }
                        }
                        if (!want_grad_x) continue;
                        std::fill(tr.begin(), tr.end(), T(0));
                        for (index_t ic = 0; ic < ic_n; ++ic) {
                            T* dst = tr.data() + ic * ow;
                            for (index_t oc = 0; oc < oc_n; ++oc) {
                                const T wv = wslab[wo + static_cast<std::size_t>(oc * ic_n + ic)];
                                if (wv != T(0)) axpy(dst, gs.data() + oc * ow, wv, ow);
                            }
                        }
                        for (index_t ic = 0; ic < ic_n; ++ic) {
                            T* gx = g.x.row(b, ic, iy);
                            const T* src = tr.data() + ic * ow;
                            for (index_t ox = 0; ox < ow; ++ox) {
                                const index_t ix = ox * stride + dx - r;
                                if (ix >= 0 && ix < s.width && mask[static_cast<std::size_t>(ox)] != T(0)) {
                                    gx[ix] += src[ox];
                                }
                            }
                        }
                    }
                }
            }
            if (by_channel && want_grad_x) {
                // fold the window staging buffer back into channel planes
                T* base = g.x.plane(b, 0);
                for (index_t dy = 0; dy < k; ++dy) {
                    const index_t iy = oy * stride + dy - r;
                    if (iy < 0 || iy >= s.height) continue;
                    const T* grow = gwin.data() + dy * s.width * ic_n;
                    for (index_t ic = 0; ic < ic_n; ++ic) {
                        T* dst = base + ic * plane + iy * s.width;
                        const T* src = grow + ic;
                        for (index_t ix = 0; ix < s.width; ++ix) dst[ix] += src[ix * ic_n];
                    }
                }
            }
        }
    }
    for (index_t dy = 0; dy < k; ++dy) {
        for (index_t dx = 0; dx < k; ++dx) {
            const T* src = gw.data() + (dy * k + dx) * oc_n * ic_n;
            for (index_t oc = 0; oc < oc_n; ++oc) {
                for (index_t ic = 0; ic < ic_n; ++ic) g.w(oc, ic, dy, dx) = src[oc * ic_n + ic];
            }
        }
    }
    return g;
}

} // namespace detail

// Region-adaptive convolution: a convolution whose window samples are gated
// by a binary validity map and renormalized by the count of valid samples,
//   out = bias + (1/M) * sum m * w * x,  M = eps + sum m.
// One spatial map gates all input channels; padded border pixels carry m = 0
// so the border is governed by the renormalization rather than by zeros.
template <typename T>
Tensor<T> region_adaptive_conv_fwd(const Tensor<T>& x, const FilterMap& map,
                                   const ConvParams<T>& p, ConvCache<T>* cache = nullptr,
                                   const RunContext& ctx = {}) {
    const Shape& s = x.shape();
    if (map.height() != s.height || map.width() != s.width) {
        throw ShapeError("region_adaptive_conv: map dims do not match input spatial dims");
    }
    const index_t k = p.kernel(), r = k / 2, stride = p.stride;
    auto fill_mask = [&](index_t, index_t, index_t iy, index_t, index_t dx, T* m) {
        detail::region_mask_row(map, iy, dx, r, stride,
                                detail::conv_out_dim(s.width, stride), m);
    };
    auto count = [&](index_t, index_t oy, index_t ox) -> index_t {
        index_t n = 0;
        for (index_t dy = -r; dy <= r; ++dy) {
            const index_t y = oy * stride + dy;
            if (y < 0 || y >= s.height) continue;
            const std::uint8_t* row = map.row(y);
            for (index_t dx = -r; dx <= r; ++dx) {
                const index_t xx = ox * stride + dx;
                if (xx >= 0 && xx < s.width && row[xx]) ++n;
            }
        }
        return n;
    };
    Tensor<T> out = detail::adaptive_conv_fwd_impl(x, p, fill_mask, count, cache, ctx);
    if (cache) {
        cache->map = map;
        cache->guide = Tensor<T>();
    }
    return out;
}

template <typename T>
ConvGrads<T> region_adaptive_conv_bwd(const Tensor<T>& grad_out, const ConvCache<T>& cache,
                                      const ConvParams<T>& p, bool want_grad_x = true,
                                      const RunContext& ctx = {}) {
    if (cache.map.size() == 0) throw ShapeError("region conv backward: cache has no map");
    const Shape& s = cache.input.shape();
    const index_t r = p.kernel() / 2;
    auto fill_mask = [&](index_t, index_t, index_t iy, index_t, index_t dx, T* m) {
        detail::region_mask_row(cache.map, iy, dx, r, p.stride,
                                detail::conv_out_dim(s.width, p.stride), m);
    };
    return detail::adaptive_conv_bwd_impl(grad_out, cache, p, fill_mask, want_grad_x, ctx);
}

// Depth-adaptive convolution: the same renormalized formula, but the gate of
// each window sample is computed from the guide depth against the window's
// center, so the mask depends on the kernel placement and is never
// materialized as one image. Stride is fixed at 1.
template <typename T>
Tensor<T> depth_adaptive_conv_fwd(const Tensor<T>& x, const Tensor<T>& guide_depth,
                                  const ConvParams<T>& p, const DepthGateConfig& cfg = {},
                                  ConvCache<T>* cache = nullptr, const RunContext& ctx = {}) {
    cfg.validate();
    const Shape& s = x.shape();
    const Shape& gshape = guide_depth.shape();
    if (gshape.channels != 1 || gshape.height != s.height || gshape.width != s.width ||
        gshape.batch != s.batch) {
        throw ShapeError("depth_adaptive_conv: guide must be single-channel and match input");
    }
    if (p.stride != 1) throw ShapeError("depth_adaptive_conv: stride must be 1");
    const detail::GateTable gates(guide_depth, p.kernel(), cfg, s.batch);
    auto fill_mask = [&](index_t b, index_t oy, index_t, index_t dy, index_t dx, T* m) {
        detail::depth_mask_row(gates, b, oy, dy, dx, s.width, m);
    };
    auto count = [&](index_t b, index_t oy, index_t ox) { return gates.valid_count(b, oy, ox); };
    Tensor<T> out = detail::adaptive_conv_fwd_impl(x, p, fill_mask, count, cache, ctx);
    if (cache) {
        cache->map = FilterMap();
        cache->guide = guide_depth;
        cache->gate_cfg = cfg;
    }
    return out;
}

template <typename T>
ConvGrads<T> depth_adaptive_conv_bwd(const Tensor<T>& grad_out, const ConvCache<T>& cache,
                                     const ConvParams<T>& p, bool want_grad_x = true,
                                     const RunContext& ctx = {}) {
    if (cache.guide.empty()) throw ShapeError("depth conv backward: cache has no guide");
    const Shape& s = cache.input.shape();
    const detail::GateTable gates(cache.guide, p.kernel(), cache.gate_cfg, s.batch);
    auto fill_mask = [&](index_t b, index_t oy, index_t, index_t dy, index_t dx, T* m) {
        detail::depth_mask_row(gates, b, oy, dy, dx, s.width, m);
    };
    return detail::adaptive_conv_bwd_impl(grad_out, cache, p, fill_mask, want_grad_x, ctx);
}

} // namespace argbd
