#pragma once

#include <cmath>
#include <vector>

#include "argbd/tensor.hpp"

namespace argbd {

// Leaky ReLU, x for x > 0 and lambda * x otherwise.
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T lambda = T(0.1)) {
    Tensor<T> out(x.shape());
    for (index_t i = 0; i < x.size(); ++i) {
        const T v = x.data()[i];
        out.data()[i] = v > T(0) ? v : lambda * v;
    }
    return out;
}

template <typename T>
Tensor<T> leaky_relu_bwd(const Tensor<T>& grad_out, const Tensor<T>& input, T lambda = T(0.1)) {
    if (grad_out.shape() != input.shape()) throw ShapeError("leaky_relu_bwd: shape mismatch");
    Tensor<T> out(grad_out.shape());
    for (index_t i = 0; i < input.size(); ++i) {
        out.data()[i] = grad_out.data()[i] * (input.data()[i] > T(0) ? T(1) : lambda);
    }
    return out;
}

enum class NormMode { train, infer };

// Per-channel batch normalization state. Running statistics follow
// running = momentum * running + (1 - momentum) * batch.
template <typename T>
struct BatchNormState {
    std::vector<T> gamma;
    std::vector<T> beta;
    std::vector<T> running_mean;
    std::vector<T> running_var;
    T momentum = T(0.9);
    T epsilon = T(1e-5);

    explicit BatchNormState(index_t channels = 0)
        : gamma(static_cast<std::size_t>(channels), T(1)),
          beta(static_cast<std::size_t>(channels), T(0)),
          running_mean(static_cast<std::size_t>(channels), T(0)),
          running_var(static_cast<std::size_t>(channels), T(1)) {}

    index_t channels() const { return static_cast<index_t>(gamma.size()); }
};

template <typename T>
struct BatchNormCache {
    Tensor<T> x_hat;
    std::vector<T> inv_std;
    std::vector<T> batch_mean; // statistics of this call, for deferred running updates
    std::vector<T> batch_var;
};

// Folds one call's batch statistics into the running estimates. Training
// loops that evaluate samples in parallel defer this and apply it in sample
// order so the trajectory stays reproducible.
template <typename T>
void apply_running_update(BatchNormState<T>& st, const std::vector<T>& mean,
                          const std::vector<T>& var) {
    for (std::size_t c = 0; c < st.gamma.size(); ++c) {
        st.running_mean[c] = st.momentum * st.running_mean[c] + (T(1) - st.momentum) * mean[c];
        st.running_var[c] = st.momentum * st.running_var[c] + (T(1) - st.momentum) * var[c];
    }
}

// Pure normalization: train mode derives the statistics from this call's
// input, infer mode uses the running estimates. Never touches the state, so
// concurrent evaluations against one shared state are safe; the networks pair
// this with an explicit, ordered apply_running_update.
template <typename T>
Tensor<T> batch_norm_eval(const Tensor<T>& x, const BatchNormState<T>& st, NormMode mode,
                          BatchNormCache<T>* cache = nullptr) {
    const Shape& s = x.shape();
    if (s.channels != st.channels()) throw ShapeError("batch_norm: channel mismatch");
    Tensor<T> out(s);
    const index_t plane = s.height * s.width;
    const index_t n = s.batch * plane;
    if (n == 0) throw ShapeError("batch_norm: empty input");
    if (cache) {
        cache->x_hat = Tensor<T>(s);
        cache->inv_std.assign(static_cast<std::size_t>(s.channels), T(0));
        cache->batch_mean.assign(static_cast<std::size_t>(s.channels), T(0));
        cache->batch_var.assign(static_cast<std::size_t>(s.channels), T(0));
    }
    for (index_t c = 0; c < s.channels; ++c) {
        T mean, var;
        if (mode == NormMode::train) {
            // statistics accumulated in double so the reduction order never matters
            double sum = 0.0, sq = 0.0;
            for (index_t b = 0; b < s.batch; ++b) {
                const T* src = x.plane(b, c);
                for (index_t i = 0; i < plane; ++i) {
                    sum += src[i];
                    sq += static_cast<double>(src[i]) * src[i];
                }
            }
            mean = static_cast<T>(sum / n);
            var = static_cast<T>(std::max(0.0, sq / n - (sum / n) * (sum / n)));
            if (cache) {
                cache->batch_mean[static_cast<std::size_t>(c)] = mean;
                cache->batch_var[static_cast<std::size_t>(c)] = var;
            }
        } else {
            mean = st.running_mean[static_cast<std::size_t>(c)];
            var = st.running_var[static_cast<std::size_t>(c)];
        }
        const T inv_std = T(1) / std::sqrt(var + st.epsilon);
        const T g = st.gamma[static_cast<std::size_t>(c)];
        const T bta = st.beta[static_cast<std::size_t>(c)];
        if (cache) cache->inv_std[static_cast<std::size_t>(c)] = inv_std;
        for (index_t b = 0; b < s.batch; ++b) {
            const T* src = x.plane(b, c);
            T* dst = out.plane(b, c);
            T* xh = cache ? cache->x_hat.plane(b, c) : nullptr;
            for (index_t i = 0; i < plane; ++i) {
                const T normalized = (src[i] - mean) * inv_std;
                if (xh) xh[i] = normalized;
                dst[i] = g * normalized + bta;
            }
        }
    }
    return out;
}

// Standard batch normalization: train mode also folds this call's statistics
// into the running estimates.
template <typename T>
Tensor<T> batch_norm_fwd(const Tensor<T>& x, BatchNormState<T>& st, NormMode mode,
                         BatchNormCache<T>* cache = nullptr) {
    BatchNormCache<T> local;
    BatchNormCache<T>* c = (cache || mode != NormMode::train) ? cache : &local;
    Tensor<T> out = batch_norm_eval(x, st, mode, c);
    if (mode == NormMode::train) apply_running_update(st, c->batch_mean, c->batch_var);
    return out;
}

template <typename T>
struct BatchNormGrads {
    Tensor<T> x;
    std::vector<T> gamma;
    std::vector<T> beta;
};

// Backward for train-mode normalization (statistics are functions of x).
template <typename T>
BatchNormGrads<T> batch_norm_bwd(const Tensor<T>& grad_out, const BatchNormState<T>& st,
                                 const BatchNormCache<T>& cache) {
    const Shape& s = grad_out.shape();
    if (s != cache.x_hat.shape()) throw ShapeError("batch_norm_bwd: shape mismatch");
    BatchNormGrads<T> g;
    g.x = Tensor<T>(s);
    g.gamma.assign(static_cast<std::size_t>(s.channels), T(0));
    g.beta.assign(static_cast<std::size_t>(s.channels), T(0));
    const index_t plane = s.height * s.width;
    const index_t n = s.batch * plane;
    for (index_t c = 0; c < s.channels; ++c) {
        double sum_go = 0.0, sum_go_xh = 0.0;
        for (index_t b = 0; b < s.batch; ++b) {
            const T* go = grad_out.plane(b, c);
            const T* xh = cache.x_hat.plane(b, c);
            for (index_t i = 0; i < plane; ++i) {
                sum_go += go[i];
                sum_go_xh += static_cast<double>(go[i]) * xh[i];
            }
        }
        g.beta[static_cast<std::size_t>(c)] = static_cast<T>(sum_go);
        g.gamma[static_cast<std::size_t>(c)] = static_cast<T>(sum_go_xh);
        const T scale = st.gamma[static_cast<std::size_t>(c)] *
                        cache.inv_std[static_cast<std::size_t>(c)];
        const T mean_go = static_cast<T>(sum_go / n);
        const T mean_go_xh = static_cast<T>(sum_go_xh / n);
        for (index_t b = 0; b < s.batch; ++b) {
            const T* go = grad_out.plane(b, c);
            const T* xh = cache.x_hat.plane(b, c);
            T* dst = g.x.plane(b, c);
            for (index_t i = 0; i < plane; ++i) {
                dst[i] = scale * (go[i] - mean_go - xh[i] * mean_go_xh);
            }
        }
    }
    return g;
}

// Sub-pixel rearrangement: r*r channel groups become an r-times larger
// spatial grid, out(b, c, y*r+dy, x*r+dx) = in(b, c*r*r + dy*r + dx, y, x).
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, index_t r) {
    const Shape& s = x.shape();
    if (r < 1) throw ShapeError("pixel_shuffle: factor must be >= 1");
    if (s.channels % (r * r) != 0) {
        throw ShapeError("pixel_shuffle: channels " + std::to_string(s.channels) +
                         " not divisible by r^2");
    }
    Tensor<T> out(s.batch, s.channels / (r * r), s.height * r, s.width * r);
    for (index_t b = 0; b < s.batch; ++b) {
        for (index_t c = 0; c < out.shape().channels; ++c) {
            for (index_t dy = 0; dy < r; ++dy) {
                for (index_t dx = 0; dx < r; ++dx) {
                    const index_t src_c = c * r * r + dy * r + dx;
                    for (index_t y = 0; y < s.height; ++y) {
                        const T* src = x.row(b, src_c, y);
                        T* dst = out.row(b, c, y * r + dy) + dx;
                        for (index_t xx = 0; xx < s.width; ++xx) dst[xx * r] = src[xx];
                    }
                }
            }
        }
    }
    return out;
}

// Exact inverse permutation; also the backward pass.
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, index_t r) {
    const Shape& s = x.shape();
    if (r < 1) throw ShapeError("pixel_unshuffle: factor must be >= 1");
    if (s.height % r != 0 || s.width % r != 0) {
        throw ShapeError("pixel_unshuffle: spatial dims not divisible by r");
    }
    Tensor<T> out(s.batch, s.channels * r * r, s.height / r, s.width / r);
    for (index_t b = 0; b < s.batch; ++b) {
        for (index_t c = 0; c < s.channels; ++c) {
            for (index_t dy = 0; dy < r; ++dy) {
                for (index_t dx = 0; dx < r; ++dx) {
                    const index_t dst_c = c * r * r + dy * r + dx;
                    for (index_t y = 0; y < out.shape().height; ++y) {
                        const T* src = x.row(b, c, y * r + dy) + dx;
                        T* dst = out.row(b, dst_c, y);
                        for (index_t xx = 0; xx < out.shape().width; ++xx) dst[xx] = src[xx * r];
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
Tensor<T> pixel_shuffle_bwd(const Tensor<T>& grad_out, index_t r) {
    return pixel_unshuffle(grad_out, r);
}

// Plain (non-adaptive) 1x1 convolution, a per-pixel channel mix. Used by the
// super-resolution head after the sub-pixel shuffle.
template <typename T>
Tensor<T> conv1x1_fwd(const Tensor<T>& x, const Tensor<T>& weights, const std::vector<T>& bias) {
    const Shape& s = x.shape();
    const Shape& w = weights.shape();
    if (w.height != 1 || w.width != 1 || w.channels != s.channels) {
        throw ShapeError("conv1x1: weights must be (out,in,1,1) matching input channels");
    }
    if (static_cast<index_t>(bias.size()) != w.batch) throw ShapeError("conv1x1: bias mismatch");
    Tensor<T> out(s.batch, w.batch, s.height, s.width);
    const index_t plane = s.height * s.width;
    for (index_t b = 0; b < s.batch; ++b) {
        for (index_t oc = 0; oc < w.batch; ++oc) {
            T* dst = out.plane(b, oc);
            std::fill(dst, dst + plane, bias[static_cast<std::size_t>(oc)]);
            for (index_t ic = 0; ic < s.channels; ++ic) {
                const T wv = weights(oc, ic, 0, 0);
                if (wv == T(0)) continue;
                const T* src = x.plane(b, ic);
                for (index_t i = 0; i < plane; ++i) dst[i] += wv * src[i];
            }
        }
    }
    return out;
}

template <typename T>
struct Conv1x1Grads {
    Tensor<T> x;
    Tensor<T> w;
    std::vector<T> b;
};

template <typename T>
Conv1x1Grads<T> conv1x1_bwd(const Tensor<T>& grad_out, const Tensor<T>& input,
                            const Tensor<T>& weights) {
    const Shape& s = input.shape();
    const Shape& w = weights.shape();
    if (grad_out.shape().channels != w.batch) throw ShapeError("conv1x1_bwd: shape mismatch");
    Conv1x1Grads<T> g;
    g.x = Tensor<T>(s);
    g.w = Tensor<T>(w);
    g.b.assign(static_cast<std::size_t>(w.batch), T(0));
    const index_t plane = s.height * s.width;
    for (index_t b = 0; b < s.batch; ++b) {
        for (index_t oc = 0; oc < w.batch; ++oc) {
            const T* go = grad_out.plane(b, oc);
            double bsum = 0.0;
            for (index_t i = 0; i < plane; ++i) bsum += go[i];
            g.b[static_cast<std::size_t>(oc)] += static_cast<T>(bsum);
            for (index_t ic = 0; ic < s.channels; ++ic) {
                const T* src = input.plane(b, ic);
                T* gx = g.x.plane(b, ic);
                const T wv = weights(oc, ic, 0, 0);
                T wacc = T(0);
                for (index_t i = 0; i < plane; ++i) {
                    wacc += go[i] * src[i];
                    gx[i] += wv * go[i];
                }
                g.w(oc, ic, 0, 0) += wacc;
            }
        }
    }
    return g;
}

// tanh squashed to [0, 1]: out = (tanh(x) + 1) / 2.
template <typename T>
Tensor<T> tanh_to_unit(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    for (index_t i = 0; i < x.size(); ++i) {
        out.data()[i] = (std::tanh(x.data()[i]) + T(1)) / T(2);
    }
    return out;
}

template <typename T>
Tensor<T> tanh_to_unit_bwd(const Tensor<T>& grad_out, const Tensor<T>& input) {
    if (grad_out.shape() != input.shape()) throw ShapeError("tanh_to_unit_bwd: shape mismatch");
    Tensor<T> out(grad_out.shape());
    for (index_t i = 0; i < input.size(); ++i) {
        const T t = std::tanh(input.data()[i]);
        out.data()[i] = grad_out.data()[i] * (T(1) - t * t) / T(2);
    }
    return out;
}

// Clamp to [lo, hi] with pass-through gradient strictly inside the range.
template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
    Tensor<T> out(x.shape());
    for (index_t i = 0; i < x.size(); ++i) {
        out.data()[i] = std::min(hi, std::max(lo, x.data()[i]));
    }
    return out;
}

template <typename T>
Tensor<T> clamp_bwd(const Tensor<T>& grad_out, const Tensor<T>& input, T lo, T hi) {
    if (grad_out.shape() != input.shape()) throw ShapeError("clamp_bwd: shape mismatch");
    Tensor<T> out(grad_out.shape());
    for (index_t i = 0; i < input.size(); ++i) {
        const T v = input.data()[i];
        out.data()[i] = (v > lo && v < hi) ? grad_out.data()[i] : T(0);
    }
    return out;
}

} // namespace argbd
