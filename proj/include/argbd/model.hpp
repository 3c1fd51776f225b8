#pragma once

#include <random>
#include <string>
#include <vector>

#include "argbd/conv.hpp"
#include "argbd/layers.hpp"

namespace argbd {

enum class LayerKind { region_conv, depth_conv, upsample, concat_skip, pixel_shuffle, conv_plain };

// Declarative description of one network layer; the hand-chained forward
// passes follow these tables and the constructors validate against them.
struct LayerSpec {
    struct Entry {
        std::string name;
        LayerKind kind;
        index_t kernel = 0;
        index_t stride = 0;
        index_t in_ch = 0;
        index_t out_ch = 0;
        index_t up_factor = 0;
        int skip_source = -1; // index of the entry whose output joins here
        bool batch_norm = false;
        bool leaky = false;
    };

    std::vector<Entry> entries;

    // Encoder/decoder completion network: five stride-2 gated convolutions
    // with doubling channels, mirrored by five up-sample/concat/conv stages.
    static LayerSpec completion() {
        LayerSpec s;
        auto enc = [&](std::string name, index_t k, index_t in, index_t out) {
            s.entries.push_back({std::move(name), LayerKind::region_conv, k, 2, in, out, 0, -1, true, true});
        };
        enc("aconv1", 7, 1, 16);
        enc("aconv2", 5, 16, 32);
        enc("aconv3", 3, 32, 64);
        enc("aconv4", 3, 64, 128);
        enc("aconv5", 3, 128, 128);
        auto dec = [&](std::string name, index_t in, index_t out, int skip, bool norm) {
            s.entries.push_back({"up_" + name, LayerKind::upsample, 0, 0, 0, 0, 2, -1, false, false});
            s.entries.push_back({"cat_" + name, LayerKind::concat_skip, 0, 0, 0, 0, 0, skip, false, false});
            s.entries.push_back({std::move(name), LayerKind::region_conv, 3, 1, in, out, 0, -1, norm, norm});
        };
        dec("aconv6", 128 + 128, 128, 3, true);
        dec("aconv7", 128 + 64, 64, 2, true);
        dec("aconv8", 64 + 32, 64, 1, true);
        dec("aconv9", 64 + 16, 16, 0, true);
        dec("aconv10", 16 + 1, 1, -1, false); // skip -1: the raw input depth
        return s;
    }

    // Dense feature extraction plus sub-pixel up-sampling. Block k consumes
    // the concatenation of the stem and all previous block outputs.
    static LayerSpec super_resolution(index_t r) {
        LayerSpec s;
        auto conv = [&](std::string name, index_t in, index_t out, bool leaky) {
            s.entries.push_back({std::move(name), LayerKind::depth_conv, 3, 1, in, out, 0, -1, false, leaky});
        };
        conv("aconv0", 1, 64, true);
        for (index_t b = 1; b <= 5; ++b) {
            conv("block" + std::to_string(b) + ".conv1", 64 * b, 64, true);
            conv("block" + std::to_string(b) + ".conv2", 64, 64, false);
        }
        conv("aconv6", 64, 64, true);
        s.entries.push_back({"cat_aconv0", LayerKind::concat_skip, 0, 0, 0, 0, 0, 0, false, false});
        conv("aconv7", 128, 128, true);
        s.entries.push_back({"shuffle", LayerKind::pixel_shuffle, 0, 0, 128, 128 / (r * r), r, -1, false, false});
        s.entries.push_back({"head", LayerKind::conv_plain, 1, 1, 128 / (r * r), 1, 0, -1, false, false});
        return s;
    }

    void validate() const {
        for (const Entry& e : entries) {
            const bool has_weights = e.kind == LayerKind::region_conv ||
                                     e.kind == LayerKind::depth_conv ||
                                     e.kind == LayerKind::conv_plain;
            if (has_weights && (e.in_ch < 1 || e.out_ch < 1 || e.kernel < 1 || e.kernel % 2 == 0)) {
                throw ShapeError("LayerSpec: malformed conv entry " + e.name);
            }
            if (e.kind == LayerKind::pixel_shuffle &&
                e.in_ch != e.out_ch * e.up_factor * e.up_factor) {
                throw ShapeError("LayerSpec: shuffle channels inconsistent at " + e.name);
            }
        }
    }

    const Entry& find(const std::string& name) const {
        for (const Entry& e : entries) {
            if (e.name == name) return e;
        }
        throw ShapeError("LayerSpec: no entry named " + name);
    }
};

// Mutable view of one named parameter tensor and its gradient slot; the unit
// the optimizer and the gradient checker operate on.
template <typename T>
struct ParamRef {
    std::string name;
    Shape dims;
    T* value = nullptr;
    T* grad = nullptr;
    index_t count = 0;
};

// Named view of one persistent tensor (parameters and running statistics);
// the unit the checkpoint format serializes.
template <typename T>
struct StateRef {
    std::string name;
    Shape dims;
    T* data = nullptr;
    index_t count = 0;
};

namespace detail {

// Zero-mean normal with std sqrt(2 / fan_in); biases start at zero.
template <typename T>
void he_init(Tensor<T>& w, std::mt19937_64& rng) {
    const Shape& s = w.shape();
    const double fan_in = static_cast<double>(s.channels * s.height * s.width);
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (index_t i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(dist(rng));
}

template <typename T>
ConvParams<T> make_conv(index_t out_ch, index_t in_ch, index_t k, index_t stride,
                        std::mt19937_64& rng) {
    ConvParams<T> p;
    p.weights = Tensor<T>(out_ch, in_ch, k, k);
    p.bias.assign(static_cast<std::size_t>(out_ch), T(0));
    p.stride = stride;
    he_init(p.weights, rng);
    return p;
}

inline Shape bias_dims(index_t n) { return Shape{1, n, 1, 1}; }

} // namespace detail

// Gradient accumulation slots for one convolution. The networks keep their
// parameters only; gradients live in these caller-owned structures so batch
// items can run backward in parallel against a const network.
template <typename T>
struct ConvGradSlot {
    Tensor<T> w;
    std::vector<T> b;

    void init_like(const ConvParams<T>& p) {
        w = Tensor<T>(p.weights.shape());
        b.assign(p.bias.size(), T(0));
    }
    void zero() {
        w.fill(T(0));
        std::fill(b.begin(), b.end(), T(0));
    }
    void add(const ConvGrads<T>& g) {
        for (index_t i = 0; i < w.size(); ++i) w.data()[i] += g.w.data()[i];
        for (std::size_t i = 0; i < b.size(); ++i) b[i] += g.b[i];
    }
    void add(const ConvGradSlot& o) {
        for (index_t i = 0; i < w.size(); ++i) w.data()[i] += o.w.data()[i];
        for (std::size_t i = 0; i < b.size(); ++i) b[i] += o.b[i];
    }
};

template <typename T>
struct NormGradSlot {
    std::vector<T> gamma;
    std::vector<T> beta;

    void init_like(const BatchNormState<T>& st) {
        gamma.assign(st.gamma.size(), T(0));
        beta.assign(st.beta.size(), T(0));
    }
    void zero() {
        std::fill(gamma.begin(), gamma.end(), T(0));
        std::fill(beta.begin(), beta.end(), T(0));
    }
    void add(const BatchNormGrads<T>& g) {
        for (std::size_t i = 0; i < gamma.size(); ++i) {
            gamma[i] += g.gamma[i];
            beta[i] += g.beta[i];
        }
    }
    void add(const NormGradSlot& o) {
        for (std::size_t i = 0; i < gamma.size(); ++i) {
            gamma[i] += o.gamma[i];
            beta[i] += o.beta[i];
        }
    }
};

namespace detail {

template <typename T>
void append_conv_refs(const std::string& name, ConvParams<T>& p, ConvGradSlot<T>& g,
                      std::vector<ParamRef<T>>& out) {
    out.push_back({name + ".weights", p.weights.shape(), p.weights.data(), g.w.data(),
                   p.weights.size()});
    out.push_back({name + ".bias", bias_dims(static_cast<index_t>(p.bias.size())),
                   p.bias.data(), g.b.data(), static_cast<index_t>(p.bias.size())});
}

template <typename T>
void append_norm_refs(const std::string& name, BatchNormState<T>& st, NormGradSlot<T>& g,
                      std::vector<ParamRef<T>>& out) {
    const index_t c = st.channels();
    out.push_back({name + ".gamma", bias_dims(c), st.gamma.data(), g.gamma.data(), c});
    out.push_back({name + ".beta", bias_dims(c), st.beta.data(), g.beta.data(), c});
}

} // namespace detail

} // namespace argbd
