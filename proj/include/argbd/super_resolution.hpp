#pragma once

#include <array>

#include "argbd/model.hpp"

namespace argbd {

// Guided super-resolution of a completed depth image. The feature extractor
// is a stem convolution followed by five dense blocks; block k consumes the
// concatenation of the stem and all previous block outputs (64k channels) and
// emits 64 via conv -> Leaky ReLU -> conv. A fuse convolution, a concat with
// the stem and a 128-channel convolution feed the sub-pixel shuffle, and a
// plain 1x1 convolution squashed through tanh yields the high-resolution
// depth in [0, 1]. Every convolution before the shuffle is depth-adaptive at
// the input resolution with the input depth as guide; there is no
// normalization layer.
template <typename T>
class SrNet {
public:
    static constexpr index_t kBlocks = 5;
    static constexpr index_t kFeat = 64;

    struct Trace {
        Tensor<T> guide;
        std::array<ConvCache<T>, 13> conv;          // stem, 5x2 block convs, fuse, pre-shuffle
        std::array<Tensor<T>, 13> pre_act;          // convolution outputs (activation inputs)
        std::array<Tensor<T>, kBlocks + 1> feats;   // stem output + block outputs (post-act stem)
        Tensor<T> fused;                            // activated fuse output
        Tensor<T> shuffle_in;                       // activated pre-shuffle features
        Tensor<T> head_in;                          // shuffled features
        Tensor<T> head_pre_act;                     // 1x1 output before tanh
    };

    struct Grads {
        std::array<ConvGradSlot<T>, 13> conv;
        ConvGradSlot<T> head;

        void init_like(const SrNet& net) {
            for (std::size_t i = 0; i < net.conv_.size(); ++i) conv[i].init_like(net.conv_[i]);
            head.init_like(net.head_);
        }
        void zero() {
            for (auto& c : conv) c.zero();
            head.zero();
        }
        void add(const Grads& o) {
            for (std::size_t i = 0; i < conv.size(); ++i) conv[i].add(o.conv[i]);
            head.add(o.head);
        }
    };

    SrNet() : SrNet(2, 0) {}

    SrNet(index_t r, std::uint64_t seed, DepthGateConfig gate = {})
        : r_(r), gate_(gate), spec_(LayerSpec::super_resolution(r)) {
        if (r != 2 && r != 4) throw ShapeError("SrNet: up-sampling ratio must be 2 or 4");
        gate_.validate();
        spec_.validate();
        std::mt19937_64 rng(seed);
        std::size_t i = 0;
        for (const LayerSpec::Entry& e : spec_.entries) {
            if (e.kind == LayerKind::depth_conv) {
                conv_[i++] = detail::make_conv<T>(e.out_ch, e.in_ch, e.kernel, 1, rng);
            } else if (e.kind == LayerKind::conv_plain) {
                head_ = detail::make_conv<T>(e.out_ch, e.in_ch, e.kernel, 1, rng);
            }
        }
    }

    index_t ratio() const { return r_; }
    const DepthGateConfig& gate_config() const { return gate_; }
    const LayerSpec& spec() const { return spec_; }

    // depth: (1, 1, H, W) completed depth in [0, 1]; also serves as the gate
    // guide. Returns (1, 1, r*H, r*W) in [0, 1].
    Tensor<T> forward(const Tensor<T>& depth, Trace* trace = nullptr,
                      const RunContext& ctx = {}) const {
        const Shape& s = depth.shape();
        if (s.channels != 1 || s.count() == 0) {
            throw ShapeError("super-resolution: input must be a non-empty single-channel tensor");
        }
        const Tensor<T>& guide = depth;

        auto conv = [&](std::size_t i, const Tensor<T>& x) {
            ConvCache<T>* cache = trace ? &trace->conv[i] : nullptr;
            return depth_adaptive_conv_fwd(x, guide, conv_[i], gate_, cache, ctx);
        };

        std::array<Tensor<T>, kBlocks + 1> feats;
        Tensor<T> z = conv(0, depth);
        if (trace) trace->pre_act[0] = z;
        feats[0] = leaky_relu(z);
        for (index_t b = 0; b < kBlocks; ++b) {
            Tensor<T> cat = feats[0];
            for (index_t p = 1; p <= b; ++p) cat = concat_channels(cat, feats[static_cast<std::size_t>(p)]);
            const std::size_t c1 = static_cast<std::size_t>(1 + 2 * b);
            Tensor<T> za = conv(c1, cat);
            if (trace) trace->pre_act[c1] = za;
            Tensor<T> act = leaky_relu(za);
            feats[static_cast<std::size_t>(b) + 1] = conv(c1 + 1, act);
        }
        const std::size_t fuse_i = 11, pre_i = 12;
        Tensor<T> zf = conv(fuse_i, feats[kBlocks]);
        if (trace) trace->pre_act[fuse_i] = zf;
        Tensor<T> fused = leaky_relu(zf);
        Tensor<T> cat = concat_channels(fused, feats[0]);
        Tensor<T> zp = conv(pre_i, cat);
        if (trace) trace->pre_act[pre_i] = zp;
        Tensor<T> shuffle_in = leaky_relu(zp);
        Tensor<T> shuffled = pixel_shuffle(shuffle_in, r_);
        Tensor<T> head_z = conv1x1_fwd(shuffled, head_.weights, head_.bias);
        Tensor<T> out = tanh_to_unit(head_z);

        if (trace) {
            trace->guide = guide;
            trace->feats = std::move(feats);
            trace->fused = std::move(fused);
            trace->shuffle_in = std::move(shuffle_in);
            trace->head_in = std::move(shuffled);
            trace->head_pre_act = std::move(head_z);
        }
        return out;
    }

    void backward(const Tensor<T>& grad_out, const Trace& trace, Grads& grads,
                  const RunContext& ctx = {}) const {
        auto conv_bwd = [&](std::size_t i, const Tensor<T>& g, bool want_x) {
            ConvGrads<T> cg = depth_adaptive_conv_bwd(g, trace.conv[i], conv_[i], want_x, ctx);
            grads.conv[i].add(cg);
            return std::move(cg.x);
        };

        Tensor<T> g = tanh_to_unit_bwd(grad_out, trace.head_pre_act);
        Conv1x1Grads<T> hg = conv1x1_bwd(g, trace.head_in, head_.weights);
        grads.head.add(ConvGrads<T>{Tensor<T>(), std::move(hg.w), std::move(hg.b)});
        g = pixel_shuffle_bwd(hg.x, r_);

        std::array<Tensor<T>, kBlocks + 1> feat_grads;
        const std::size_t fuse_i = 11, pre_i = 12;
        g = leaky_relu_bwd(g, trace.pre_act[pre_i]);
        {
            Tensor<T> gc = conv_bwd(pre_i, g, true);
            auto [g_fused, g_stem] = split_channels(gc, kFeat);
            add_into(feat_grads[0], g_stem);
            Tensor<T> gf = leaky_relu_bwd(g_fused, trace.pre_act[fuse_i]);
            add_into(feat_grads[kBlocks], conv_bwd(fuse_i, gf, true));
        }

        for (index_t b = kBlocks - 1; b >= 0; --b) {
            const std::size_t c1 = static_cast<std::size_t>(1 + 2 * b);
            Tensor<T> ga = conv_bwd(c1 + 1, feat_grads[static_cast<std::size_t>(b) + 1], true);
            ga = leaky_relu_bwd(ga, trace.pre_act[c1]);
            Tensor<T> gcat = conv_bwd(c1, ga, true);
            // split the dense concat back onto the stem and earlier blocks
            for (index_t p = 0; p <= b; ++p) {
                auto [part, rest] = split_channels(gcat, kFeat);
                add_into(feat_grads[static_cast<std::size_t>(p)], part);
                gcat = std::move(rest);
            }
        }

        Tensor<T> g0 = leaky_relu_bwd(feat_grads[0], trace.pre_act[0]);
        conv_bwd(0, g0, /*want_x=*/false);
    }

    void apply_running_updates(const Trace&) {} // no normalization layers

    std::vector<ParamRef<T>> param_refs(Grads& grads) {
        std::vector<ParamRef<T>> refs;
        for (std::size_t i = 0; i < conv_.size(); ++i) {
            detail::append_conv_refs(conv_name(i), conv_[i], grads.conv[i], refs);
        }
        detail::append_conv_refs("head", head_, grads.head, refs);
        return refs;
    }

    std::vector<StateRef<T>> named_state() {
        std::vector<StateRef<T>> out;
        auto push = [&](const std::string& name, ConvParams<T>& p) {
            out.push_back({name + ".weights", p.weights.shape(), p.weights.data(),
                           p.weights.size()});
            const index_t bn = static_cast<index_t>(p.bias.size());
            out.push_back({name + ".bias", detail::bias_dims(bn), p.bias.data(), bn});
        };
        for (std::size_t i = 0; i < conv_.size(); ++i) push(conv_name(i), conv_[i]);
        push("head", head_);
        return out;
    }

private:
    static std::string conv_name(std::size_t i) {
        if (i == 0) return "aconv0";
        if (i <= 10) {
            const std::size_t b = (i - 1) / 2 + 1;
            return "block" + std::to_string(b) + ".conv" + std::to_string((i - 1) % 2 + 1);
        }
        return i == 11 ? "aconv6" : "aconv7";
    }

    static void add_into(Tensor<T>& dst, const Tensor<T>& src) {
        if (dst.empty()) {
            dst = src;
            return;
        }
        for (index_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
    }

    index_t r_ = 2;
    DepthGateConfig gate_;
    LayerSpec spec_;
    std::array<ConvParams<T>, 13> conv_;
    ConvParams<T> head_;
};

} // namespace argbd
