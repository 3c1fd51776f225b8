#pragma once

#include <array>
#include <utility>

#include "argbd/model.hpp"

namespace argbd {

// Depth completion network. Five stride-2 region-adaptive encoder layers
// (kernels 7,5,3,3,3; channels 16,32,64,128,128), each followed by batch
// normalization and Leaky ReLU, propagate the validity map alongside the
// features. Five decoder stages mirror them: nearest up-sample by 2, channel
// concat with the matching encoder feature (the raw input depth at the last
// stage) and a gated 3x3 convolution. The final layer emits one channel,
// clamped to [0, 1].
//
// Decoder gating: each decoder convolution is gated by the OR of the
// up-sampled running validity map and the encoder map of its scale. Gating by
// the encoder map alone would reduce every hole interior to the head bias --
// the reconstructed coarse features would never reach the output -- so the
// validity of the up-sampled deep path joins the gate. The map keeps updating
// through the decoder exactly as in the encoder; the updated map after the
// last stage is returned with the output.
template <typename T>
class CompletionNet {
public:
    static constexpr index_t kLevels = 5;

    struct Trace {
        Tensor<T> input;
        FilterMap input_map;
        std::array<FilterMap, kLevels + 1> enc_maps; // enc_maps[0] = input map
        std::array<ConvCache<T>, 2 * kLevels> conv;
        std::array<BatchNormCache<T>, 2 * kLevels - 1> norm;
        std::array<Tensor<T>, 2 * kLevels - 1> pre_act;   // batch-norm outputs
        std::array<Tensor<T>, kLevels> enc_features;      // after activation
        std::array<FilterMap, kLevels> dec_gates;
        Tensor<T> head_pre_clamp;
    };

    struct Grads {
        std::array<ConvGradSlot<T>, 2 * kLevels> conv;
        std::array<NormGradSlot<T>, 2 * kLevels - 1> norm;

        void init_like(const CompletionNet& net) {
            for (std::size_t i = 0; i < net.conv_.size(); ++i) conv[i].init_like(net.conv_[i]);
            for (std::size_t i = 0; i < net.norm_.size(); ++i) norm[i].init_like(net.norm_[i]);
        }
        void zero() {
            for (auto& c : conv) c.zero();
            for (auto& n : norm) n.zero();
        }
        void add(const Grads& o) {
            for (std::size_t i = 0; i < conv.size(); ++i) conv[i].add(o.conv[i]);
            for (std::size_t i = 0; i < norm.size(); ++i) norm[i].add(o.norm[i]);
        }
    };

    CompletionNet() : CompletionNet(0) {}

    explicit CompletionNet(std::uint64_t seed) : spec_(LayerSpec::completion()) {
        spec_.validate();
        std::mt19937_64 rng(seed);
        std::size_t conv_i = 0, norm_i = 0;
        for (const LayerSpec::Entry& e : spec_.entries) {
            if (e.kind != LayerKind::region_conv) continue;
            conv_[conv_i] = detail::make_conv<T>(e.out_ch, e.in_ch, e.kernel, e.stride, rng);
            if (e.batch_norm) norm_[norm_i++] = BatchNormState<T>(e.out_ch);
            ++conv_i;
        }
        // start the head at mid-range so the output clamp is inactive at init
        conv_.back().bias.front() = T(0.5);
    }

    const LayerSpec& spec() const { return spec_; }

    // depth: (1, 1, H, W) normalized to [0, 1] with H, W divisible by 32;
    // map marks the invalid (zero-depth) pixels. Returns the completed depth
    // and the propagated validity map.
    std::pair<Tensor<T>, FilterMap> forward(const Tensor<T>& depth, const FilterMap& map,
                                            NormMode mode = NormMode::infer,
                                            Trace* trace = nullptr,
                                            const RunContext& ctx = {}) const {
        const Shape& s = depth.shape();
        if (s.channels != 1 || s.batch != 1 || s.count() == 0) {
            throw ShapeError("completion: input must be a non-empty (1,1,H,W) tensor");
        }
        if (s.height % 32 != 0 || s.width % 32 != 0) {
            throw ShapeError("completion: dims must be divisible by 32, got " + s.str());
        }
        if (map.height() != s.height || map.width() != s.width) {
            throw ShapeError("completion: map dims do not match input");
        }

        std::array<FilterMap, kLevels + 1> maps;
        maps[0] = map;
        std::array<Tensor<T>, kLevels> enc;
        Tensor<T> cur = depth;
        for (index_t i = 0; i < kLevels; ++i) {
            const ConvParams<T>& p = conv_[static_cast<std::size_t>(i)];
            ConvCache<T>* cache = trace ? &trace->conv[static_cast<std::size_t>(i)] : nullptr;
            Tensor<T> z = region_adaptive_conv_fwd(cur, maps[static_cast<std::size_t>(i)], p, cache, ctx);
            BatchNormCache<T>* ncache = trace ? &trace->norm[static_cast<std::size_t>(i)] : nullptr;
            Tensor<T> y = batch_norm_eval(z, norm_[static_cast<std::size_t>(i)], mode, ncache);
            if (trace) trace->pre_act[static_cast<std::size_t>(i)] = y;
            enc[static_cast<std::size_t>(i)] = leaky_relu(y);
            maps[static_cast<std::size_t>(i) + 1] =
                update_filter_map(maps[static_cast<std::size_t>(i)], p.kernel(), p.stride);
            cur = enc[static_cast<std::size_t>(i)];
        }

        FilterMap valid = maps[kLevels];
        Tensor<T> out;
        for (index_t j = 0; j < kLevels; ++j) {
            const std::size_t ci = static_cast<std::size_t>(kLevels + j);
            const ConvParams<T>& p = conv_[ci];
            Tensor<T> up = upsample_nearest(cur, 2);
            const Tensor<T>& skip = (j < kLevels - 1) ? enc[static_cast<std::size_t>(kLevels - 2 - j)] : depth;
            const FilterMap& skip_map = maps[static_cast<std::size_t>(kLevels - 1 - j)];
            FilterMap gate = filter_map_or(upsample_nearest(valid, 2), skip_map);
            Tensor<T> cat = concat_channels(up, skip);
            ConvCache<T>* cache = trace ? &trace->conv[ci] : nullptr;
            Tensor<T> z = region_adaptive_conv_fwd(cat, gate, p, cache, ctx);
            if (trace) trace->dec_gates[static_cast<std::size_t>(j)] = gate;
            valid = update_filter_map(gate, p.kernel(), 1);
            if (j < kLevels - 1) {
                BatchNormCache<T>* ncache = trace ? &trace->norm[ci] : nullptr;
                Tensor<T> y = batch_norm_eval(z, norm_[ci], mode, ncache);
                if (trace) trace->pre_act[ci] = y;
                cur = leaky_relu(y);
            } else {
                if (trace) trace->head_pre_clamp = z;
                out = clamp(z, T(0), T(1));
            }
        }

        if (trace) {
            trace->input = depth;
            trace->input_map = map;
            trace->enc_maps = maps;
            trace->enc_features = std::move(enc);
        }
        return {std::move(out), std::move(valid)};
    }

    // Accumulates parameter gradients for one traced forward pass.
    void backward(const Tensor<T>& grad_out, const Trace& trace, Grads& grads,
                  const RunContext& ctx = {}) const {
        std::array<Tensor<T>, kLevels> enc_grad; // accumulated per encoder feature
        Tensor<T> g = clamp_bwd(grad_out, trace.head_pre_clamp, T(0), T(1));

        for (index_t j = kLevels - 1; j >= 0; --j) {
            const std::size_t ci = static_cast<std::size_t>(kLevels + j);
            const ConvParams<T>& p = conv_[ci];
            if (j < kLevels - 1) {
                g = leaky_relu_bwd(g, trace.pre_act[ci]);
                BatchNormGrads<T> bg = batch_norm_bwd(g, norm_[ci], trace.norm[ci]);
                grads.norm[ci].add(bg);
                g = std::move(bg.x);
            }
            ConvGrads<T> cg = region_adaptive_conv_bwd(g, trace.conv[ci], p, true, ctx);
            grads.conv[ci].add(cg);
            const index_t up_ch = cg.x.shape().channels -
                                  ((j < kLevels - 1)
                                       ? trace.enc_features[static_cast<std::size_t>(kLevels - 2 - j)].shape().channels
                                       : 1);
            auto [g_up, g_skip] = split_channels(cg.x, up_ch);
            if (j < kLevels - 1) {
                add_into(enc_grad[static_cast<std::size_t>(kLevels - 2 - j)], g_skip);
            } // the raw-input skip of the last stage is a leaf
            Tensor<T> g_down = upsample_nearest_bwd(g_up, 2);
            if (j > 0) {
                g = std::move(g_down);
            } else {
                add_into(enc_grad[kLevels - 1], g_down);
            }
        }

        for (index_t i = kLevels - 1; i >= 0; --i) {
            const std::size_t ci = static_cast<std::size_t>(i);
            Tensor<T> ge = std::move(enc_grad[ci]);
            ge = leaky_relu_bwd(ge, trace.pre_act[ci]);
            BatchNormGrads<T> bg = batch_norm_bwd(ge, norm_[ci], trace.norm[ci]);
            grads.norm[ci].add(bg);
            ConvGrads<T> cg =
                region_adaptive_conv_bwd(bg.x, trace.conv[ci], conv_[ci], /*want_grad_x=*/i > 0, ctx);
            grads.conv[ci].add(cg);
            if (i > 0) add_into(enc_grad[ci - 1], cg.x);
        }
    }

    // Folds the batch statistics recorded in a trace into the running
    // estimates; called once per sample in a fixed order.
    void apply_running_updates(const Trace& trace) {
        for (std::size_t i = 0; i < norm_.size(); ++i) {
            apply_running_update(norm_[i], trace.norm[i].batch_mean, trace.norm[i].batch_var);
        }
    }

    std::vector<ParamRef<T>> param_refs(Grads& grads) {
        std::vector<ParamRef<T>> refs;
        for (std::size_t i = 0; i < conv_.size(); ++i) {
            const std::string name = "aconv" + std::to_string(i + 1);
            detail::append_conv_refs(name, conv_[i], grads.conv[i], refs);
            if (i != conv_.size() - 1) {
                detail::append_norm_refs(name + ".norm", norm_[i], grads.norm[i], refs);
            }
        }
        return refs;
    }

    // Named tensors for checkpointing, running statistics included.
    std::vector<StateRef<T>> named_state() {
        std::vector<StateRef<T>> out;
        for (std::size_t i = 0; i < conv_.size(); ++i) {
            const std::string name = "aconv" + std::to_string(i + 1);
            ConvParams<T>& p = conv_[i];
            out.push_back({name + ".weights", p.weights.shape(), p.weights.data(),
                           p.weights.size()});
            const index_t bn = static_cast<index_t>(p.bias.size());
            out.push_back({name + ".bias", detail::bias_dims(bn), p.bias.data(), bn});
            if (i == conv_.size() - 1) continue;
            BatchNormState<T>& st = norm_[i];
            const index_t c = st.channels();
            const Shape cd = detail::bias_dims(c);
            out.push_back({name + ".norm.gamma", cd, st.gamma.data(), c});
            out.push_back({name + ".norm.beta", cd, st.beta.data(), c});
            out.push_back({name + ".norm.running_mean", cd, st.running_mean.data(), c});
            out.push_back({name + ".norm.running_var", cd, st.running_var.data(), c});
        }
        return out;
    }

private:
    static void add_into(Tensor<T>& dst, const Tensor<T>& src) {
        if (dst.empty()) {
            dst = src;
            return;
        }
        for (index_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
    }

    LayerSpec spec_;
    std::array<ConvParams<T>, 2 * kLevels> conv_;
    std::array<BatchNormState<T>, 2 * kLevels - 1> norm_;
};

} // namespace argbd
