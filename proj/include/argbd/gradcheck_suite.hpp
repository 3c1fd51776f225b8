#pragma once

#include <random>

#include "argbd/completion.hpp"
#include "argbd/grad_check.hpp"
#include "argbd/losses.hpp"
#include "argbd/super_resolution.hpp"

namespace argbd {

// Finite-difference drivers for every parameterized operation, shared by the
// diagnostics subcommand and the test suites. Each trial builds a random
// 64-bit instance, reduces the output through a fixed random weighting to a
// scalar, computes analytic gradients through the backward pass and compares
// them entry by entry against central differences.
namespace gradcheck {

inline constexpr double kOpTolerance = 1e-4;
inline constexpr double kLossTolerance = 1e-6;

namespace detail {

inline Tensor<double> random_tensor(Shape s, std::mt19937_64& rng, double scale = 1.0) {
    Tensor<double> t(s);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (index_t i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
    return t;
}

inline FilterMap random_map(index_t h, index_t w, std::mt19937_64& rng, double p_valid = 0.7) {
    FilterMap m(h, w, 0);
    std::bernoulli_distribution dist(p_valid);
    for (index_t y = 0; y < h; ++y) {
        for (index_t x = 0; x < w; ++x) m.set(y, x, dist(rng) ? 1 : 0);
    }
    return m;
}

// Scalar reduction of a tensor through fixed weights so every output entry
// influences the checked loss.
struct WeightedSum {
    Tensor<double> c;
    explicit WeightedSum(Shape s, std::mt19937_64& rng) : c(random_tensor(s, rng)) {}
    double operator()(const Tensor<double>& out) const {
        double sum = 0.0;
        for (index_t i = 0; i < out.size(); ++i) sum += c.data()[i] * out.data()[i];
        return sum;
    }
};

} // namespace detail

inline GradCheckReport check_region_conv(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> stride_d(1, 2);
    const index_t k = rng() % 2 ? 3 : 5;
    ConvParams<double> p = argbd::detail::make_conv<double>(3, 2, k, stride_d(rng), rng);
    Tensor<double> x = detail::random_tensor({1, 2, 8, 7}, rng);
    FilterMap map = detail::random_map(8, 7, rng);

    ConvCache<double> cache;
    Tensor<double> out0 = region_adaptive_conv_fwd(x, map, p, &cache);
    detail::WeightedSum reduce(out0.shape(), rng);
    ConvGrads<double> g = region_adaptive_conv_bwd(reduce.c, cache, p);

    std::vector<ParamRef<double>> refs;
    refs.push_back({"weights", p.weights.shape(), p.weights.data(), g.w.data(), p.weights.size()});
    refs.push_back({"bias", argbd::detail::bias_dims(3), p.bias.data(), g.b.data(), 3});
    refs.push_back({"input", x.shape(), x.data(), g.x.data(), x.size()});
    auto loss = [&]() { return reduce(region_adaptive_conv_fwd(x, map, p)); };
    return grad_check(loss, refs);
}

inline GradCheckReport check_depth_conv(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ConvParams<double> p = argbd::detail::make_conv<double>(3, 2, 3, 1, rng);
    Tensor<double> x = detail::random_tensor({1, 2, 7, 8}, rng);
    // a few flat plateaus so both gate outcomes appear
    Tensor<double> guide(1, 1, 7, 8);
    std::uniform_int_distribution<int> level(0, 3);
    for (index_t i = 0; i < guide.size(); ++i) guide.data()[i] = 0.25 * level(rng);
    DepthGateConfig cfg;

    ConvCache<double> cache;
    Tensor<double> out0 = depth_adaptive_conv_fwd(x, guide, p, cfg, &cache);
    detail::WeightedSum reduce(out0.shape(), rng);
    ConvGrads<double> g = depth_adaptive_conv_bwd(reduce.c, cache, p);

    std::vector<ParamRef<double>> refs;
    refs.push_back({"weights", p.weights.shape(), p.weights.data(), g.w.data(), p.weights.size()});
    refs.push_back({"bias", argbd::detail::bias_dims(3), p.bias.data(), g.b.data(), 3});
    refs.push_back({"input", x.shape(), x.data(), g.x.data(), x.size()});
    auto loss = [&]() { return reduce(depth_adaptive_conv_fwd(x, guide, p, cfg)); };
    return grad_check(loss, refs);
}

inline GradCheckReport check_batch_norm(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Tensor<double> x = detail::random_tensor({2, 3, 4, 5}, rng);
    BatchNormState<double> st(3);
    std::uniform_real_distribution<double> d(0.5, 1.5);
    for (auto& g : st.gamma) g = d(rng);
    for (auto& b : st.beta) b = d(rng) - 1.0;

    BatchNormCache<double> cache;
    Tensor<double> out0 = batch_norm_eval(x, st, NormMode::train, &cache);
    detail::WeightedSum reduce(out0.shape(), rng);
    BatchNormGrads<double> g = batch_norm_bwd(reduce.c, st, cache);

    std::vector<ParamRef<double>> refs;
    refs.push_back({"gamma", argbd::detail::bias_dims(3), st.gamma.data(), g.gamma.data(), 3});
    refs.push_back({"beta", argbd::detail::bias_dims(3), st.beta.data(), g.beta.data(), 3});
    refs.push_back({"input", x.shape(), x.data(), g.x.data(), x.size()});
    auto loss = [&]() { return reduce(batch_norm_eval(x, st, NormMode::train)); };
    return grad_check(loss, refs);
}

inline GradCheckReport check_conv1x1(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ConvParams<double> p = argbd::detail::make_conv<double>(2, 4, 1, 1, rng);
    Tensor<double> x = detail::random_tensor({1, 4, 5, 6}, rng);

    Tensor<double> out0 = conv1x1_fwd(x, p.weights, p.bias);
    detail::WeightedSum reduce(out0.shape(), rng);
    Conv1x1Grads<double> g = conv1x1_bwd(reduce.c, x, p.weights);

    std::vector<ParamRef<double>> refs;
    refs.push_back({"weights", p.weights.shape(), p.weights.data(), g.w.data(), p.weights.size()});
    refs.push_back({"bias", argbd::detail::bias_dims(2), p.bias.data(), g.b.data(), 2});
    refs.push_back({"input", x.shape(), x.data(), g.x.data(), x.size()});
    auto loss = [&]() { return reduce(conv1x1_fwd(x, p.weights, p.bias)); };
    return grad_check(loss, refs);
}

// The shuffle path has no parameters: the input gradient of the permutation
// composed with the tanh head must match differences exactly up to rounding.
inline GradCheckReport check_pixel_shuffle(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const index_t r = 2;
    Tensor<double> x = detail::random_tensor({1, 8, 3, 4}, rng);

    Tensor<double> out0 = pixel_shuffle(x, r);
    detail::WeightedSum reduce(out0.shape(), rng);
    Tensor<double> gx = pixel_shuffle_bwd(reduce.c, r);

    std::vector<ParamRef<double>> refs;
    refs.push_back({"input", x.shape(), x.data(), gx.data(), x.size()});
    auto loss = [&]() { return reduce(pixel_shuffle(x, r)); };
    return grad_check(loss, refs);
}

inline GradCheckReport check_leaky_relu(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Tensor<double> x = detail::random_tensor({1, 2, 4, 5}, rng);
    // keep entries away from the kink, central differences straddle it
    for (index_t i = 0; i < x.size(); ++i) {
        if (std::abs(x.data()[i]) < 1e-3) x.data()[i] = 0.1;
    }
    Tensor<double> out0 = leaky_relu(x);
    detail::WeightedSum reduce(out0.shape(), rng);
    Tensor<double> gx = leaky_relu_bwd(reduce.c, x);

    std::vector<ParamRef<double>> refs;
    refs.push_back({"input", x.shape(), x.data(), gx.data(), x.size()});
    auto loss = [&]() { return reduce(leaky_relu(x)); };
    return grad_check(loss, refs);
}

inline GradCheckReport check_tanh_head(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Tensor<double> x = detail::random_tensor({1, 1, 4, 5}, rng);
    Tensor<double> out0 = tanh_to_unit(x);
    detail::WeightedSum reduce(out0.shape(), rng);
    Tensor<double> gx = tanh_to_unit_bwd(reduce.c, x);

    std::vector<ParamRef<double>> refs;
    refs.push_back({"input", x.shape(), x.data(), gx.data(), x.size()});
    auto loss = [&]() { return reduce(tanh_to_unit(x)); };
    return grad_check(loss, refs);
}

enum class LossKind { valid, invalid, completion, sr };

inline GradCheckReport check_loss(LossKind kind, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Tensor<double> gt = detail::random_tensor({1, 1, 6, 6}, rng, 0.5);
    Tensor<double> out = detail::random_tensor({1, 1, 6, 6}, rng, 0.5);
    FilterMap map = detail::random_map(6, 6, rng);

    auto eval = [&]() -> LossValue<double> {
        switch (kind) {
            case LossKind::valid: return loss_valid(gt, out, map);
            case LossKind::invalid: return loss_invalid(gt, out, map);
            case LossKind::completion: return loss_completion(gt, out, map);
            case LossKind::sr: return loss_sr(gt, out, index_t(2));
        }
        throw ConfigError("unknown loss kind");
    };
    LossValue<double> l0 = eval();
    std::vector<ParamRef<double>> refs;
    refs.push_back({"prediction", out.shape(), out.data(), l0.grad.data(), out.size()});
    auto loss = [&]() { return eval().value; };
    return grad_check(loss, refs);
}

// A miniature completion-style network checked end to end: two gated
// stride-2 encoder layers with normalization and activation, one decoder
// stage with up-sample, concat and gated convolution, and a clamped head.
inline GradCheckReport check_miniature_completion(std::uint64_t seed, index_t size = 32) {
    std::mt19937_64 rng(seed);
    ConvParams<double> enc1 = argbd::detail::make_conv<double>(3, 1, 3, 2, rng);
    ConvParams<double> enc2 = argbd::detail::make_conv<double>(4, 3, 3, 2, rng);
    ConvParams<double> dec = argbd::detail::make_conv<double>(1, 4 + 3, 3, 1, rng);
    dec.bias[0] = 0.5;
    BatchNormState<double> bn1(3), bn2(4);
    Tensor<double> depth(1, 1, size, size);
    std::uniform_real_distribution<double> d01(0.05, 0.95);
    for (index_t i = 0; i < depth.size(); ++i) depth.data()[i] = d01(rng);
    FilterMap map = detail::random_map(size, size, rng, 0.85);
    for (index_t y = 0; y < size; ++y) {
        for (index_t x = 0; x < size; ++x) {
            if (!map.at(y, x)) depth(0, 0, y, x) = 0.0;
        }
    }
    Tensor<double> target = detail::random_tensor({1, 1, size / 2, size / 2}, rng, 0.5);
    for (index_t i = 0; i < target.size(); ++i) target.data()[i] = std::abs(target.data()[i]);

    const FilterMap map1 = update_filter_map(map, 3, 2);
    const FilterMap map2 = update_filter_map(map1, 3, 2);

    struct Pass {
        ConvCache<double> c1, c2, c3;
        BatchNormCache<double> b1, b2;
        Tensor<double> y1, y2, e1, e2, pre_clamp;
        FilterMap gate;
    };
    auto forward = [&](Pass* pass) {
        Pass local;
        Pass& p = pass ? *pass : local;
        Tensor<double> z1 = region_adaptive_conv_fwd(depth, map, enc1, &p.c1);
        p.y1 = batch_norm_eval(z1, bn1, NormMode::train, &p.b1);
        p.e1 = leaky_relu(p.y1);
        Tensor<double> z2 = region_adaptive_conv_fwd(p.e1, map1, enc2, &p.c2);
        p.y2 = batch_norm_eval(z2, bn2, NormMode::train, &p.b2);
        p.e2 = leaky_relu(p.y2);
        Tensor<double> up = upsample_nearest(p.e2, 2);
        p.gate = filter_map_or(upsample_nearest(map2, 2), map1);
        Tensor<double> cat = concat_channels(up, p.e1);
        Tensor<double> z3 = region_adaptive_conv_fwd(cat, p.gate, dec, &p.c3);
        p.pre_clamp = z3;
        Tensor<double> out = clamp(z3, 0.0, 1.0);
        return loss_completion(target, out, map1);
    };

    Pass pass;
    LossValue<double> l0 = forward(&pass);
    Tensor<double> g = clamp_bwd(l0.grad, pass.pre_clamp, 0.0, 1.0);
    ConvGrads<double> g3 = region_adaptive_conv_bwd(g, pass.c3, dec);
    auto [g_up, g_skip1] = split_channels(g3.x, 4);
    Tensor<double> g_e2 = upsample_nearest_bwd(g_up, 2);
    Tensor<double> g_y2 = leaky_relu_bwd(g_e2, pass.y2);
    BatchNormGrads<double> gb2 = batch_norm_bwd(g_y2, bn2, pass.b2);
    ConvGrads<double> g2 = region_adaptive_conv_bwd(gb2.x, pass.c2, enc2);
    Tensor<double> g_e1 = g2.x;
    for (index_t i = 0; i < g_e1.size(); ++i) g_e1.data()[i] += g_skip1.data()[i];
    Tensor<double> g_y1 = leaky_relu_bwd(g_e1, pass.y1);
    BatchNormGrads<double> gb1 = batch_norm_bwd(g_y1, bn1, pass.b1);
    ConvGrads<double> g1 = region_adaptive_conv_bwd(gb1.x, pass.c1, enc1, false);

    std::vector<ParamRef<double>> refs;
    refs.push_back({"enc1.weights", enc1.weights.shape(), enc1.weights.data(), g1.w.data(),
                    enc1.weights.size()});
    refs.push_back({"enc1.bias", argbd::detail::bias_dims(3), enc1.bias.data(), g1.b.data(), 3});
    refs.push_back({"enc1.norm.gamma", argbd::detail::bias_dims(3), bn1.gamma.data(),
                    gb1.gamma.data(), 3});
    refs.push_back({"enc1.norm.beta", argbd::detail::bias_dims(3), bn1.beta.data(),
                    gb1.beta.data(), 3});
    refs.push_back({"enc2.weights", enc2.weights.shape(), enc2.weights.data(), g2.w.data(),
                    enc2.weights.size()});
    refs.push_back({"enc2.bias", argbd::detail::bias_dims(4), enc2.bias.data(), g2.b.data(), 4});
    refs.push_back({"enc2.norm.gamma", argbd::detail::bias_dims(4), bn2.gamma.data(),
                    gb2.gamma.data(), 4});
    refs.push_back({"enc2.norm.beta", argbd::detail::bias_dims(4), bn2.beta.data(),
                    gb2.beta.data(), 4});
    refs.push_back({"dec.weights", dec.weights.shape(), dec.weights.data(), g3.w.data(),
                    dec.weights.size()});
    refs.push_back({"dec.bias", argbd::detail::bias_dims(1), dec.bias.data(), g3.b.data(), 1});
    auto loss = [&]() { return forward(nullptr).value; };
    return grad_check(loss, refs, 1e-6, 40);
}

struct SuiteEntry {
    std::string op;
    double tolerance;
    GradCheckReport (*run)(std::uint64_t seed);
};

inline const std::vector<SuiteEntry>& suite() {
    static const std::vector<SuiteEntry> entries = {
        {"region-conv", kOpTolerance, &check_region_conv},
        {"depth-conv", kOpTolerance, &check_depth_conv},
        {"batch-norm", kOpTolerance, &check_batch_norm},
        {"conv1x1", kOpTolerance, &check_conv1x1},
        {"pixel-shuffle", 1e-7, &check_pixel_shuffle},
        {"leaky-relu", kOpTolerance, &check_leaky_relu},
        {"tanh-head", kOpTolerance, &check_tanh_head},
        {"loss-valid", kLossTolerance,
         [](std::uint64_t s) { return check_loss(LossKind::valid, s); }},
        {"loss-invalid", kLossTolerance,
         [](std::uint64_t s) { return check_loss(LossKind::invalid, s); }},
        {"loss-completion", kLossTolerance,
         [](std::uint64_t s) { return check_loss(LossKind::completion, s); }},
        {"loss-sr", kLossTolerance, [](std::uint64_t s) { return check_loss(LossKind::sr, s); }},
    };
    return entries;
}

inline const SuiteEntry& find_op(const std::string& op) {
    for (const SuiteEntry& e : suite()) {
        if (e.op == op) return e;
    }
    throw ConfigError("gradcheck: unknown op '" + op + "'");
}

} // namespace gradcheck
} // namespace argbd
