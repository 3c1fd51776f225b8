#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "argbd/adam.hpp"
#include "argbd/checkpoint.hpp"
#include "argbd/completion.hpp"
#include "argbd/losses.hpp"
#include "argbd/super_resolution.hpp"

namespace argbd {

template <typename T>
struct CompletionSample {
    Tensor<T> input;  // corrupted depth, normalized, holes zeroed
    FilterMap map;    // 1 = survived the corruption
    Tensor<T> target; // complete ground truth, normalized
};

template <typename T>
struct SrSample {
    Tensor<T> low;  // (1,1,H,W) low-resolution depth
    Tensor<T> high; // (1,1,rH,rW) ground truth
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    Checkpoint best;
    std::vector<EpochRecord> log;
    double initial_val_loss = 0.0; // untrained model on the held-out split
    double best_val_loss = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

namespace detail {

inline void check_finite(double loss, int epoch, index_t sample) {
    if (!std::isfinite(loss)) {
        throw std::runtime_error("training aborted: non-finite loss " + std::to_string(loss) +
                                 " at epoch " + std::to_string(epoch) + ", sample " +
                                 std::to_string(sample));
    }
}

// Deterministic train/validation split: the tail fraction is held out.
inline std::pair<std::vector<index_t>, std::vector<index_t>> split_indices(index_t n,
                                                                           double fraction) {
    std::vector<index_t> train, val;
    index_t n_val = static_cast<index_t>(std::floor(n * fraction));
    if (n - n_val < 1) n_val = n - 1;
    for (index_t i = 0; i < n - n_val; ++i) train.push_back(i);
    for (index_t i = n - n_val; i < n; ++i) val.push_back(i);
    return {train, val};
}

} // namespace detail

// Supervised training of the completion network with the combined
// valid/invalid loss. The loss masks by the synthetic corruption map: those
// are the pixels actually removed, and ground truth exists on both sides of
// that split. Batch items run in parallel against constant weights; their
// gradients and statistics are folded in sample order, so the trajectory is
// reproducible for a fixed seed regardless of thread count.
template <typename T>
TrainResult train_completion(CompletionNet<T>& net,
                             const std::vector<CompletionSample<T>>& dataset,
                             const TrainConfig& cfg, const LossWeights& weights = {},
                             const RunContext& ctx = {}, const EpochCallback& on_epoch = {}) {
    cfg.validate();
    if (dataset.empty()) throw ConfigError("train_completion: empty dataset");

    auto [train_idx, val_idx] = detail::split_indices(static_cast<index_t>(dataset.size()),
                                                      cfg.validation_fraction);
    typename CompletionNet<T>::Grads master, scratch;
    master.init_like(net);
    AdamState<T> adam;
    std::vector<ParamRef<T>> refs = net.param_refs(master);
    adam.init_like(refs);

    auto eval_split = [&](const std::vector<index_t>& idx) {
        if (idx.empty()) return 0.0;
        double sum = 0.0;
        for (index_t i : idx) {
            const CompletionSample<T>& s = dataset[static_cast<std::size_t>(i)];
            auto [out, out_map] = net.forward(s.input, s.map, NormMode::infer, nullptr, ctx);
            sum += loss_completion(s.target, out, s.map, weights).value;
        }
        return sum / static_cast<double>(idx.size());
    };

    TrainResult result;
    result.initial_val_loss = eval_split(val_idx.empty() ? train_idx : val_idx);
    result.best_val_loss = result.initial_val_loss;
    result.best = checkpoint_from_network<T>(net, NetworkKind::completion, 0, 0, {});

    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<index_t> order = train_idx;
    const int workers = ctx.deterministic && cfg.batch_size == 1 ? 1 : ctx.resolved_threads();

    struct SampleOut {
        typename CompletionNet<T>::Trace trace;
        typename CompletionNet<T>::Grads grads;
        double loss = 0.0;
        bool used = false;
    };
    std::vector<SampleOut> slots(static_cast<std::size_t>(cfg.batch_size));
    for (auto& s : slots) s.grads.init_like(net);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double train_loss_sum = 0.0;
        index_t train_loss_n = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
            const index_t batch_n =
                std::min<index_t>(cfg.batch_size, static_cast<index_t>(order.size() - at));
            RunContext per_sample = ctx;
            per_sample.threads = std::max(1, workers / static_cast<int>(batch_n));
            detail::parallel_for_ranges(batch_n, workers, [&](index_t lo, index_t hi) {
                for (index_t i = lo; i < hi; ++i) {
                    SampleOut& slot = slots[static_cast<std::size_t>(i)];
                    const CompletionSample<T>& s =
                        dataset[static_cast<std::size_t>(order[at + static_cast<std::size_t>(i)])];
                    auto [out, out_map] =
                        net.forward(s.input, s.map, NormMode::train, &slot.trace, per_sample);
                    LossValue<T> loss = loss_completion(s.target, out, s.map, weights);
                    slot.loss = loss.value;
                    slot.grads.zero();
                    net.backward(loss.grad, slot.trace, slot.grads, per_sample);
                    slot.used = true;
                }
            });
            master.zero();
            for (index_t i = 0; i < batch_n; ++i) {
                SampleOut& slot = slots[static_cast<std::size_t>(i)];
                detail::check_finite(slot.loss, epoch, order[at + static_cast<std::size_t>(i)]);
                train_loss_sum += slot.loss;
                ++train_loss_n;
                master.add(slot.grads);
                net.apply_running_updates(slot.trace);
            }
            // batch loss is the sample mean, so gradients scale accordingly
            const T inv = T(1) / static_cast<T>(batch_n);
            for (ParamRef<T>& r : refs) {
                for (index_t i = 0; i < r.count; ++i) r.grad[i] *= inv;
            }
            adam_step(refs, adam, cfg);
        }
        const double val_loss = val_idx.empty() ? train_loss_sum / std::max<index_t>(1, train_loss_n)
                                                : eval_split(val_idx);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = train_loss_sum / std::max<index_t>(1, train_loss_n);
        rec.val_loss = val_loss;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (val_loss <= result.best_val_loss || result.log.size() == 1) {
            result.best_val_loss = val_loss;
            std::vector<float> history;
            for (const EpochRecord& r : result.log) history.push_back(static_cast<float>(r.val_loss));
            result.best = checkpoint_from_network<T>(net, NetworkKind::completion, 0,
                                                     static_cast<std::uint32_t>(epoch),
                                                     std::move(history));
        }
    }
    return result;
}

// Training of the super-resolution network on low/high-resolution pairs.
template <typename T>
TrainResult train_sr(SrNet<T>& net, const std::vector<SrSample<T>>& dataset,
                     const TrainConfig& cfg, const RunContext& ctx = {},
                     const EpochCallback& on_epoch = {}) {
    cfg.validate();
    if (dataset.empty()) throw ConfigError("train_sr: empty dataset");
    const index_t r = net.ratio();

    auto [train_idx, val_idx] = detail::split_indices(static_cast<index_t>(dataset.size()),
                                                      cfg.validation_fraction);
    typename SrNet<T>::Grads master;
    master.init_like(net);
    AdamState<T> adam;
    std::vector<ParamRef<T>> refs = net.param_refs(master);
    adam.init_like(refs);

    auto eval_split = [&](const std::vector<index_t>& idx) {
        if (idx.empty()) return 0.0;
        double sum = 0.0;
        for (index_t i : idx) {
            const SrSample<T>& s = dataset[static_cast<std::size_t>(i)];
            Tensor<T> out = net.forward(s.low, nullptr, ctx);
            sum += loss_sr(s.high, out, r).value;
        }
        return sum / static_cast<double>(idx.size());
    };

    TrainResult result;
    result.initial_val_loss = eval_split(val_idx.empty() ? train_idx : val_idx);
    result.best_val_loss = result.initial_val_loss;
    result.best = checkpoint_from_network<T>(net, NetworkKind::super_resolution,
                                             static_cast<std::uint32_t>(r), 0, {});

    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<index_t> order = train_idx;
    const int workers = ctx.resolved_threads();

    struct SampleOut {
        typename SrNet<T>::Trace trace;
        typename SrNet<T>::Grads grads;
        double loss = 0.0;
    };
    std::vector<SampleOut> slots(static_cast<std::size_t>(cfg.batch_size));
    for (auto& s : slots) s.grads.init_like(net);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double train_loss_sum = 0.0;
        index_t train_loss_n = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
            const index_t batch_n =
                std::min<index_t>(cfg.batch_size, static_cast<index_t>(order.size() - at));
            RunContext per_sample = ctx;
            per_sample.threads = std::max(1, workers / static_cast<int>(batch_n));
            detail::parallel_for_ranges(batch_n, workers, [&](index_t lo, index_t hi) {
                for (index_t i = lo; i < hi; ++i) {
                    SampleOut& slot = slots[static_cast<std::size_t>(i)];
                    const SrSample<T>& s =
                        dataset[static_cast<std::size_t>(order[at + static_cast<std::size_t>(i)])];
                    Tensor<T> out = net.forward(s.low, &slot.trace, per_sample);
                    LossValue<T> loss = loss_sr(s.high, out, r);
                    slot.loss = loss.value;
                    slot.grads.zero();
                    net.backward(loss.grad, slot.trace, slot.grads, per_sample);
                }
            });
            master.zero();
            for (index_t i = 0; i < batch_n; ++i) {
                detail::check_finite(slots[static_cast<std::size_t>(i)].loss, epoch,
                                     order[at + static_cast<std::size_t>(i)]);
                train_loss_sum += slots[static_cast<std::size_t>(i)].loss;
                ++train_loss_n;
                master.add(slots[static_cast<std::size_t>(i)].grads);
            }
            const T inv = T(1) / static_cast<T>(batch_n);
            for (ParamRef<T>& r2 : refs) {
                for (index_t i = 0; i < r2.count; ++i) r2.grad[i] *= inv;
            }
            adam_step(refs, adam, cfg);
        }
        const double val_loss = val_idx.empty() ? train_loss_sum / std::max<index_t>(1, train_loss_n)
                                                : eval_split(val_idx);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = train_loss_sum / std::max<index_t>(1, train_loss_n);
        rec.val_loss = val_loss;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (val_loss <= result.best_val_loss || result.log.size() == 1) {
            result.best_val_loss = val_loss;
            std::vector<float> history;
            for (const EpochRecord& rr : result.log) history.push_back(static_cast<float>(rr.val_loss));
            result.best = checkpoint_from_network<T>(net, NetworkKind::super_resolution,
                                                     static_cast<std::uint32_t>(r),
                                                     static_cast<std::uint32_t>(epoch),
                                                     std::move(history));
        }
    }
    return result;
}

} // namespace argbd
