#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace argbd {

using index_t = std::int64_t;

// Shape/argument violations of a documented operation contract.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File and image format failures.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Corrupt, truncated or mismatched checkpoint files.
class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid run configuration (CLI flags, config files, manifests).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Execution settings threaded through every operation that may run in
// parallel. threads == 0 resolves to ARGBD_THREADS or the hardware count.
// All parallel schedules partition output elements so that each element is
// written by exactly one thread with a serial inner accumulation; results are
// therefore bitwise independent of the thread count. The deterministic flag
// additionally pins reductions (losses, statistics) to serial order.
struct RunContext {
    int threads = 0;
    bool deterministic = false;

    int resolved_threads() const {
        if (threads > 0) return threads;
        if (const char* env = std::getenv("ARGBD_THREADS")) {
            int n = std::atoi(env);
            if (n > 0) return n;
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw > 0 ? static_cast<int>(hw) : 1;
    }
};

namespace detail {

// Runs fn(lo, hi) over a partition of [0, n). fn must only write state owned
// by its own range.
template <typename Fn>
void parallel_for_ranges(index_t n, int threads, Fn&& fn) {
    if (n <= 0) return;
    const index_t t = std::min<index_t>(threads, n);
    if (t <= 1) {
        fn(index_t(0), n);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(t) - 1);
    const index_t chunk = (n + t - 1) / t;
    for (index_t i = 1; i < t; ++i) {
        const index_t lo = i * chunk;
        const index_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    fn(index_t(0), std::min(n, chunk));
    for (auto& w : workers) w.join();
}

} // namespace detail

template <typename Fn>
void parallel_for(index_t n, const RunContext& ctx, Fn&& fn) {
    detail::parallel_for_ranges(n, ctx.resolved_threads(), std::forward<Fn>(fn));
}

} // namespace argbd
