#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace banditpde {

// Static range partition over worker threads. Results must be written to
// preallocated per-index slots (no shared mutable state), which keeps
// reductions bitwise independent of the thread count.
template <typename F>
void parallel_for(std::int64_t begin, std::int64_t end, int threads, F&& body) {
    const std::int64_t count = end - begin;
    if (threads <= 1 || count < 2) {
        for (std::int64_t i = begin; i < end; ++i) body(i);
        return;
    }
    const int workers = static_cast<int>(std::min<std::int64_t>(threads, count));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::int64_t chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = begin + w * chunk;
        const std::int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::int64_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

inline int default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace banditpde
