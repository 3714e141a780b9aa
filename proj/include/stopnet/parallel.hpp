#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace stopnet {

// Runs body(i) for i in [0, n) across `threads` workers on contiguous index
// ranges. Callers write results into preallocated per-index slots and reduce
// sequentially afterwards, so the outcome is independent of the thread count.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace stopnet
