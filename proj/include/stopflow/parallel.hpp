#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stopflow {

/// Process-wide worker count used by parallel_for when none is given.
/// 0 means std::thread::hardware_concurrency().
void set_default_threads(unsigned n);
unsigned default_threads();

/**
 * Runs body(i) for i in [0, n) on up to `threads` workers using contiguous
 * static chunks. Each index is visited exactly once, so callers that write
 * only to slot i get schedule-independent results. The first exception
 * thrown by any worker is rethrown on the calling thread.
 */
template <class Body>
void parallel_for(std::size_t n, Body&& body, unsigned threads = 0) {
    if (threads == 0) threads = default_threads();
    threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace stopflow
