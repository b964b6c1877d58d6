#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace chshforge {

/// Runs fn(i) for i in [0, n) on up to `threads` worker threads.
/// Indices are split into contiguous blocks; fn must only write to
/// per-index slots so the result is independent of scheduling.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
    }
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; i++) fn(i);
        return;
    }
    std::size_t nthreads = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::size_t chunk = (n + nthreads - 1) / nthreads;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < nthreads; t++) {
        std::size_t lo = t * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; i++) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// Extracts the bits of `value` selected by `mask`, packed toward bit 0
/// (software PEXT).
inline uint64_t extract_bits(uint64_t value, uint64_t mask) {
    uint64_t out = 0;
    int k = 0;
    while (mask) {
        uint64_t low = mask & (~mask + 1);
        if (value & low) out |= uint64_t(1) << k;
        mask ^= low;
        k++;
    }
    return out;
}

/// Inverse of extract_bits: spreads the low bits of `value` into the
/// positions selected by `mask` (software PDEP).
inline uint64_t deposit_bits(uint64_t value, uint64_t mask) {
    uint64_t out = 0;
    int k = 0;
    while (mask) {
        uint64_t low = mask & (~mask + 1);
        if (value & (uint64_t(1) << k)) out |= low;
        mask ^= low;
        k++;
    }
    return out;
}

}  // namespace chshforge
