#pragma once

// Chunked parallel-for over an index range. Each task writes only its own
// output slots, so results are identical to the serial order regardless of
// scheduling; callers do any reductions sequentially afterwards.

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace mht::detail {

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_per_thread = 32) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t nthreads =
        std::min<std::size_t>(hw, n / std::max<std::size_t>(1, min_per_thread));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nthreads);
    const std::size_t chunk = (n + nthreads - 1) / nthreads;
    for (std::size_t tix = 0; tix < nthreads; ++tix) {
        pool.emplace_back([&, tix] {
            const std::size_t lo = tix * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[tix] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace mht::detail
