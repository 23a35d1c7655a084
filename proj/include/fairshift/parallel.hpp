#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace fairshift {

namespace detail {
inline thread_local bool in_parallel_region = false;
}

/**
 * Calls fn(i) for i in [0, n) on up to hardware_concurrency threads, in contiguous chunks.
 * fn must write only to slot i of its output; the first exception (lowest chunk) is rethrown.
 * Nested calls from a worker run serially.
 */
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = detail::in_parallel_region
                                    ? 1
                                    : std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            detail::in_parallel_region = true;
            try {
                for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace fairshift
