#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cattest {

/// Run `fn(worker, index)` for every index in [0, count) on up to `workers` threads.
/// Indices are handed out dynamically, so `fn` must write only to index-owned state
/// (or worker-owned scratch) for results to be schedule independent.
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(0u, i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                        fn(w, i);
                    }
                } catch (...) {
                    std::lock_guard guard(failure_lock);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                    next.store(count);
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace cattest
