// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cdrflow {

// Global worker cap set once from the CLI --threads flag. Zero means "use
// hardware concurrency". Thread count may only affect wall time, never
// results; every parallel_* call below preserves task-index order on merge.
inline std::atomic<unsigned>& thread_cap() {
    static std::atomic<unsigned> cap{0};
    return cap;
}

inline unsigned effective_threads(size_t task_count) {
    unsigned cap = thread_cap().load(std::memory_order_relaxed);
    if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<size_t>(cap, std::max<size_t>(task_count, 1)));
}

// Runs fn(i) for i in [0, n). Work-stealing by atomic counter; fn must not
// depend on execution order. Exceptions are captured and rethrown once.
template <typename Fn>
void parallel_for(size_t n, Fn&& fn) {
    const unsigned workers = effective_threads(n);
    if (workers <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto body = [&] {
        while (true) {
            const size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                next.store(n, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Maps fn over [0, n) producing one R per index, in index order.
template <typename R, typename Fn>
std::vector<R> parallel_map(size_t n, Fn&& fn) {
    std::vector<R> out(n);
    parallel_for(n, [&](size_t i) { out[i] = fn(i); });
    return out;
}

} // namespace cdrflow
