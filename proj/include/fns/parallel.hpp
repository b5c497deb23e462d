#ifndef FNS_PARALLEL_HPP
#define FNS_PARALLEL_HPP

// Minimal fork-join helper for embarrassingly parallel index loops. The
// worker count honors the FNS_THREADS environment variable; results must be
// written to per-index slots so that reductions can stay in deterministic
// index order regardless of the thread count.

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fns {

/** Worker budget: FNS_THREADS if set (minimum 1), else hardware concurrency. */
inline int thread_budget() {
    if (const char* env = std::getenv("FNS_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed >= 1) return parsed;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/** Runs fn(i) for i in [0, count) on up to thread_budget() threads with a
 * static contiguous partition. The first exception thrown by any worker is
 * rethrown on the caller. */
template <class F>
void parallel_for(int count, F&& fn) {
    if (count <= 0) return;
    const int workers = std::min(thread_budget(), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi]() {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fns

#endif  // FNS_PARALLEL_HPP
