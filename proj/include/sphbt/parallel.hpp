#ifndef SPHBT_PARALLEL_HPP
#define SPHBT_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sphbt {

namespace detail {

inline std::atomic<int>& thread_setting() {
    static std::atomic<int> n{[] {
        if (const char* env = std::getenv("SPHBT_THREADS")) {
            const int v = std::atoi(env);
            if (v > 0) return v;
        }
        return 1;
    }()};
    return n;
}

} // namespace detail

/// Worker count used by parallel_for. Defaults to SPHBT_THREADS or 1.
inline int thread_count() { return detail::thread_setting().load(); }
inline void set_thread_count(int n) { detail::thread_setting().store(std::max(1, n)); }

/// Calls f(i) for i in [0, n). Each index is handled by exactly one worker,
/// so results do not depend on the worker count as long as f(i) only writes
/// data owned by i.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        try {
            for (std::size_t i = next++; i < n; i = next++) f(i);
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = n;
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace sphbt

#endif
