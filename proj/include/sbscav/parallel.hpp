#ifndef SBSCAV_PARALLEL_HPP
#define SBSCAV_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace sbscav {

/// Worker count: explicit argument wins, then the SBSCAV_JOBS environment
/// variable, then the hardware concurrency.
inline int default_jobs(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SBSCAV_JOBS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(i) for i in [0, n) on a small worker pool.  The first exception
/// is rethrown on the calling thread.
inline void parallel_for(long n, const std::function<void(long)>& fn, int jobs = 0) {
    const int workers = std::min<long>(default_jobs(jobs), n);
    if (workers <= 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const long i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace sbscav

#endif
