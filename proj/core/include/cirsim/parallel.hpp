#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cirsim {

// 0 means "one per hardware thread".
inline unsigned resolve_threads(unsigned requested) noexcept {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Evaluates fn(i) for i in [0, count) on `threads` workers and returns the
 * results in index order. Work is handed out one index at a time; because the
 * output is keyed by index, the result does not depend on the thread count.
 * The first exception thrown by any worker is rethrown after all workers stop.
 */
template <typename Fn>
auto parallel_map(std::uint64_t count, unsigned threads, Fn&& fn) {
    using Result = decltype(fn(std::uint64_t{}));
    std::vector<Result> out(count);
    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };

    const unsigned n = static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(threads), std::max<std::uint64_t>(count, 1)));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n);
        for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace cirsim
