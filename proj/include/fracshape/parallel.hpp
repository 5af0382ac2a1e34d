#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace fracshape {

namespace detail {
inline std::atomic<int>& thread_setting() {
    static std::atomic<int> n{0};
    return n;
}
}  // namespace detail

/// Worker count used by the nonlocal sums. 0 means "all hardware threads".
inline void set_threads(int n) { detail::thread_setting().store(std::max(0, n)); }

inline int threads() {
    int n = detail::thread_setting().load();
    if (n <= 0) {
        static const int hw = static_cast<int>(std::thread::hardware_concurrency());
        n = hw;
    }
    return std::max(1, n);
}

/// Runs fn(i) for i in [0, n). Each index is handled by exactly one worker, so
/// any per-index result is independent of the worker count. `work_per_item` is
/// a rough cost hint; small jobs run inline.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t work_per_item = 1) {
    const auto workers = static_cast<std::size_t>(threads());
    if (workers == 1 || n < 2 || n * work_per_item < (std::size_t{1} << 16)) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t count = std::min(workers, n);
    const std::size_t chunk = (n + count - 1) / count;
    std::vector<std::jthread> pool;
    pool.reserve(count - 1);
    for (std::size_t w = 1; w < count; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (std::size_t i = 0; i < std::min(n, chunk); ++i) fn(i);
}

/// Pairwise (tree) summation with a fixed split rule; the result depends only
/// on the input order.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace fracshape
