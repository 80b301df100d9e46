#ifndef LFS_PARALLEL_HPP
#define LFS_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace lfs {

// Runs fn(0..n-1) on up to `jobs` threads and returns results in index
// order, so the output is identical for any jobs >= 1. fn must be safe to
// call concurrently for distinct indices.
template <typename T>
std::vector<T> parallel_map(std::size_t n, std::size_t jobs,
                            const std::function<T(std::size_t)>& fn) {
    std::vector<T> out(n);
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            out[i] = fn(i);
        }
    };
    std::vector<std::thread> threads;
    const std::size_t k = std::min(jobs, n);
    threads.reserve(k);
    for (std::size_t t = 0; t < k; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    return out;
}

} // namespace lfs

#endif
