#pragma once

#include <atomic>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace kbm {

/// Run fn(begin, end) over fixed-size chunks of [0, n). Chunk boundaries do
/// not depend on the thread count, and chunks write to disjoint ranges, so
/// results are identical for any level of parallelism.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t chunk, int threads, Fn&& fn) {
    if (n == 0) return;
    if (threads <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        threads = hw == 0 ? 1 : static_cast<int>(hw);
    }
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    if (threads == 1 || n_chunks == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            fn(c * chunk, std::min(n, (c + 1) * chunk));
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= n_chunks) return;
                fn(c * chunk, std::min(n, (c + 1) * chunk));
            }
        });
    }
    for (auto& th : pool) th.join();
}

/// Balanced pairwise tree sum: deterministic, and exact (all combines are
/// x + x) whenever the inputs are identical and the length is a power of
/// two, which the "std_err is exactly zero" cases rely on.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() == 0) return 0.0;
    if (v.size() == 1) return v[0];
    if (v.size() == 2) return v[0] + v[1];
    const std::size_t mid = v.size() / 2;
    return pairwise_sum(v.first(mid)) + pairwise_sum(v.subspan(mid));
}

} // namespace kbm
