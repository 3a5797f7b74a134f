#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace xxdeph {

inline int resolve_threads(int threads) {
    if (threads > 0) return threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Static partition of [0, n) into contiguous chunks; fn(begin, end) per chunk.
// Results must be written to disjoint slots so the outcome is independent of the split.
template <class F>
void parallel_for(std::size_t n, int threads, F&& fn) {
    int nt = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1));
    if (nt <= 1 || n < 2) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    std::size_t chunk = (n + nt - 1) / nt;
    for (int k = 0; k < nt; ++k) {
        std::size_t b = k * chunk, e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, k, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                errs[k] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

} // namespace xxdeph
