#pragma once

#include <algorithm>
#include <atomic>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace dynwave {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// SplitMix64 mixer; used to derive independent RNG streams from (seed, id).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 1));
}

inline unsigned default_workers() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

// Runs fn(chunk, begin, end) over [0,n) split into a chunk layout that depends
// only on n. Reductions that combine per-chunk results in chunk order are
// therefore reproducible for any worker count.
inline void parallel_chunks(std::size_t n, unsigned workers,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t chunks = std::min<std::size_t>(n, 256);
    const std::size_t step = (n + chunks - 1) / chunks;
    if (workers == 0) workers = default_workers();
    if (workers <= 1 || chunks == 1) {
        for (std::size_t c = 0; c < chunks; ++c) {
            const std::size_t b = c * step;
            if (b >= n) break;
            fn(c, b, std::min(n, b + step));
        }
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    const unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= chunks || failed.load()) return;
                const std::size_t b = c * step;
                if (b >= n) return;
                try {
                    fn(c, b, std::min(n, b + step));
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace dynwave
