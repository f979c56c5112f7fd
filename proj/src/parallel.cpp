#include "semdiff/parallel.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace semdiff {

unsigned thread_cap() {
    if (const char* env = std::getenv("SEMDIFF_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v <= 1) return 1;
        return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

void parallel_rows(std::size_t rows, std::size_t work_per_row,
                   const std::function<void(std::size_t)>& fn) {
    const unsigned cap = thread_cap();
    // Thread spawn only pays off for reasonably large row workloads.
    if (cap <= 1 || rows < 2 || rows * work_per_row < 1u << 16) {
        for (std::size_t r = 0; r < rows; ++r) fn(r);
        return;
    }
    const unsigned n_threads = static_cast<unsigned>(
        std::min<std::size_t>(cap, rows));
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t r = t; r < rows; r += n_threads) fn(r);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace semdiff
