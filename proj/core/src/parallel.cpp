#include "bdsde/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <exception>
#include <mutex>
#include <thread>

namespace bdsde {

namespace {
int g_max_threads = 0; // 0 = pick from hardware
}

void set_max_threads(int n) { g_max_threads = n < 0 ? 0 : n; }

int max_threads() {
    if (g_max_threads > 0) return g_max_threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    const std::int64_t n_chunks = (n + kChunkSize - 1) / kChunkSize;
    const int workers = static_cast<int>(std::min<std::int64_t>(max_threads(), n_chunks));
    if (workers <= 1) {
        for (std::int64_t c = 0; c < n_chunks; ++c)
            fn(c * kChunkSize, std::min(n, (c + 1) * kChunkSize));
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mu;
    auto work = [&] {
        for (;;) {
            const std::int64_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= n_chunks || failed.load(std::memory_order_relaxed)) return;
            try {
                fn(c * kChunkSize, std::min(n, (c + 1) * kChunkSize));
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

void parallel_reduce(std::int64_t n, std::size_t width,
                     const std::function<void(std::int64_t, std::int64_t, std::int64_t, double*)>& fill,
                     double* out) {
    std::memset(out, 0, width * sizeof(double));
    if (n <= 0) return;
    const std::int64_t n_chunks = (n + kChunkSize - 1) / kChunkSize;
    std::vector<double> partials(static_cast<std::size_t>(n_chunks) * width, 0.0);
    parallel_for(n, [&](std::int64_t b, std::int64_t e) {
        const std::int64_t c = b / kChunkSize;
        fill(c, b, e, partials.data() + static_cast<std::size_t>(c) * width);
    });
    // serial combine in chunk order keeps the result independent of scheduling
    for (std::int64_t c = 0; c < n_chunks; ++c) {
        const double* p = partials.data() + static_cast<std::size_t>(c) * width;
        for (std::size_t j = 0; j < width; ++j) out[j] += p[j];
    }
}

} // namespace bdsde
