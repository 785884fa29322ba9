#include "pfoa/common/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace pfoa {

namespace {
std::atomic<int> g_threads{0};  // 0 = not set yet, resolve lazily
}

void set_thread_count(int n) {
    g_threads.store(n < 1 ? 1 : n);
}

int thread_count() {
    int n = g_threads.load();
    if (n == 0) {
        n = static_cast<int>(std::thread::hardware_concurrency());
        if (n < 1) n = 1;
        g_threads.store(n);
    }
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
}

}  // namespace pfoa
