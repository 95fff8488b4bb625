#include "nlmvs/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace nlmvs {

namespace {
std::atomic<int> g_workers{0};
}

void set_worker_count(int n) { g_workers.store(n < 0 ? 0 : n); }

int worker_count() {
    int n = g_workers.load();
    if (n == 0) {
        unsigned hc = std::thread::hardware_concurrency();
        n = hc == 0 ? 1 : static_cast<int>(hc);
    }
    return n;
}

void parallel_for(size_t begin, size_t end, const std::function<void(size_t)>& fn) {
    if (end <= begin) return;
    int workers = worker_count();
    size_t count = end - begin;
    if (workers <= 1 || count < 2) {
        for (size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    if (static_cast<size_t>(workers) > count) workers = static_cast<int>(count);
    std::atomic<size_t> next{begin};
    const size_t chunk = std::max<size_t>(1, count / (static_cast<size_t>(workers) * 8));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                size_t lo = next.fetch_add(chunk);
                if (lo >= end) break;
                size_t hi = std::min(end, lo + chunk);
                for (size_t i = lo; i < hi; ++i) fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace nlmvs
