#include "mstab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mstab {

namespace {
std::atomic<int> g_threads{1};
}

void set_threads(int n)
{
    if (n <= 0) n = int(std::max(1u, std::thread::hardware_concurrency()));
    g_threads = n;
}

int threads() { return g_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn)
{
    const std::size_t workers = std::min<std::size_t>(n, std::size_t(std::max(1, g_threads.load())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex m;
    auto body = [&] {
        for (;;) {
            std::size_t i = next++;
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(m);
                if (!err) err = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace mstab
