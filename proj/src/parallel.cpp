#include "fmtt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fmtt {

int worker_count(int requested) {
    int cap = 0;
    if (const char* env = std::getenv("FMTT_THREADS")) {
        try {
            cap = std::stoi(env);
        } catch (...) {
            cap = 0;
        }
    }
    int n = requested > 0 ? requested : (cap > 0 ? cap : static_cast<int>(std::thread::hardware_concurrency()));
    if (cap > 0) n = std::min(n, cap);
    return std::max(1, n);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    const auto threads = static_cast<std::size_t>(std::max(1, workers));
    if (threads == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t count = std::min(threads, n);
    pool.reserve(count - 1);
    for (std::size_t k = 1; k < count; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace fmtt
