#include "weylworlds/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace weylworlds {

namespace {

std::atomic<std::size_t> g_override{0};

std::size_t default_threads() {
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("WEYLWORLDS_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
        } catch (...) {
            // malformed value: ignore the cap
        }
    }
    return n;
}

}  // namespace

std::size_t thread_count() {
    const std::size_t o = g_override.load();
    return o > 0 ? o : default_threads();
}

void set_thread_count(std::size_t n) { g_override.store(n); }

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk) {
    if (n == 0) return;
    const std::size_t workers =
        std::min(thread_count(), std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_chunk)));
    if (workers <= 1) {
        body(0, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::exception_ptr> errors(workers);
    auto run = [&body, &errors](std::size_t w, std::size_t b, std::size_t e) {
        try {
            body(b, e);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back(run, w, b, e);
    }
    run(0, 0, std::min(n, chunk));
    for (auto& t : pool) t.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

}  // namespace weylworlds
