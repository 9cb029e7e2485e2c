#include "gradcodec/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

namespace gradcodec {

std::size_t worker_count() {
    std::size_t n = 0;
    if (const char* env = std::getenv("GRADCODEC_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) n = static_cast<std::size_t>(v);
    }
    if (n == 0) {
        n = std::thread::hardware_concurrency();
        if (n == 0) n = 1;
    }
    return n;
}

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& fn, std::size_t chunk) {
    if (begin >= end) return;
    std::size_t total = end - begin;
    std::size_t nchunks = (total + chunk - 1) / chunk;
    std::size_t workers = std::min(worker_count(), nchunks);
    if (workers <= 1) {  // same chunk walk as the threaded path
        for (std::size_t c = 0; c < nchunks; ++c) {
            std::size_t lo = begin + c * chunk;
            fn(lo, std::min(lo + chunk, end));
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= nchunks) break;
            std::size_t lo = begin + c * chunk;
            std::size_t hi = std::min(lo + chunk, end);
            fn(lo, hi);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
}

double parallel_sum(std::size_t begin, std::size_t end,
                    const std::function<double(std::size_t, std::size_t)>& fn, std::size_t chunk) {
    if (begin >= end) return 0.0;
    std::size_t total = end - begin;
    std::size_t nchunks = (total + chunk - 1) / chunk;
    std::vector<double> partial(nchunks, 0.0);
    parallel_for(
        begin, end,
        [&](std::size_t lo, std::size_t hi) { partial[(lo - begin) / chunk] = fn(lo, hi); },
        chunk);
    double acc = 0.0;
    for (double p : partial) acc += p;
    return acc;
}

}  // namespace gradcodec
