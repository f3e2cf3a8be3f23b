#include "pmltm/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace pmltm {

int hardwareThreads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

void parallelFor(std::size_t count, int threads,
                 const std::function<void(std::size_t, std::size_t)>& body) {
    if (count == 0) return;
    if (threads <= 0) threads = hardwareThreads();
    constexpr std::size_t kBlock = 64;
    const std::size_t blocks = (count + kBlock - 1) / kBlock;
    const auto workers = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(threads), blocks));
    if (workers <= 1) {
        body(0, count);
        return;
    }

    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t b = w; b < blocks; b += workers) {
                    const std::size_t begin = b * kBlock;
                    body(begin, std::min(count, begin + kBlock));
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace pmltm
