#include "fracperim/util.hpp"

#include <cassert>
#include <thread>

namespace fp {

double unit_ball_volume(int dim) {
    if (dim < 1)
        throw ParameterError("unit_ball_volume: dim must be >= 1");
    const double w =
        std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
    // the artifact only ever runs d <= 3; pin those constants
    if (dim == 1)
        assert(std::abs(w - 2.0) < 1e-14);
    if (dim == 2)
        assert(std::abs(w - std::numbers::pi) < 1e-14);
    if (dim == 3)
        assert(std::abs(w - 4.0 * std::numbers::pi / 3.0) < 1e-14);
    return w;
}

int& worker_threads() {
    static int n = 1;
    return n;
}

double parallel_reduce_blocks(
    std::size_t n, std::size_t block_size,
    const std::function<double(std::size_t, std::size_t)>& block_sum) {
    if (n == 0)
        return 0.0;
    if (block_size == 0)
        block_size = 1;
    const std::size_t nblocks = (n + block_size - 1) / block_size;
    std::vector<double> partial(nblocks, 0.0);

    const int threads = std::max(1, worker_threads());
    if (threads == 1 || nblocks == 1) {
        for (std::size_t b = 0; b < nblocks; ++b) {
            const std::size_t lo = b * block_size;
            partial[b] = block_sum(lo, std::min(n, lo + block_size));
        }
    } else {
        std::vector<std::thread> pool;
        const int nw = static_cast<int>(
            std::min<std::size_t>(static_cast<std::size_t>(threads), nblocks));
        pool.reserve(static_cast<std::size_t>(nw));
        for (int w = 0; w < nw; ++w) {
            pool.emplace_back([&, w]() {
                for (std::size_t b = static_cast<std::size_t>(w); b < nblocks;
                     b += static_cast<std::size_t>(nw)) {
                    const std::size_t lo = b * block_size;
                    partial[b] = block_sum(lo, std::min(n, lo + block_size));
                }
            });
        }
        for (auto& t : pool)
            t.join();
    }

    NeumaierSum total;
    for (double v : partial)
        total.add(v);
    return total.value();
}

} // namespace fp
