#include "swarmsim/rng.hpp"

#include <numeric>

#include "swarmsim/types.hpp"

namespace swarmsim {

namespace {
__extension__ using u128 = unsigned __int128;
} // namespace

std::size_t RngStream::draw_uniform(std::size_t n) {
    require(n >= 1, "draw_uniform: n must be positive");
    // Lemire's multiply-shift with rejection of the biased low range.
    const std::uint64_t range = n;
    u128 product = static_cast<u128>(gen_()) * range;
    auto low = static_cast<std::uint64_t>(product);
    if (low < range) {
        const std::uint64_t threshold = (0 - range) % range;
        while (low < threshold) {
            product = static_cast<u128>(gen_()) * range;
            low = static_cast<std::uint64_t>(product);
        }
    }
    return static_cast<std::size_t>(product >> 64);
}

std::vector<std::size_t> RngStream::sample(std::size_t n, std::size_t k) {
    require(k <= n, "sample: k exceeds population");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k slots end up uniformly chosen.
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + draw_uniform(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

} // namespace swarmsim
