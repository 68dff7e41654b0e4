#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace swarmsim {

/// The single seeded random stream of a run.
///
/// Draws go through our own bounded-integer reduction on top of the raw
/// mt19937_64 output, so sequences are identical across standard library
/// implementations (std::uniform_int_distribution is not portable).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform index in [0, n). n == 0 is a fault.
    std::size_t draw_uniform(std::size_t n);

    /// k distinct indices from [0, n), uniformly, in draw order.
    std::vector<std::size_t> sample(std::size_t n, std::size_t k);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = draw_uniform(i);
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

} // namespace swarmsim
