#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>

/**
 * @file rng.hpp
 * @brief Counter-based SplitMix64 streams.
 *
 * A stream is identified by a 64-bit key derived from `(seed, stream_id)`.
 * The k-th output of a stream is `mix64(key + (k + 1) * golden_gamma)`, so a
 * stream is a pure function of its key and counter. All samplers in this file
 * are written out explicitly (no `<random>` distributions) so that draws are
 * identical across standard library implementations.
 */

namespace cattest {

namespace detail {

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Combine a seed with a stream id into a new independent 64-bit key.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id) noexcept {
    return detail::mix64(detail::mix64(seed ^ 0x5851F42D4C957F2DULL) + detail::golden_gamma * (stream_id + 1));
}

template <typename... Ids>
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t first, std::uint64_t second, Ids... rest) noexcept {
    return derive_seed(derive_seed(seed, first), second, static_cast<std::uint64_t>(rest)...);
}

class CounterRng {
public:
    using result_type = std::uint64_t;

    constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        ++counter_;
        return detail::mix64(key_ + counter_ * detail::golden_gamma);
    }

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t counter() const noexcept { return counter_; }

    /// Uniform integer in [0, bound). Lemire's multiply-and-reject; bound must be > 0.
    constexpr std::uint64_t uniform_below(std::uint64_t bound) noexcept {
        auto product = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                product = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform01() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    constexpr bool bernoulli(double p) noexcept { return uniform01() < p; }

    /// Bin(trials, p) as a sum of Bernoulli draws; trials are small here (<= a few dozen).
    constexpr int binomial(int trials, double p) noexcept {
        int hits = 0;
        for (int t = 0; t < trials; ++t) {
            hits += bernoulli(p) ? 1 : 0;
        }
        return hits;
    }

    /// Fisher-Yates, walking from the back. Position i is final once step i is done.
    template <typename T>
    constexpr void shuffle(std::span<T> values) noexcept {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = uniform_below(i);
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Reproducible, independent stream for `(seed, stream_id)`.
constexpr CounterRng rng_stream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
    return CounterRng(derive_seed(seed, stream_id));
}

} // namespace cattest
