#pragma once

#include "cattest/batch.hpp"
#include "cattest/contingency.hpp"
#include "cattest/error.hpp"
#include "cattest/rng.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

/**
 * @file datagen.hpp
 * @brief Simulation designs: independent null columns and logistic-link alternatives.
 */

namespace cattest {

enum class Distribution { DiscreteUniform, Binomial };

constexpr std::string_view to_string(Distribution d) noexcept { return d == Distribution::Binomial ? "binomial" : "uniform"; }

inline std::optional<Distribution> parse_distribution(std::string_view text) noexcept {
    if (text == "binomial") {
        return Distribution::Binomial;
    }
    if (text == "uniform") {
        return Distribution::DiscreteUniform;
    }
    return std::nullopt;
}

/// Values lie in {0..max_value}; the declared cardinality is max_value + 1.
struct GenSpec {
    Distribution distribution = Distribution::Binomial;
    int max_value = 1;
    std::size_t n = 100;
    std::size_t p_columns = 100;
    std::uint64_t seed = 0;
};

struct AlternativeSpec {
    int b = 0;
    /// Binomial size for both X and Y; values span {0..trials}.
    int trials = 2;
    std::size_t n = 100;
    std::uint64_t seed = 0;
};

/// Column j of a null matrix: its own stream (seed, j), so columns are independent.
inline CategoryVector gen_null_column(Distribution dist, int max_value, std::size_t n, std::uint64_t seed, std::uint64_t column) {
    CounterRng rng = rng_stream(seed, column);
    std::vector<int> codes(n);
    for (auto& c : codes) {
        c = dist == Distribution::Binomial ? rng.binomial(max_value, 0.5) : static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(max_value) + 1));
    }
    return CategoryVector(std::move(codes), max_value + 1);
}

inline DataMatrix gen_null_matrix(const GenSpec& spec) {
    if (spec.max_value < 1) {
        throw InputError("generator parameter must be >= 1");
    }
    if (spec.n < 1 || spec.p_columns < 1) {
        throw InputError("generator needs n >= 1 and at least one column");
    }
    std::vector<CategoryVector> columns;
    columns.reserve(spec.p_columns);
    for (std::size_t j = 0; j < spec.p_columns; ++j) {
        columns.push_back(gen_null_column(spec.distribution, spec.max_value, spec.n, spec.seed, j));
    }
    return DataMatrix(std::move(columns));
}

constexpr int sign(int b) noexcept { return (b > 0) - (b < 0); }

/// exp(-sign(b) + b x) / (1 + exp(-sign(b) + b x))
inline double alternative_success_probability(int b, int x) {
    const double eta = -static_cast<double>(sign(b)) + static_cast<double>(b) * x;
    return 1.0 / (1.0 + std::exp(-eta));
}

/// x ~ Bin(trials, 1/2); y | x ~ Bin(trials, p(b, x)).
inline std::pair<CategoryVector, CategoryVector> gen_alternative(const AlternativeSpec& spec) {
    if (spec.trials < 1) {
        throw InputError("alternative needs at least one binomial trial");
    }
    if (spec.n < 1) {
        throw InputError("alternative needs n >= 1");
    }
    CounterRng rng = rng_stream(spec.seed, 0);
    std::vector<int> x(spec.n), y(spec.n);
    for (auto& v : x) {
        v = rng.binomial(spec.trials, 0.5);
    }
    for (std::size_t i = 0; i < spec.n; ++i) {
        y[i] = rng.binomial(spec.trials, alternative_success_probability(spec.b, x[i]));
    }
    return {CategoryVector(std::move(x), spec.trials + 1), CategoryVector(std::move(y), spec.trials + 1)};
}

} // namespace cattest
