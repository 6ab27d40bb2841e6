#pragma once

#include "cattest/contingency.hpp"
#include "cattest/error.hpp"
#include "cattest/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

/**
 * @file exact.hpp
 * @brief Brute-force reference distributions for small inputs.
 *
 * Every distinct within-stratum arrangement of Y is enumerated. Distinct arrangements
 * of a multiset are equally likely under uniform shuffling, so each one carries mass
 * 1 / (number of arrangements). Meant for validating the permutation engine, not for
 * production use.
 */

namespace cattest {

struct ExactDistribution {
    /// (statistic value, probability mass), sorted by value; values within the tie tolerance are merged.
    std::vector<std::pair<double, double>> support;
    double total_mass = 0.0;
};

inline constexpr int exact_max_stratum_size = 10;
inline constexpr double exact_max_arrangements = 2.0e7;
inline constexpr double exact_tie_tolerance = 1e-12;

namespace detail {

struct ArrangementSpace {
    std::vector<std::vector<std::size_t>> positions;  // observation indices per stratum
    std::vector<std::vector<int>> values;            // y values per stratum, sorted
};

inline double multiset_arrangements(const std::vector<int>& sorted_values) {
    double log_count = std::lgamma(static_cast<double>(sorted_values.size()) + 1.0);
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted_values.size(); ++i) {
        if (i < sorted_values.size() && sorted_values[i] == sorted_values[i - 1]) {
            ++run;
        } else {
            log_count -= std::lgamma(static_cast<double>(run) + 1.0);
            run = 1;
        }
    }
    return std::round(std::exp(log_count));
}

inline ArrangementSpace arrangement_space(const CategoryVector& y, const StratumIndex& strata) {
    ArrangementSpace space;
    space.positions.resize(strata.count());
    space.values.resize(strata.count());
    for (std::size_t t = 0; t < y.size(); ++t) {
        space.positions[strata.ids[t]].push_back(t);
        space.values[strata.ids[t]].push_back(y[t]);
    }
    double total = 1.0;
    for (auto& v : space.values) {
        if (v.size() > static_cast<std::size_t>(exact_max_stratum_size)) {
            throw GuardError("exact enumeration limited to strata of at most " + std::to_string(exact_max_stratum_size) + " observations");
        }
        std::sort(v.begin(), v.end());
        total *= multiset_arrangements(v);
    }
    if (total > exact_max_arrangements) {
        throw GuardError("exact enumeration would visit too many arrangements");
    }
    return space;
}

/// Statistic of every distinct arrangement (nullopt entries for incomputable X^2).
inline std::vector<std::optional<double>> enumerate_statistics(const CategoryVector& x, const CategoryVector& y,
                                                               std::span<const CategoryVector> z, Statistic stat) {
    const StratumIndex strata = stratify(z, x.size());
    ArrangementSpace space = arrangement_space(y, strata);

    std::vector<int> codes(y.codes().begin(), y.codes().end());
    std::vector<std::optional<double>> out;
    while (true) {
        for (std::size_t s = 0; s < space.values.size(); ++s) {
            for (std::size_t k = 0; k < space.positions[s].size(); ++k) {
                codes[space.positions[s][k]] = space.values[s][k];
            }
        }
        const CategoryVector arranged(codes, y.cardinality());
        out.push_back(conditional_statistic(build_stratified(x, arranged, z), stat));

        std::size_t s = space.values.size();
        bool advanced = false;
        while (s > 0) {
            --s;
            if (std::next_permutation(space.values[s].begin(), space.values[s].end())) {
                advanced = true;
                break;
            }
        }
        if (!advanced) {
            break;
        }
    }
    return out;
}

} // namespace detail

/// Exact null distribution of the statistic under within-stratum shuffling of y.
inline ExactDistribution exact_distribution(const CategoryVector& x, const CategoryVector& y, std::span<const CategoryVector> z,
                                            Statistic stat) {
    detail::require_same_length(x.size(), y.size(), "exact_distribution");
    auto values = detail::enumerate_statistics(x, y, z, stat);
    const double mass = 1.0 / static_cast<double>(values.size());

    std::vector<double> finite;
    finite.reserve(values.size());
    for (const auto& v : values) {
        if (!v) {
            throw InputError("statistic is not computable for this input");
        }
        finite.push_back(*v);
    }
    std::sort(finite.begin(), finite.end());

    ExactDistribution dist;
    for (double v : finite) {
        if (!dist.support.empty() && v - dist.support.back().first <= exact_tie_tolerance) {
            dist.support.back().second += mass;
        } else {
            dist.support.emplace_back(v, mass);
        }
        dist.total_mass += mass;
    }
    return dist;
}

/// Exact permutation p-value: mass of arrangements whose statistic is >= the observed one.
inline double exact_pvalue(const CategoryVector& x, const CategoryVector& y, std::span<const CategoryVector> z, Statistic stat) {
    detail::require_same_length(x.size(), y.size(), "exact_pvalue");
    const auto observed = conditional_statistic(build_stratified(x, y, z), stat);
    if (!observed) {
        throw InputError("observed statistic is not computable");
    }
    const auto values = detail::enumerate_statistics(x, y, z, stat);
    std::size_t hits = 0;
    for (const auto& v : values) {
        hits += (v && *v >= *observed - exact_tie_tolerance) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(values.size());
}

/// Two-sided Fisher exact test on a 2x2 table: total probability of the tables with the
/// same margins that are no more likely than the observed one.
inline double fisher_2x2_pvalue(const ContingencyTable& t) {
    if (t.rows() != 2 || t.cols() != 2) {
        throw InputError("fisher_2x2_pvalue requires a 2x2 table");
    }
    if (t.grand_total() == 0) {
        throw InputError("fisher_2x2_pvalue requires a non-empty table");
    }
    const Count r1 = t.row_totals()[0];
    const Count r2 = t.row_totals()[1];
    const Count c1 = t.col_totals()[0];
    const Count n = t.grand_total();

    auto log_choose = [](Count a, Count b) {
        return std::lgamma(static_cast<double>(a) + 1.0) - std::lgamma(static_cast<double>(b) + 1.0) -
               std::lgamma(static_cast<double>(a - b) + 1.0);
    };
    auto probability = [&](Count a) { return std::exp(log_choose(r1, a) + log_choose(r2, c1 - a) - log_choose(n, c1)); };

    const Count lo = std::max<Count>(0, c1 - r2);
    const Count hi = std::min(r1, c1);
    const double observed = probability(t(0, 0));
    double p = 0.0;
    for (Count a = lo; a <= hi; ++a) {
        const double pa = probability(a);
        if (pa <= observed * (1.0 + 1e-12)) {
            p += pa;
        }
    }
    return std::min(1.0, p);
}

} // namespace cattest
