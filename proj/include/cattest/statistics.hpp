#pragma once

#include "cattest/chi_square.hpp"
#include "cattest/contingency.hpp"
#include "cattest/error.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

/**
 * @file statistics.hpp
 * @brief Pearson X^2 and likelihood-ratio G^2 statistics, unconditional and stratified,
 * with asymptotic chi-square p-values.
 *
 * X^2 is not computable on a table with a zero row or column total: the affected
 * expected counts are zero. This is reported as a value (`TestResult::computable`)
 * so simulations can count it. G^2 uses 0 log 0 = 0 and is always computable.
 */

namespace cattest {

/// The statistic being computed.
enum class Statistic { X2, G2 };

/// A full testing procedure: asymptotic X^2 / G^2, or a permutation p-value for either.
enum class Method { X2, G2, PermG2, PermX2 };

constexpr std::string_view to_string(Statistic s) noexcept { return s == Statistic::X2 ? "X2" : "G2"; }

constexpr std::string_view to_string(Method m) noexcept {
    switch (m) {
    case Method::X2: return "X2";
    case Method::G2: return "G2";
    case Method::PermG2: return "PermG2";
    case Method::PermX2: return "PermX2";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view text) noexcept {
    for (Method m : {Method::X2, Method::G2, Method::PermG2, Method::PermX2}) {
        if (text == to_string(m)) {
            return m;
        }
    }
    return std::nullopt;
}

constexpr Statistic statistic_of(Method m) noexcept {
    return (m == Method::X2 || m == Method::PermX2) ? Statistic::X2 : Statistic::G2;
}

constexpr bool is_permutation(Method m) noexcept { return m == Method::PermG2 || m == Method::PermX2; }

struct TestResult {
    Method method = Method::X2;
    bool computable = false;
    std::optional<double> statistic;
    int dof = 0;
    std::optional<double> p_value;

    static TestResult not_computable(Method method, int dof) {
        return TestResult{method, false, std::nullopt, dof, std::nullopt};
    }

    bool operator==(const TestResult&) const = default;
};

namespace detail {

/// Statistic over the cells of one table given its marginals. Requires n > 0.
/// Returns nullopt for X^2 when some margin is zero.
inline std::optional<double> cell_statistic(std::span<const Count> cells, std::span<const Count> row_totals,
                                            std::span<const Count> col_totals, Count n, Statistic stat) {
    const int rows = static_cast<int>(row_totals.size());
    const int cols = static_cast<int>(col_totals.size());
    const double total = static_cast<double>(n);

    if (stat == Statistic::X2) {
        for (Count r : row_totals) {
            if (r == 0) {
                return std::nullopt;
            }
        }
        for (Count c : col_totals) {
            if (c == 0) {
                return std::nullopt;
            }
        }
    }

    double sum = 0.0;
    for (int i = 0; i < rows; ++i) {
        const double row = static_cast<double>(row_totals[i]);
        for (int j = 0; j < cols; ++j) {
            const Count observed = cells[static_cast<std::size_t>(i) * cols + j];
            const double expected = row * static_cast<double>(col_totals[j]) / total;
            if (stat == Statistic::X2) {
                const double diff = static_cast<double>(observed) - expected;
                sum += diff * diff / expected;
            } else if (observed > 0) {
                const double o = static_cast<double>(observed);
                sum += o * std::log(o / expected);
            }
        }
    }
    if (stat == Statistic::G2) {
        sum *= 2.0;
    }
    return sum < 0.0 ? 0.0 : sum;
}

/// Marginal scratch reused across calls on flat stratified count buffers.
struct MarginScratch {
    std::vector<Count> row_totals;
    std::vector<Count> col_totals;
};

struct StratifiedValue {
    std::optional<double> statistic;
    int nonempty_strata = 0;
};

/// Sum of per-stratum statistics over a flat buffer laid out [stratum][row][col].
inline StratifiedValue flat_stratified_statistic(std::span<const Count> flat, int n_strata, int rows, int cols, Statistic stat,
                                                 MarginScratch& scratch) {
    const std::size_t cells = static_cast<std::size_t>(rows) * cols;
    scratch.row_totals.resize(rows);
    scratch.col_totals.resize(cols);

    StratifiedValue out;
    double total = 0.0;
    bool computable = true;
    for (int s = 0; s < n_strata; ++s) {
        const auto table = flat.subspan(s * cells, cells);
        std::fill(scratch.row_totals.begin(), scratch.row_totals.end(), Count{0});
        std::fill(scratch.col_totals.begin(), scratch.col_totals.end(), Count{0});
        Count n = 0;
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                const Count c = table[static_cast<std::size_t>(i) * cols + j];
                scratch.row_totals[i] += c;
                scratch.col_totals[j] += c;
                n += c;
            }
        }
        if (n == 0) {
            continue;
        }
        ++out.nonempty_strata;
        if (!computable) {
            continue;
        }
        const auto value = cell_statistic(table, scratch.row_totals, scratch.col_totals, n, stat);
        if (!value) {
            computable = false;
            continue;
        }
        total += *value;
    }
    if (computable && out.nonempty_strata > 0) {
        out.statistic = total;
    }
    return out;
}

} // namespace detail

/// Pearson X^2 = sum (O - E)^2 / E. Not computable if any row or column total is zero.
inline std::optional<double> x2_statistic(const ContingencyTable& t) {
    if (t.grand_total() == 0) {
        throw InputError("x2_statistic requires a non-empty table");
    }
    return detail::cell_statistic(t.counts(), t.row_totals(), t.col_totals(), t.grand_total(), Statistic::X2);
}

/// G^2 = 2 sum O log(O / E), with empty cells contributing 0.
inline double g2_statistic(const ContingencyTable& t) {
    if (t.grand_total() == 0) {
        throw InputError("g2_statistic requires a non-empty table");
    }
    return *detail::cell_statistic(t.counts(), t.row_totals(), t.col_totals(), t.grand_total(), Statistic::G2);
}

inline std::optional<double> statistic(const ContingencyTable& t, Statistic stat) {
    return stat == Statistic::X2 ? x2_statistic(t) : std::optional<double>(g2_statistic(t));
}

inline int count_nonempty(const StratifiedTable& s) {
    int k = 0;
    for (const auto& t : s.strata) {
        k += t.grand_total() > 0 ? 1 : 0;
    }
    return k;
}

/// Sum of per-stratum statistics over non-empty strata. X^2 is not computable if any
/// contributing stratum has a zero margin.
inline std::optional<double> conditional_statistic(const StratifiedTable& s, Statistic stat) {
    if (count_nonempty(s) == 0) {
        throw InputError("conditional_statistic requires at least one non-empty stratum");
    }
    double total = 0.0;
    for (const auto& t : s.strata) {
        if (t.grand_total() == 0) {
            continue;
        }
        const auto value = detail::cell_statistic(t.counts(), t.row_totals(), t.col_totals(), t.grand_total(), stat);
        if (!value) {
            return std::nullopt;
        }
        total += *value;
    }
    return total;
}

/// (|X| - 1)(|Y| - 1) per stratum.
inline int degrees_of_freedom(int x_cardinality, int y_cardinality, int n_strata) {
    if (x_cardinality < 2 || y_cardinality < 2) {
        throw InputError("degrees_of_freedom requires cardinalities >= 2");
    }
    if (n_strata < 1) {
        throw InputError("degrees_of_freedom requires at least one stratum");
    }
    return (x_cardinality - 1) * (y_cardinality - 1) * n_strata;
}

namespace detail {

inline TestResult asymptotic_result(std::optional<double> value, int rows, int cols, int nonempty, Statistic stat) {
    const Method method = stat == Statistic::X2 ? Method::X2 : Method::G2;
    const int dof = degrees_of_freedom(rows, cols, nonempty);
    if (!value) {
        return TestResult::not_computable(method, dof);
    }
    return TestResult{method, true, *value, dof, chi_square_sf(*value, dof)};
}

} // namespace detail

/// Statistic, dof over non-empty strata, and the chi-square upper tail.
inline TestResult asymptotic_test(const StratifiedTable& s, Statistic stat) {
    if (s.strata.empty()) {
        throw InputError("asymptotic_test requires at least one stratum");
    }
    const auto value = conditional_statistic(s, stat);
    return detail::asymptotic_result(value, s.strata.front().rows(), s.strata.front().cols(), count_nonempty(s), stat);
}

inline TestResult asymptotic_test(const ContingencyTable& t, Statistic stat) {
    StratifiedTable s;
    s.strata.push_back(t);
    s.keys.emplace_back();
    return asymptotic_test(s, stat);
}

} // namespace cattest
