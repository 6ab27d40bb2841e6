#pragma once

#include "cattest/error.hpp"

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file contingency.hpp
 * @brief Coded categorical vectors, two-way tables and tables stratified by conditioning variables.
 */

namespace cattest {

using Count = std::int64_t;

/**
 * Integer category codes in `[0, cardinality)`.
 * The cardinality is declared rather than observed, so a vector may not use every level.
 */
class CategoryVector {
public:
    CategoryVector(std::vector<int> codes, int cardinality) : codes_(std::move(codes)), cardinality_(cardinality) {
        if (cardinality_ < 1) {
            throw InputError("cardinality must be positive");
        }
        if (codes_.empty()) {
            throw InputError("category vector must not be empty");
        }
        for (int code : codes_) {
            if (code < 0 || code >= cardinality_) {
                throw InputError("category code " + std::to_string(code) + " outside [0, " + std::to_string(cardinality_) + ")");
            }
        }
    }

    std::span<const int> codes() const noexcept { return codes_; }
    int cardinality() const noexcept { return cardinality_; }
    std::size_t size() const noexcept { return codes_.size(); }
    int operator[](std::size_t i) const noexcept { return codes_[i]; }

    bool operator==(const CategoryVector&) const = default;

private:
    std::vector<int> codes_;
    int cardinality_;
};

/// Dense row-major r x c matrix of reals.
struct RealMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    double operator()(int i, int j) const { return values[static_cast<std::size_t>(i) * cols + j]; }
};

/**
 * r x c table of observed counts with cached marginals.
 */
class ContingencyTable {
public:
    ContingencyTable(int rows, int cols, std::vector<Count> counts) : rows_(rows), cols_(cols), counts_(std::move(counts)) {
        if (rows_ < 1 || cols_ < 1) {
            throw InputError("table dimensions must be positive");
        }
        if (counts_.size() != static_cast<std::size_t>(rows_) * cols_) {
            throw InputError("count buffer does not match table dimensions");
        }
        if (std::any_of(counts_.begin(), counts_.end(), [](Count c) { return c < 0; })) {
            throw InputError("counts must be non-negative");
        }
        refresh_margins();
    }

    ContingencyTable(std::initializer_list<std::initializer_list<Count>> nested)
        : ContingencyTable(static_cast<int>(nested.size()),
                           nested.size() ? static_cast<int>(nested.begin()->size()) : 0,
                           flatten(nested)) {}

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    Count operator()(int i, int j) const noexcept { return counts_[static_cast<std::size_t>(i) * cols_ + j]; }
    std::span<const Count> counts() const noexcept { return counts_; }
    std::span<const Count> row_totals() const noexcept { return row_totals_; }
    std::span<const Count> col_totals() const noexcept { return col_totals_; }
    Count grand_total() const noexcept { return grand_total_; }

    bool has_zero_margin() const noexcept {
        return std::find(row_totals_.begin(), row_totals_.end(), 0) != row_totals_.end() ||
               std::find(col_totals_.begin(), col_totals_.end(), 0) != col_totals_.end();
    }

    bool operator==(const ContingencyTable& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && counts_ == other.counts_;
    }

private:
    static std::vector<Count> flatten(std::initializer_list<std::initializer_list<Count>> nested) {
        std::vector<Count> flat;
        const std::size_t width = nested.size() ? nested.begin()->size() : 0;
        for (const auto& row : nested) {
            if (row.size() != width) {
                throw InputError("ragged table rows");
            }
            flat.insert(flat.end(), row.begin(), row.end());
        }
        return flat;
    }

    void refresh_margins() {
        row_totals_.assign(rows_, 0);
        col_totals_.assign(cols_, 0);
        for (int i = 0; i < rows_; ++i) {
            for (int j = 0; j < cols_; ++j) {
                const Count c = (*this)(i, j);
                row_totals_[i] += c;
                col_totals_[j] += c;
            }
        }
        grand_total_ = std::accumulate(row_totals_.begin(), row_totals_.end(), Count{0});
    }

    int rows_;
    int cols_;
    std::vector<Count> counts_;
    std::vector<Count> row_totals_;
    std::vector<Count> col_totals_;
    Count grand_total_ = 0;
};

/**
 * Per-observation stratum assignment for a set of conditioning variables.
 * Strata are numbered in order of first occurrence of their joint value; only
 * observed joint values get a stratum.
 */
struct StratumIndex {
    std::vector<int> ids;
    std::vector<std::vector<int>> keys;

    int count() const noexcept { return static_cast<int>(keys.size()); }
    std::size_t size() const noexcept { return ids.size(); }
};

/// Tables of X by Y, one per observed joint value of the conditioning variables.
struct StratifiedTable {
    std::vector<ContingencyTable> strata;
    std::vector<std::vector<int>> keys;

    std::size_t size() const noexcept { return strata.size(); }
    Count total() const noexcept {
        Count n = 0;
        for (const auto& t : strata) {
            n += t.grand_total();
        }
        return n;
    }
};

namespace detail {

inline void require_same_length(std::size_t expected, std::size_t actual, const char* what) {
    if (expected != actual) {
        throw InputError(std::string(what) + ": length " + std::to_string(actual) + " does not match " + std::to_string(expected));
    }
}

/// Accumulate counts[(stratum * rows + x) * cols + y] over all observations. `out` is zeroed first.
inline void tabulate(std::span<const int> x, std::span<const int> y, std::span<const int> stratum_ids, int rows, int cols,
                     std::span<Count> out) {
    std::fill(out.begin(), out.end(), Count{0});
    const std::size_t n = x.size();
    if (stratum_ids.empty()) {
        for (std::size_t t = 0; t < n; ++t) {
            ++out[static_cast<std::size_t>(x[t]) * cols + y[t]];
        }
        return;
    }
    for (std::size_t t = 0; t < n; ++t) {
        ++out[(static_cast<std::size_t>(stratum_ids[t]) * rows + x[t]) * cols + y[t]];
    }
}

} // namespace detail

inline ContingencyTable build_table(const CategoryVector& x, const CategoryVector& y) {
    detail::require_same_length(x.size(), y.size(), "build_table");
    std::vector<Count> counts(static_cast<std::size_t>(x.cardinality()) * y.cardinality());
    detail::tabulate(x.codes(), y.codes(), {}, x.cardinality(), y.cardinality(), counts);
    return ContingencyTable(x.cardinality(), y.cardinality(), std::move(counts));
}

/// Assign each of `n` observations to the stratum of its joint value over `z`.
/// With no conditioning vectors every observation falls in a single stratum.
inline StratumIndex stratify(std::span<const CategoryVector> z, std::size_t n) {
    StratumIndex index;
    index.ids.assign(n, 0);
    if (z.empty()) {
        index.keys.emplace_back();
        return index;
    }
    for (const auto& v : z) {
        detail::require_same_length(n, v.size(), "stratify");
    }

    // Mixed-radix joint code. Dense lookup while the joint space is small, hash map otherwise.
    std::uint64_t joint_space = 1;
    bool dense = true;
    for (const auto& v : z) {
        joint_space *= static_cast<std::uint64_t>(v.cardinality());
        if (joint_space > (1u << 20)) {
            dense = false;
            break;
        }
    }

    std::vector<int> dense_lookup;
    std::unordered_map<std::uint64_t, int> sparse_lookup;
    if (dense) {
        dense_lookup.assign(joint_space, -1);
    }

    for (std::size_t t = 0; t < n; ++t) {
        std::uint64_t code = 0;
        for (const auto& v : z) {
            code = code * static_cast<std::uint64_t>(v.cardinality()) + static_cast<std::uint64_t>(v[t]);
        }
        int* slot = nullptr;
        if (dense) {
            slot = &dense_lookup[code];
        } else {
            slot = &sparse_lookup.try_emplace(code, -1).first->second;
        }
        if (*slot < 0) {
            *slot = index.count();
            std::vector<int> key;
            key.reserve(z.size());
            for (const auto& v : z) {
                key.push_back(v[t]);
            }
            index.keys.push_back(std::move(key));
        }
        index.ids[t] = *slot;
    }
    return index;
}

inline StratifiedTable build_stratified(const CategoryVector& x, const CategoryVector& y, std::span<const CategoryVector> z) {
    detail::require_same_length(x.size(), y.size(), "build_stratified");
    const StratumIndex index = stratify(z, x.size());

    const int rows = x.cardinality();
    const int cols = y.cardinality();
    const std::size_t cells = static_cast<std::size_t>(rows) * cols;
    std::vector<Count> flat(cells * index.count());
    detail::tabulate(x.codes(), y.codes(), index.ids, rows, cols, flat);

    StratifiedTable out;
    out.keys = index.keys;
    out.strata.reserve(index.count());
    for (int s = 0; s < index.count(); ++s) {
        auto first = flat.begin() + static_cast<std::ptrdiff_t>(s * cells);
        out.strata.emplace_back(rows, cols, std::vector<Count>(first, first + static_cast<std::ptrdiff_t>(cells)));
    }
    return out;
}

/// E_ij = O_i+ * O_+j / O_++. Empty table yields no value; the caller decides what that means.
inline std::optional<RealMatrix> expected_frequencies(const ContingencyTable& t) {
    if (t.grand_total() == 0) {
        return std::nullopt;
    }
    RealMatrix e{t.rows(), t.cols(), std::vector<double>(static_cast<std::size_t>(t.rows()) * t.cols())};
    const double n = static_cast<double>(t.grand_total());
    for (int i = 0; i < t.rows(); ++i) {
        for (int j = 0; j < t.cols(); ++j) {
            e.values[static_cast<std::size_t>(i) * t.cols() + j] =
                static_cast<double>(t.row_totals()[i]) * static_cast<double>(t.col_totals()[j]) / n;
        }
    }
    return e;
}

} // namespace cattest
