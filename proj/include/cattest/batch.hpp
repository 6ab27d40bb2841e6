#pragma once

#include "cattest/contingency.hpp"
#include "cattest/error.hpp"
#include "cattest/parallel.hpp"
#include "cattest/pipeline.hpp"
#include "cattest/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cattest {

/// n observations of p categorical columns.
class DataMatrix {
public:
    explicit DataMatrix(std::vector<CategoryVector> columns) : columns_(std::move(columns)) {
        for (const auto& c : columns_) {
            detail::require_same_length(columns_.front().size(), c.size(), "DataMatrix column");
        }
    }

    std::size_t n_rows() const noexcept { return columns_.empty() ? 0 : columns_.front().size(); }
    std::size_t n_columns() const noexcept { return columns_.size(); }
    const CategoryVector& column(std::size_t j) const { return columns_.at(j); }
    std::span<const CategoryVector> columns() const noexcept { return columns_; }

private:
    std::vector<CategoryVector> columns_;
};

struct PairResult {
    int first = 0;
    int second = 0;
    TestResult result;

    bool operator==(const PairResult&) const = default;
};

/// One result per unordered pair of tested columns, ordered lexicographically by (first, second).
struct PairResultSet {
    std::vector<PairResult> pairs;

    std::size_t size() const noexcept { return pairs.size(); }
    bool operator==(const PairResultSet&) const = default;
};

/// Seed used for the permutation replicates of pair (i, j) under a run seed.
constexpr std::uint64_t pair_seed(std::uint64_t seed, int i, int j) noexcept {
    return derive_seed(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
}

/// Columns excluding the conditioning set, in index order.
inline std::vector<int> tested_columns(const DataMatrix& m, std::span<const int> z_columns) {
    std::vector<bool> conditioning(m.n_columns(), false);
    for (int z : z_columns) {
        if (z < 0 || static_cast<std::size_t>(z) >= m.n_columns()) {
            throw InputError("conditioning column " + std::to_string(z) + " out of range");
        }
        conditioning[z] = true;
    }
    std::vector<int> tested;
    for (std::size_t j = 0; j < m.n_columns(); ++j) {
        if (!conditioning[j]) {
            tested.push_back(static_cast<int>(j));
        }
    }
    return tested;
}

/**
 * Test every unordered pair of non-conditioning columns, conditioning on `z_columns`.
 * Pair (i, j) is exactly `test_pair` on those columns with the plan's seed replaced by
 * `pair_seed(plan.seed, i, j)`, whatever the worker count.
 */
inline PairResultSet all_pairs(const DataMatrix& m, Method method, std::span<const int> z_columns = {},
                               const PermutationPlan& plan = {}, unsigned workers = 1) {
    const std::vector<int> tested = tested_columns(m, z_columns);
    if (tested.size() < 2) {
        throw InputError("all_pairs needs at least two tested columns");
    }

    std::vector<CategoryVector> z;
    for (int c : z_columns) {
        z.push_back(m.column(c));
    }
    const StratumIndex strata = stratify(z, m.n_rows());

    PairResultSet out;
    out.pairs.reserve(tested.size() * (tested.size() - 1) / 2);
    for (std::size_t a = 0; a < tested.size(); ++a) {
        for (std::size_t b = a + 1; b < tested.size(); ++b) {
            out.pairs.push_back(PairResult{tested[a], tested[b], {}});
        }
    }

    std::vector<detail::PairWorkspace> workspaces(std::max(1u, workers));
    parallel_for(out.pairs.size(), workers, [&](unsigned w, std::size_t k) {
        PairResult& pr = out.pairs[k];
        PermutationPlan p = plan;
        p.seed = pair_seed(plan.seed, pr.first, pr.second);
        p.workers = 1;
        pr.result = test_pair(m.column(pr.first), m.column(pr.second), strata, method, p, workspaces[w]);
    });
    return out;
}

struct RejectionSummary {
    /// Absent when nothing was computable.
    std::optional<double> rate;
    std::int64_t n_computable = 0;
    std::int64_t n_incomputable = 0;
    std::int64_t n_rejected = 0;
};

/// Fraction of computable results with p <= alpha. Incomputable results never count as rejections.
inline RejectionSummary rejection_rate(std::span<const TestResult> results, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InputError("alpha must lie in (0, 1)");
    }
    RejectionSummary s;
    for (const auto& r : results) {
        if (!r.computable) {
            ++s.n_incomputable;
            continue;
        }
        ++s.n_computable;
        s.n_rejected += (*r.p_value <= alpha) ? 1 : 0;
    }
    if (s.n_computable > 0) {
        s.rate = static_cast<double>(s.n_rejected) / static_cast<double>(s.n_computable);
    }
    return s;
}

inline RejectionSummary rejection_rate(const PairResultSet& r, double alpha) {
    std::vector<TestResult> results;
    results.reserve(r.size());
    for (const auto& pr : r.pairs) {
        results.push_back(pr.result);
    }
    return rejection_rate(std::span<const TestResult>(results), alpha);
}

} // namespace cattest
