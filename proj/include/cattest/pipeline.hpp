#pragma once

#include "cattest/contingency.hpp"
#include "cattest/permutation.hpp"
#include "cattest/statistics.hpp"

#include <span>
#include <vector>

namespace cattest {

/**
 * Test one pair against precomputed strata. This is the single code path behind
 * both standalone tests and the all-pairs batch, so the two agree bit for bit.
 *
 * For permutation methods the plan's `statistic` is overridden by the method.
 */
inline TestResult test_pair(const CategoryVector& x, const CategoryVector& y, const StratumIndex& strata, Method method,
                            const PermutationPlan& plan, detail::PairWorkspace& ws) {
    detail::require_same_length(x.size(), y.size(), "test_pair");
    detail::require_same_length(x.size(), strata.size(), "test_pair");
    if (is_permutation(method)) {
        PermutationPlan p = plan;
        p.statistic = statistic_of(method);
        return detail::permutation_test_prepared(x, y, strata, p, ws);
    }

    const int rows = x.cardinality();
    const int cols = y.cardinality();
    ws.counts.resize(static_cast<std::size_t>(strata.count()) * rows * cols);
    detail::tabulate(x.codes(), y.codes(), strata.ids, rows, cols, ws.counts);
    const Statistic stat = statistic_of(method);
    const auto value = detail::flat_stratified_statistic(ws.counts, strata.count(), rows, cols, stat, ws.margins);
    return detail::asymptotic_result(value.statistic, rows, cols, value.nonempty_strata, stat);
}

/// Convenience: any method on (x, y | z).
inline TestResult run_test(const CategoryVector& x, const CategoryVector& y, std::span<const CategoryVector> z, Method method,
                           const PermutationPlan& plan = {}) {
    detail::require_same_length(x.size(), y.size(), "run_test");
    const StratumIndex strata = stratify(z, x.size());
    detail::PairWorkspace ws;
    return test_pair(x, y, strata, method, plan, ws);
}

} // namespace cattest
