#pragma once

#include "cattest/contingency.hpp"
#include "cattest/error.hpp"
#include "cattest/parallel.hpp"
#include "cattest/rng.hpp"
#include "cattest/statistics.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

/**
 * @file permutation.hpp
 * @brief Permutation p-values that keep every stratum's row and column totals fixed.
 *
 * Only Y is shuffled, and only within strata of the conditioning variables, so each
 * stratum keeps both of its margins. Replicate `b` draws from `rng_stream(seed, b)`
 * starting from the original Y, which makes the result independent of how replicates
 * are spread over workers.
 */

namespace cattest {

enum class PValueForm {
    /// (1 + #{T_b >= T_obs}) / (R + 1)
    AddOne,
    /// #{T_b >= T_obs} / R
    RawProportion,
};

struct PermutationPlan {
    int n_permutations = 999;
    std::uint64_t seed = 0;
    Statistic statistic = Statistic::G2;
    PValueForm form = PValueForm::AddOne;
    unsigned workers = 1;
};

namespace detail {

/// Stable counting sort of observation indices by stratum id. `offsets` has n_strata + 1 entries.
inline void order_by_stratum(std::span<const int> ids, int n_strata, std::vector<std::size_t>& order, std::vector<std::size_t>& offsets) {
    offsets.assign(static_cast<std::size_t>(n_strata) + 1, 0);
    for (int id : ids) {
        ++offsets[static_cast<std::size_t>(id) + 1];
    }
    for (int s = 0; s < n_strata; ++s) {
        offsets[s + 1] += offsets[s];
    }
    order.resize(ids.size());
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t t = 0; t < ids.size(); ++t) {
        order[cursor[ids[t]]++] = t;
    }
}

/// Two statistics on tables with the same margins compare like their margin-free parts:
/// G^2 through sum O log O, X^2 through sum O^2 n_k / (R_i C_j). These are what replicates score.
inline bool at_least(double score, double observed) noexcept {
    return score >= observed - 1e-12 * (1.0 + std::abs(observed));
}

/**
 * Observations regrouped by stratum, with per-cell weights for the replicate score.
 * Buffers are reused when the kernel is prepared again for another pair.
 */
class PermutationKernel {
public:
    /// Returns false if X^2 was requested and some stratum has a zero margin.
    bool prepare(std::span<const int> x, std::span<const int> y, const StratumIndex& strata, int rows, int cols, Statistic stat) {
        rows_ = rows;
        cols_ = cols;
        stat_ = stat;
        n_strata_ = strata.count();

        order_by_stratum(strata.ids, n_strata_, order_, offsets_);
        const std::size_t n = x.size();
        row_key_.resize(n);
        y_sorted_.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t src = order_[t];
            row_key_[t] = strata.ids[src] * rows + x[src];
            y_sorted_[t] = y[src];
        }

        const std::size_t cells = static_cast<std::size_t>(n_strata_) * rows * cols;
        observed_.assign(cells, 0);
        for (std::size_t t = 0; t < n; ++t) {
            ++observed_[static_cast<std::size_t>(row_key_[t]) * cols + y_sorted_[t]];
        }

        weights_.assign(cells, 0.0);
        if (stat == Statistic::G2) {
            std::size_t largest = 0;
            for (int s = 0; s < n_strata_; ++s) {
                largest = std::max(largest, offsets_[s + 1] - offsets_[s]);
            }
            xlogx_.resize(largest + 1);
            xlogx_[0] = 0.0;
            for (std::size_t k = 1; k <= largest; ++k) {
                xlogx_[k] = static_cast<double>(k) * std::log(static_cast<double>(k));
            }
        } else {
            std::vector<Count> row_totals(rows), col_totals(cols);
            for (int s = 0; s < n_strata_; ++s) {
                std::fill(row_totals.begin(), row_totals.end(), Count{0});
                std::fill(col_totals.begin(), col_totals.end(), Count{0});
                for (int i = 0; i < rows; ++i) {
                    for (int j = 0; j < cols; ++j) {
                        const Count c = observed_[(static_cast<std::size_t>(s) * rows + i) * cols + j];
                        row_totals[i] += c;
                        col_totals[j] += c;
                    }
                }
                const double n_s = static_cast<double>(offsets_[s + 1] - offsets_[s]);
                for (int i = 0; i < rows; ++i) {
                    for (int j = 0; j < cols; ++j) {
                        if (row_totals[i] == 0 || col_totals[j] == 0) {
                            return false;
                        }
                        weights_[(static_cast<std::size_t>(s) * rows + i) * cols + j] =
                            n_s / (static_cast<double>(row_totals[i]) * static_cast<double>(col_totals[j]));
                    }
                }
            }
        }
        observed_score_ = score(observed_);
        return true;
    }

    std::span<const Count> observed_counts() const noexcept { return observed_; }
    int n_strata() const noexcept { return n_strata_; }

    /// Per-worker replicate buffers.
    struct Scratch {
        std::vector<int> y;
        std::vector<Count> counts;
    };

    /// Shuffle Y within each stratum with `rng`, tabulating as positions become final.
    void replicate(CounterRng& rng, Scratch& scratch) const {
        scratch.y.assign(y_sorted_.begin(), y_sorted_.end());
        scratch.counts.assign(observed_.size(), 0);
        int* ys = scratch.y.data();
        Count* counts = scratch.counts.data();
        const int* keys = row_key_.data();
        const std::size_t cols = static_cast<std::size_t>(cols_);
        for (int s = 0; s < n_strata_; ++s) {
            const std::size_t lo = offsets_[s];
            const std::size_t hi = offsets_[s + 1];
            for (std::size_t i = hi - 1; i > lo; --i) {
                const std::size_t j = lo + rng.uniform_below(i - lo + 1);
                std::swap(ys[i], ys[j]);
                ++counts[static_cast<std::size_t>(keys[i]) * cols + ys[i]];
            }
            ++counts[static_cast<std::size_t>(keys[lo]) * cols + ys[lo]];
        }
    }

    double score(std::span<const Count> counts) const noexcept {
        double total = 0.0;
        if (stat_ == Statistic::G2) {
            for (Count c : counts) {
                total += xlogx_[static_cast<std::size_t>(c)];
            }
        } else {
            for (std::size_t k = 0; k < counts.size(); ++k) {
                const double c = static_cast<double>(counts[k]);
                total += c * c * weights_[k];
            }
        }
        return total;
    }

    /// Number of replicates in [first, last) whose statistic is at least the observed one.
    std::int64_t count_exceeding(std::uint64_t seed, std::int64_t first, std::int64_t last, Scratch& scratch) const {
        std::int64_t hits = 0;
        for (std::int64_t b = first; b < last; ++b) {
            CounterRng rng = rng_stream(seed, static_cast<std::uint64_t>(b));
            replicate(rng, scratch);
            hits += at_least(score(scratch.counts), observed_score_) ? 1 : 0;
        }
        return hits;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    int n_strata_ = 0;
    Statistic stat_ = Statistic::G2;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> offsets_;
    std::vector<int> row_key_;
    std::vector<int> y_sorted_;
    std::vector<Count> observed_;
    std::vector<double> weights_;
    std::vector<double> xlogx_;
    double observed_score_ = 0.0;
};

inline double finish_pvalue(std::int64_t hits, int replicates, PValueForm form) {
    if (form == PValueForm::AddOne) {
        return static_cast<double>(hits + 1) / static_cast<double>(replicates + 1);
    }
    return static_cast<double>(hits) / static_cast<double>(replicates);
}

/// Reusable buffers for one pair-testing worker.
struct PairWorkspace {
    PermutationKernel kernel;
    PermutationKernel::Scratch scratch;
    MarginScratch margins;
    std::vector<Count> counts;
};

inline TestResult permutation_test_prepared(const CategoryVector& x, const CategoryVector& y, const StratumIndex& strata,
                                            const PermutationPlan& plan, PairWorkspace& ws) {
    if (plan.n_permutations < 1) {
        throw InputError("n_permutations must be >= 1");
    }
    detail::require_same_length(x.size(), y.size(), "permutation_pvalue");
    detail::require_same_length(x.size(), strata.size(), "permutation_pvalue");

    const Method method = plan.statistic == Statistic::G2 ? Method::PermG2 : Method::PermX2;
    const int rows = x.cardinality();
    const int cols = y.cardinality();

    const bool computable = ws.kernel.prepare(x.codes(), y.codes(), strata, rows, cols, plan.statistic);
    const auto observed = flat_stratified_statistic(ws.kernel.observed_counts(), strata.count(), rows, cols, plan.statistic, ws.margins);
    const int dof = degrees_of_freedom(rows, cols, observed.nonempty_strata);
    if (!computable || !observed.statistic) {
        return TestResult::not_computable(method, dof);
    }

    std::int64_t hits = 0;
    if (plan.workers <= 1) {
        hits = ws.kernel.count_exceeding(plan.seed, 0, plan.n_permutations, ws.scratch);
    } else {
        constexpr std::int64_t block = 64;
        const std::int64_t n_blocks = (plan.n_permutations + block - 1) / block;
        std::vector<std::int64_t> block_hits(static_cast<std::size_t>(n_blocks), 0);
        std::vector<PermutationKernel::Scratch> scratches(plan.workers);
        parallel_for(static_cast<std::size_t>(n_blocks), plan.workers, [&](unsigned w, std::size_t k) {
            const auto first = static_cast<std::int64_t>(k) * block;
            const auto last = std::min<std::int64_t>(first + block, plan.n_permutations);
            block_hits[k] = ws.kernel.count_exceeding(plan.seed, first, last, scratches[w]);
        });
        for (auto h : block_hits) {
            hits += h;
        }
    }
    return TestResult{method, true, *observed.statistic, dof, finish_pvalue(hits, plan.n_permutations, plan.form)};
}

} // namespace detail

/**
 * Shuffle `y` within each stratum, leaving every stratum's multiset of values in place.
 * Strata are visited in id order and each is shuffled by Fisher-Yates from its last
 * member backwards, which is the same draw sequence the replicate kernel uses.
 */
inline CategoryVector permute_within_strata(const CategoryVector& y, std::span<const int> stratum_ids, CounterRng& rng) {
    detail::require_same_length(y.size(), stratum_ids.size(), "permute_within_strata");
    int n_strata = 0;
    for (int id : stratum_ids) {
        if (id < 0) {
            throw InputError("stratum ids must be non-negative");
        }
        n_strata = std::max(n_strata, id + 1);
    }
    std::vector<std::size_t> order, offsets;
    detail::order_by_stratum(stratum_ids, n_strata, order, offsets);

    std::vector<int> gathered(y.size());
    for (std::size_t t = 0; t < order.size(); ++t) {
        gathered[t] = y[order[t]];
    }
    for (int s = 0; s < n_strata; ++s) {
        rng.shuffle(std::span<int>(gathered).subspan(offsets[s], offsets[s + 1] - offsets[s]));
    }
    std::vector<int> out(y.size());
    for (std::size_t t = 0; t < order.size(); ++t) {
        out[order[t]] = gathered[t];
    }
    return CategoryVector(std::move(out), y.cardinality());
}

/// Permutation p-value of the plan's statistic for X independent of Y given Z.
inline TestResult permutation_pvalue(const CategoryVector& x, const CategoryVector& y, std::span<const CategoryVector> z,
                                     const PermutationPlan& plan) {
    detail::require_same_length(x.size(), y.size(), "permutation_pvalue");
    const StratumIndex strata = stratify(z, x.size());
    detail::PairWorkspace ws;
    return detail::permutation_test_prepared(x, y, strata, plan, ws);
}

} // namespace cattest
