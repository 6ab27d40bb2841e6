#pragma once

#include "cattest/batch.hpp"
#include "cattest/datagen.hpp"
#include "cattest/pipeline.hpp"
#include "cattest/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

/**
 * @file experiments.hpp
 * @brief Monte Carlo studies behind the command-line harness: statistic differences,
 * type I error, power and timing, each producing rows for a fixed CSV layout.
 *
 * Every grid point draws its data from a seed derived from (run seed, experiment,
 * grid coordinates), so rows do not depend on grid order or worker count.
 */

namespace cattest {

/// Acceptance band for an empirical rejection rate: alpha +/- z * inflation * sqrt(alpha (1 - alpha) / trials).
struct SizeBand {
    double lo = 0.0;
    double hi = 1.0;

    bool contains(double rate) const noexcept { return rate >= lo && rate <= hi; }
};

inline SizeBand size_band(double alpha, double trials, double inflation = 1.5, double z = 3.0) {
    const double half = z * inflation * std::sqrt(alpha * (1.0 - alpha) / trials);
    return SizeBand{alpha - half, alpha + half};
}

struct ExperimentConfig {
    std::vector<std::size_t> sizes;
    std::vector<int> cards;
    std::vector<int> conditioning{0};
    std::vector<Method> methods{Method::X2, Method::G2, Method::PermG2};
    Distribution distribution = Distribution::Binomial;
    double alpha = 0.05;
    int n_permutations = 999;
    PValueForm pvalue_form = PValueForm::AddOne;
    std::uint64_t seed = 2020;
    unsigned workers = 1;
    std::size_t p_columns = 100;
    /// Dependence widening applied to the binomial standard error of type I error rates.
    double band_inflation = 1.5;
    /// Power study.
    std::vector<int> b_values{-3, -2, -1, 0, 1, 2, 3};
    int replications = 1000;
    /// Timing study: (n, cardinality) configurations, timed repetitions after one warm-up.
    std::vector<std::pair<std::size_t, int>> bench_points{{100, 2}, {200, 3}, {400, 4}, {800, 5}};
    int bench_repetitions = 5;
};

/// Canonical one-line description; identical configs give identical text.
inline std::string describe(const ExperimentConfig& c, std::string_view experiment) {
    std::ostringstream out;
    out << "experiment=" << experiment << ";sizes=";
    for (auto n : c.sizes) out << n << ',';
    out << ";cards=";
    for (auto k : c.cards) out << k << ',';
    out << ";cond=";
    for (auto z : c.conditioning) out << z << ',';
    out << ";methods=";
    for (auto m : c.methods) out << to_string(m) << ',';
    out << ";dist=" << to_string(c.distribution) << ";alpha=" << c.alpha << ";perms=" << c.n_permutations
        << ";pform=" << (c.pvalue_form == PValueForm::AddOne ? "addone" : "raw") << ";seed=" << c.seed << ";columns=" << c.p_columns
        << ";inflation=" << c.band_inflation << ";b=";
    for (auto b : c.b_values) out << b << ',';
    out << ";reps=" << c.replications << ";bench=";
    for (auto [n, k] : c.bench_points) out << n << 'x' << k << ',';
    out << ";bench_reps=" << c.bench_repetitions;
    return out.str();
}

/// FNV-1a 64 of the canonical description, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c, std::string_view experiment) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : describe(c, experiment)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

enum ExperimentTag : std::uint64_t { diff_tag = 1, type1_tag = 2, power_tag = 3, bench_tag = 4 };

inline std::uint64_t point_seed(std::uint64_t seed, ExperimentTag tag, std::size_t n, int card, int n_cond) {
    return derive_seed(seed, static_cast<std::uint64_t>(tag), n, static_cast<std::uint64_t>(card), static_cast<std::uint64_t>(n_cond));
}

inline void validate_grid(const ExperimentConfig& c) {
    if (c.sizes.empty() || c.cards.empty()) {
        throw InputError("experiment grid needs at least one sample size and one cardinality");
    }
    for (std::size_t k = 0; k < c.sizes.size(); ++k) {
        if (c.sizes[k] == 0 || (k > 0 && c.sizes[k] <= c.sizes[k - 1])) {
            throw InputError("sample sizes must be positive and strictly increasing");
        }
    }
    for (int card : c.cards) {
        if (card < 2) {
            throw InputError("cardinalities must be >= 2");
        }
    }
    for (int z : c.conditioning) {
        if (z < 0) {
            throw InputError("number of conditioning variables must be >= 0");
        }
    }
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
        throw InputError("alpha must lie in (0, 1)");
    }
    if (c.n_permutations < 1) {
        throw InputError("number of permutations must be >= 1");
    }
    if (c.p_columns < 2) {
        throw InputError("at least two tested columns are required");
    }
}

/// n x (p + n_cond) null matrix whose last n_cond columns are the conditioning set.
struct NullDesign {
    DataMatrix matrix;
    std::vector<int> z_columns;
};

inline NullDesign null_design(const ExperimentConfig& c, std::size_t n, int card, int n_cond, std::uint64_t seed) {
    GenSpec spec{c.distribution, card - 1, n, c.p_columns + static_cast<std::size_t>(n_cond), seed};
    NullDesign d{gen_null_matrix(spec), {}};
    for (int k = 0; k < n_cond; ++k) {
        d.z_columns.push_back(static_cast<int>(c.p_columns) + k);
    }
    return d;
}

inline PermutationPlan plan_for(const ExperimentConfig& c, std::uint64_t seed) {
    PermutationPlan plan;
    plan.n_permutations = c.n_permutations;
    plan.seed = seed;
    plan.form = c.pvalue_form;
    return plan;
}

inline std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

inline std::string fixed_or_na(const std::optional<double>& value, int decimals) {
    return value ? fixed(*value, decimals) : std::string("NA");
}

} // namespace detail

// ---------------------------------------------------------------------------
// G^2 - X^2

struct DiffRow {
    std::size_t n = 0;
    int card = 0;
    int n_cond = 0;
    std::optional<double> mean_diff;
    std::int64_t n_pairs_computable = 0;
    std::int64_t n_pairs_incomputable = 0;
    std::uint64_t seed = 0;
};

/// Mean of G^2 - X^2 over pairs where X^2 is computable; the rest are only counted.
inline std::vector<DiffRow> run_diff(const ExperimentConfig& c) {
    detail::validate_grid(c);
    std::vector<DiffRow> rows;
    for (int n_cond : c.conditioning) {
        for (int card : c.cards) {
            for (std::size_t n : c.sizes) {
                const auto seed = detail::point_seed(c.seed, detail::diff_tag, n, card, n_cond);
                const auto design = detail::null_design(c, n, card, n_cond, seed);
                const auto x2 = all_pairs(design.matrix, Method::X2, design.z_columns, {}, c.workers);
                const auto g2 = all_pairs(design.matrix, Method::G2, design.z_columns, {}, c.workers);

                DiffRow row{n, card, n_cond, std::nullopt, 0, 0, c.seed};
                double sum = 0.0;
                for (std::size_t k = 0; k < x2.size(); ++k) {
                    if (!x2.pairs[k].result.computable) {
                        ++row.n_pairs_incomputable;
                        continue;
                    }
                    ++row.n_pairs_computable;
                    sum += *g2.pairs[k].result.statistic - *x2.pairs[k].result.statistic;
                }
                if (row.n_pairs_computable > 0) {
                    row.mean_diff = sum / static_cast<double>(row.n_pairs_computable);
                }
                rows.push_back(row);
            }
        }
    }
    return rows;
}

inline void write_csv(std::ostream& out, const std::vector<DiffRow>& rows) {
    out << "n,card,n_cond,mean_diff,n_pairs_computable,n_pairs_incomputable,seed\n";
    for (const auto& r : rows) {
        out << r.n << ',' << r.card << ',' << r.n_cond << ',' << detail::fixed_or_na(r.mean_diff, 6) << ',' << r.n_pairs_computable << ','
            << r.n_pairs_incomputable << ',' << r.seed << '\n';
    }
}

// ---------------------------------------------------------------------------
// Type I error

struct Type1Row {
    std::size_t n = 0;
    int card = 0;
    int n_cond = 0;
    Method method = Method::X2;
    std::optional<double> rejection_rate;
    bool size_correct = false;
    std::int64_t n_incomputable = 0;
    std::uint64_t seed = 0;
};

/// Rejection rate over all pairwise tests of a null matrix, per grid point and method.
/// All methods at a grid point see the same data.
inline std::vector<Type1Row> run_type1(const ExperimentConfig& c) {
    detail::validate_grid(c);
    const double n_tests = static_cast<double>(c.p_columns * (c.p_columns - 1) / 2);
    const SizeBand band = size_band(c.alpha, n_tests, c.band_inflation);

    std::vector<Type1Row> rows;
    for (int n_cond : c.conditioning) {
        for (int card : c.cards) {
            for (std::size_t n : c.sizes) {
                const auto seed = detail::point_seed(c.seed, detail::type1_tag, n, card, n_cond);
                const auto design = detail::null_design(c, n, card, n_cond, seed);
                for (Method m : c.methods) {
                    const auto results = all_pairs(design.matrix, m, design.z_columns, detail::plan_for(c, derive_seed(seed, 1)), c.workers);
                    const auto summary = rejection_rate(results, c.alpha);
                    rows.push_back(Type1Row{n, card, n_cond, m, summary.rate, summary.rate && band.contains(*summary.rate),
                                            summary.n_incomputable, c.seed});
                }
            }
        }
    }
    return rows;
}

inline void write_csv(std::ostream& out, const std::vector<Type1Row>& rows) {
    out << "n,card,n_cond,method,rejection_rate,size_correct,n_incomputable,seed\n";
    for (const auto& r : rows) {
        out << r.n << ',' << r.card << ',' << r.n_cond << ',' << to_string(r.method) << ',' << detail::fixed_or_na(r.rejection_rate, 4) << ','
            << (r.size_correct ? "true" : "false") << ',' << r.n_incomputable << ',' << r.seed << '\n';
    }
}

// ---------------------------------------------------------------------------
// Power

struct PowerRow {
    std::size_t n = 0;
    /// Binomial size of X and Y; tables have card + 1 levels.
    int card = 0;
    int b = 0;
    Method method = Method::X2;
    /// Rejections over replications where the test was computable.
    std::optional<double> power;
    int replications = 0;
    std::int64_t n_incomputable = 0;
    std::uint64_t seed = 0;
};

inline std::vector<PowerRow> run_power(const ExperimentConfig& c) {
    detail::validate_grid(c);
    if (c.replications < 1) {
        throw InputError("replications must be >= 1");
    }
    std::vector<PowerRow> rows;
    const std::size_t n_methods = c.methods.size();
    for (int card : c.cards) {
        for (std::size_t n : c.sizes) {
            for (int b : c.b_values) {
                const auto seed = derive_seed(detail::point_seed(c.seed, detail::power_tag, n, card, 0), static_cast<std::uint64_t>(b));
                std::vector<TestResult> results(static_cast<std::size_t>(c.replications) * n_methods);
                std::vector<detail::PairWorkspace> workspaces(std::max(1u, c.workers));
                parallel_for(static_cast<std::size_t>(c.replications), c.workers, [&](unsigned w, std::size_t r) {
                    const auto rep_seed = derive_seed(seed, r);
                    const auto [x, y] = gen_alternative(AlternativeSpec{b, card, n, rep_seed});
                    const StratumIndex strata = stratify({}, n);
                    for (std::size_t k = 0; k < n_methods; ++k) {
                        results[r * n_methods + k] = test_pair(x, y, strata, c.methods[k], detail::plan_for(c, derive_seed(rep_seed, 1)), workspaces[w]);
                    }
                });
                for (std::size_t k = 0; k < n_methods; ++k) {
                    std::vector<TestResult> column;
                    column.reserve(c.replications);
                    for (int r = 0; r < c.replications; ++r) {
                        column.push_back(results[static_cast<std::size_t>(r) * n_methods + k]);
                    }
                    const auto summary = rejection_rate(std::span<const TestResult>(column), c.alpha);
                    rows.push_back(PowerRow{n, card, b, c.methods[k], summary.rate, c.replications, summary.n_incomputable, c.seed});
                }
            }
        }
    }
    return rows;
}

inline void write_csv(std::ostream& out, const std::vector<PowerRow>& rows) {
    out << "n,card,b,method,power,replications,seed\n";
    for (const auto& r : rows) {
        out << r.n << ',' << r.card << ',' << r.b << ',' << to_string(r.method) << ',' << detail::fixed_or_na(r.power, 4) << ','
            << r.replications << ',' << r.seed << '\n';
    }
}

// ---------------------------------------------------------------------------
// Timing

struct BenchRow {
    std::size_t n = 0;
    int card = 0;
    Method method = Method::X2;
    double seconds = 0.0;
    double ratio_vs_x2 = 0.0;
    std::uint64_t seed = 0;
};

/// Median wall-clock seconds of one all-pairs sweep per method, after one untimed warm-up.
inline std::vector<BenchRow> run_bench(const ExperimentConfig& c) {
    if (c.bench_points.empty() || c.bench_repetitions < 1 || c.p_columns < 2 || c.n_permutations < 1) {
        throw InputError("bench needs at least one configuration, one repetition, two columns and one permutation");
    }
    std::vector<Method> methods = c.methods;
    if (std::find(methods.begin(), methods.end(), Method::X2) == methods.end()) {
        methods.insert(methods.begin(), Method::X2);
    }

    std::vector<BenchRow> rows;
    for (auto [n, card] : c.bench_points) {
        if (card < 2 || n < 1) {
            throw InputError("bench configurations need n >= 1 and cardinality >= 2");
        }
        const auto seed = detail::point_seed(c.seed, detail::bench_tag, n, card, 0);
        const auto design = detail::null_design(c, n, card, 0, seed);
        const auto plan = detail::plan_for(c, derive_seed(seed, 1));

        std::vector<BenchRow> point;
        for (Method m : methods) {
            std::vector<double> times;
            for (int rep = 0; rep <= c.bench_repetitions; ++rep) {
                const auto start = std::chrono::steady_clock::now();
                const auto results = all_pairs(design.matrix, m, design.z_columns, plan, c.workers);
                const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
                if (results.size() == 0) {
                    throw InputError("empty benchmark sweep");
                }
                if (rep > 0) {
                    times.push_back(elapsed.count());
                }
            }
            std::sort(times.begin(), times.end());
            const std::size_t mid = times.size() / 2;
            const double median = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
            point.push_back(BenchRow{n, card, m, median, 0.0, c.seed});
        }
        const double base = std::find_if(point.begin(), point.end(), [](const BenchRow& r) { return r.method == Method::X2; })->seconds;
        for (auto& r : point) {
            r.ratio_vs_x2 = base > 0.0 ? r.seconds / base : 0.0;
            rows.push_back(r);
        }
    }
    return rows;
}

inline void write_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "n,card,method,seconds,ratio_vs_x2,seed\n";
    for (const auto& r : rows) {
        out << r.n << ',' << r.card << ',' << to_string(r.method) << ',' << detail::fixed(r.seconds, 6) << ',' << detail::fixed(r.ratio_vs_x2, 4)
            << ',' << r.seed << '\n';
    }
}

} // namespace cattest
