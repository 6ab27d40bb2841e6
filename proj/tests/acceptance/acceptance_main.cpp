// Acceptance gate. Prints one PASS/FAIL line per criterion; run with a criterion number
// to evaluate only that one. Exit status is nonzero if any evaluated criterion fails.

#include "cattest/cattest.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace cattest;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

template <typename Rows>
std::string csv_text(const Rows& rows) {
    std::ostringstream out;
    write_csv(out, rows);
    return out.str();
}

// 1. Statistic values on a hand table and exact zero when O = E.
Outcome statistic_correctness() {
    Outcome o;
    const ContingencyTable t{{10, 20}, {30, 40}};
    // E = 12, 18, 28, 42 and every |O - E| = 2.
    const double x2_hand = 4.0 / 12 + 4.0 / 18 + 4.0 / 28 + 4.0 / 42;
    const double g2_hand = 2.0 * (10 * std::log(10.0 / 12) + 20 * std::log(20.0 / 18) + 30 * std::log(30.0 / 28) + 40 * std::log(40.0 / 42));
    const double x2 = x2_statistic(t).value_or(NAN);
    const double g2 = g2_statistic(t);
    o.require(std::abs(x2 - x2_hand) <= 1e-9, fmt("X2 %.12f vs %.12f", x2, x2_hand));
    o.require(std::abs(g2 - g2_hand) <= 1e-9, fmt("G2 %.12f vs %.12f", g2, g2_hand));
    o.require(std::abs(x2 - 0.79365) < 1e-5, "X2 not ~0.79365");

    int zero_checks = 0;
    for (const auto& balanced : {ContingencyTable{{5, 5}, {5, 5}}, ContingencyTable{{2, 4, 6}, {3, 6, 9}}, ContingencyTable{{1, 3}, {10, 30}, {7, 21}}}) {
        o.require(x2_statistic(balanced) == 0.0 && g2_statistic(balanced) == 0.0, "nonzero statistic on a table with O = E");
        ++zero_checks;
    }
    o.detail = o.pass ? fmt("X2 = %.10f, G2 = %.10f, %g independence tables give exactly 0", x2, g2, zero_checks) : o.detail;
    return o;
}

// 2. Chi-square survival function against numerical integration on 200 points.
Outcome survival_function() {
    Outcome o;
    const std::vector<int> dofs{1, 2, 3, 4, 6, 9, 16, 25, 48, 100};
    double worst = 0.0;
    int points = 0;
    for (int k : dofs) {
        for (int i = 0; i < 20; ++i) {
            // Spread over the bulk and both tails: 0.05 k ... about 3.5 k + 40.
            const double x = 0.05 * k + i * (0.18 * k + 2.0);
            const double err = std::abs(chi_square_sf(x, k) - testing::chi_square_sf_by_quadrature(x, k));
            worst = std::max(worst, err);
            ++points;
        }
    }
    o.require(points == 200, "grid is not 200 points");
    o.require(worst <= 1e-8, fmt("max abs error %.3e", worst));
    if (o.pass) {
        o.detail = fmt("%g points, max abs error %.3e", points, worst);
    }
    return o;
}

// 3. Permutation p-values agree with exhaustive enumeration on tiny inputs.
Outcome oracle_equivalence() {
    Outcome o;
    constexpr int instances = 60;
    constexpr int replicates = 99'999;
    CounterRng gen = rng_stream(2020, 3);
    int checked = 0;
    double worst_z = 0.0;
    for (int k = 0; k < instances; ++k) {
        const int n = 4 + static_cast<int>(gen.uniform_below(5));
        const int card_x = 2 + static_cast<int>(gen.uniform_below(2));
        const int card_y = 2 + static_cast<int>(gen.uniform_below(2));
        const bool conditional = gen.uniform_below(2) == 1;
        std::vector<int> xs(n), ys(n), zs(n);
        for (int t = 0; t < n; ++t) {
            xs[t] = static_cast<int>(gen.uniform_below(card_x));
            ys[t] = static_cast<int>(gen.uniform_below(card_y));
            zs[t] = static_cast<int>(gen.uniform_below(2));
        }
        const CategoryVector x(xs, card_x), y(ys, card_y);
        std::vector<CategoryVector> z;
        if (conditional) {
            z.emplace_back(zs, 2);
        }

        const double exact = exact_pvalue(x, y, z, Statistic::G2);
        PermutationPlan plan;
        plan.n_permutations = replicates;
        plan.seed = derive_seed(2020, static_cast<std::uint64_t>(k));
        plan.form = PValueForm::RawProportion;
        const double mc = *permutation_pvalue(x, y, z, plan).p_value;
        const double se = std::sqrt(exact * (1.0 - exact) / replicates);
        const double gap = std::abs(mc - exact);
        o.require(gap <= 3.0 * se + 1e-12, fmt("instance %g: permutation %.5f vs exact %.5f", k, mc, exact));
        if (se > 0) {
            worst_z = std::max(worst_z, gap / se);
        }
        ++checked;
    }
    if (o.pass) {
        o.detail = fmt("%g instances, R = 99999, largest deviation %.2f SE", checked, worst_z);
    }
    return o;
}

ExperimentConfig type1_config() {
    ExperimentConfig c;
    c.sizes = {40, 280, 520, 760, 1000};
    c.cards = {2, 3, 4, 5};
    return c;
}

double share(const std::vector<Type1Row>& rows, Method m, int n_cond, int min_card) {
    int hits = 0, total = 0;
    for (const auto& r : rows) {
        if (r.method == m && r.n_cond == n_cond && r.card >= min_card) {
            ++total;
            hits += r.size_correct ? 1 : 0;
        }
    }
    return total == 0 ? NAN : static_cast<double>(hits) / total;
}

// 4. Type I error pattern across methods.
Outcome type1_reproduction() {
    Outcome o;
    auto c = type1_config();
    c.methods = {Method::X2, Method::G2};
    c.conditioning = {0};
    const auto unconditional = run_type1(c);
    c.methods = {Method::PermG2};
    c.conditioning = {2};
    const auto conditional = run_type1(c);

    const double x2 = share(unconditional, Method::X2, 0, 2);
    const double g2 = share(unconditional, Method::G2, 0, 3);
    const double perm = share(conditional, Method::PermG2, 2, 2);
    o.require(x2 >= 0.9, fmt("X2 size-correct on %.0f%% of Z=0 points (need >= 90%%)", 100 * x2));
    o.require(g2 <= 0.3, fmt("G2 size-correct on %.0f%% of Z=0 points at cards 3-5 (need <= 30%%)", 100 * g2));
    o.require(perm >= 0.9, fmt("permutation G2 size-correct on %.0f%% of Z=2 points (need >= 90%%)", 100 * perm));
    for (const auto* rows : {&unconditional, &conditional}) {
        for (const auto& r : *rows) {
            std::printf("  n=%zu card=%d Z=%d %s rate=%s size_correct=%s\n", r.n, r.card, r.n_cond, std::string(to_string(r.method)).c_str(),
                        r.rejection_rate ? fmt("%.4f", *r.rejection_rate).c_str() : "NA", r.size_correct ? "true" : "false");
        }
    }
    const std::string summary = fmt("X2 %.0f%%, G2 (cards 3-5) %.0f%%, permutation G2 at Z=2 %.0f%%", 100 * x2, 100 * g2, 100 * perm);
    o.detail = o.pass ? summary : o.detail + " [" + summary + "]";
    return o;
}

// 5. Pearson is mostly not computable with two conditioning variables at cardinality 5.
Outcome incomputability() {
    Outcome o;
    ExperimentConfig c;
    c.sizes = {40, 100, 200, 300, 400};
    c.cards = {5};
    c.conditioning = {2};
    double lowest = 1.0;
    for (const auto& r : run_diff(c)) {
        const double frac = static_cast<double>(r.n_pairs_incomputable) / static_cast<double>(r.n_pairs_computable + r.n_pairs_incomputable);
        lowest = std::min(lowest, frac);
        o.require(frac > 0.5, fmt("n = %g: only %.1f%% incomputable", static_cast<double>(r.n), 100 * frac));
    }
    if (o.pass) {
        o.detail = fmt("lowest incomputable fraction over n in 40..400: %.1f%%", 100 * lowest);
    }
    return o;
}

// 6. G2 exceeds X2 on average and the gap shrinks with n.
Outcome statistic_difference() {
    Outcome o;
    ExperimentConfig c;
    c.sizes = {100, 10000};
    c.cards = {5};
    const auto rows = run_diff(c);
    const double small = rows.at(0).mean_diff.value_or(NAN);
    const double large = rows.at(1).mean_diff.value_or(NAN);
    o.require(small > 0.0, fmt("mean diff at n=100 is %.6f", small));
    o.require(std::abs(large) < 0.1 * small, fmt("|mean diff| at n=10000 is %.6f vs %.6f at n=100", large, small));
    if (o.pass) {
        o.detail = fmt("mean(G2 - X2): %.6f at n=100, %.6f at n=10000 (%.1f%%)", small, large, 100 * std::abs(large) / small);
    }
    return o;
}

// 7. Power curves.
Outcome power_behavior() {
    Outcome o;
    ExperimentConfig c;
    c.sizes = {30, 50, 100, 200};
    c.cards = {2, 4};
    c.replications = 500;
    c.methods = {Method::X2, Method::PermG2};
    const auto rows = run_power(c);

    std::map<std::tuple<int, std::size_t, Method, int>, const PowerRow*> at;
    for (const auto& r : rows) {
        at[{r.card, r.n, r.method, r.b}] = &r;
    }
    auto se = [](const PowerRow& r) {
        const double m = static_cast<double>(r.replications - r.n_incomputable);
        return std::sqrt(*r.power * (1.0 - *r.power) / m);
    };
    double largest_gap = 0.0;
    for (int card : c.cards) {
        for (std::size_t n : c.sizes) {
            for (Method m : c.methods) {
                const std::string where = fmt("card %g n %g ", card, static_cast<double>(n)) + std::string(to_string(m));
                const PowerRow& null_row = *at.at({card, n, m, 0});
                const double computable = static_cast<double>(null_row.replications - null_row.n_incomputable);
                const auto band = size_band(c.alpha, computable, 1.0);
                o.require(null_row.power && band.contains(*null_row.power), where + fmt(": power at b=0 %.4f outside [%.4f, %.4f]", null_row.power.value_or(NAN), band.lo, band.hi));
                for (int sign : {-1, 1}) {
                    for (int k = 0; k < 3; ++k) {
                        const PowerRow& inner = *at.at({card, n, m, sign * k});
                        const PowerRow& outer = *at.at({card, n, m, sign * (k + 1)});
                        const double slack = 2.0 * std::hypot(se(inner), se(outer));
                        o.require(*outer.power >= *inner.power - slack, where + fmt(": power drops from %.4f to %.4f at |b| = %g", *inner.power, *outer.power, k + 1));
                    }
                }
            }
            for (int b : c.b_values) {
                const double gap = std::abs(*at.at({card, n, Method::X2, b})->power - *at.at({card, n, Method::PermG2, b})->power);
                largest_gap = std::max(largest_gap, gap);
                o.require(gap <= 0.05, fmt("card %g n %g b %g: X2 and permutation G2 differ by ", card, static_cast<double>(n), b) + fmt("%.4f", gap));
            }
        }
    }
    if (o.pass) {
        o.detail = fmt("cards 2 and 4, n in {30,50,100,200}, 500 replications; largest X2 vs permutation G2 gap %.4f", largest_gap);
    }
    return o;
}

// 8. Relative cost of the three procedures.
Outcome performance_ordering() {
    Outcome o;
    ExperimentConfig c;
    c.bench_repetitions = 3;
    c.workers = 1;
    c.methods = {Method::X2, Method::G2, Method::PermG2};
    const auto rows = run_bench(c);
    double lowest_ratio = INFINITY;
    for (std::size_t k = 0; k + 2 < rows.size(); k += 3) {
        const auto& x2 = rows[k];
        const auto& g2 = rows[k + 1];
        const auto& perm = rows[k + 2];
        const std::string where = fmt("n %g card %g: ", static_cast<double>(x2.n), x2.card);
        o.require(x2.method == Method::X2 && g2.method == Method::G2 && perm.method == Method::PermG2, where + "unexpected row layout");
        o.require(x2.seconds <= g2.seconds, where + fmt("X2 %.6fs slower than G2 %.6fs", x2.seconds, g2.seconds));
        o.require(g2.seconds <= perm.seconds, where + fmt("G2 %.6fs slower than permutation G2 %.6fs", g2.seconds, perm.seconds));
        o.require(perm.seconds / g2.seconds > 20.0, where + fmt("permutation/G2 ratio %.1f", perm.seconds / g2.seconds));
        lowest_ratio = std::min(lowest_ratio, perm.seconds / g2.seconds);
        std::printf("  n=%zu card=%d X2=%.6fs G2=%.6fs PermG2=%.6fs\n", x2.n, x2.card, x2.seconds, g2.seconds, perm.seconds);
    }
    if (o.pass) {
        o.detail = fmt("X2 <= G2 <= permutation G2 at every point; smallest permutation/G2 ratio %.1f", lowest_ratio);
    }
    return o;
}

// 9. Reruns reproduce the CSV byte for byte for 1 and 8 workers.
Outcome determinism() {
    Outcome o;
    ExperimentConfig c;
    c.sizes = {40, 120};
    c.cards = {2, 4};
    c.conditioning = {0, 1};
    c.p_columns = 20;
    c.n_permutations = 199;
    c.replications = 100;
    c.b_values = {-1, 0, 2};

    auto run_all = [](ExperimentConfig cfg, unsigned workers) {
        cfg.workers = workers;
        std::string text = csv_text(run_diff(cfg)) + csv_text(run_type1(cfg));
        cfg.conditioning = {0};
        return text + csv_text(run_power(cfg));
    };
    const std::string reference = run_all(c, 1);
    o.require(run_all(c, 1) == reference, "rerun with 1 worker differs");
    o.require(run_all(c, 8) == reference, "run with 8 workers differs");
    o.require(run_all(c, 8) == reference, "rerun with 8 workers differs");
    if (o.pass) {
        o.detail = fmt("diff, type1 and power CSV identical across 4 runs (%g bytes)", static_cast<double>(reference.size()));
    }
    return o;
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"statistic correctness", statistic_correctness},
        {"chi-square survival function", survival_function},
        {"permutation vs exact enumeration", oracle_equivalence},
        {"type I error pattern", type1_reproduction},
        {"Pearson incomputability", incomputability},
        {"G2 - X2 difference", statistic_difference},
        {"power behavior", power_behavior},
        {"performance ordering", performance_ordering},
        {"determinism", determinism},
    };

    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > static_cast<int>(criteria.size())) {
            std::fprintf(stderr, "usage: %s [criterion 1-%zu]\n", argv[0], criteria.size());
            return 2;
        }
    }

    bool all_pass = true;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only != 0 && static_cast<int>(k) + 1 != only) {
            continue;
        }
        Outcome result;
        try {
            result = criteria[k].second();
        } catch (const std::exception& e) {
            result.pass = false;
            result.detail = std::string("exception: ") + e.what();
        }
        all_pass = all_pass && result.pass;
        std::printf("%s criterion %zu (%s): %s\n", result.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, result.detail.c_str());
        std::fflush(stdout);
    }
    return all_pass ? 0 : 1;
}
