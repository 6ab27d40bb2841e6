#include "cattest/exact.hpp"

#include <gtest/gtest.h>

#include <numeric>

namespace cattest {
namespace {

TEST(ExactPvalue, FourObservationsTwoOfSix) {
    const CategoryVector x({0, 0, 1, 1}, 2), y({0, 0, 1, 1}, 2);
    EXPECT_NEAR(exact_pvalue(x, y, std::vector<CategoryVector>{}, Statistic::G2), 2.0 / 6.0, 1e-12);
    const auto dist = exact_distribution(x, y, std::vector<CategoryVector>{}, Statistic::G2);
    // Arrangements: 2 aligned (G2 = 8 ln 2), 4 with one swap (G2 = 0).
    ASSERT_EQ(dist.support.size(), 2u);
    EXPECT_NEAR(dist.support[0].first, 0.0, 1e-12);
    EXPECT_NEAR(dist.support[0].second, 4.0 / 6.0, 1e-12);
    EXPECT_NEAR(dist.support[1].first, 8.0 * std::log(2.0), 1e-12);
    EXPECT_NEAR(dist.total_mass, 1.0, 1e-9);
}

TEST(ExactPvalue, ConstantYAndZeroStatisticGiveOne) {
    EXPECT_EQ(exact_pvalue(CategoryVector({0, 1, 1}, 2), CategoryVector({1, 1, 1}, 2), std::vector<CategoryVector>{}, Statistic::G2), 1.0);
    EXPECT_EQ(exact_pvalue(CategoryVector({0, 0, 1, 1}, 2), CategoryVector({0, 1, 0, 1}, 2), std::vector<CategoryVector>{}, Statistic::X2), 1.0);
}

TEST(ExactPvalue, StratifiedEnumerationMultipliesArrangements) {
    const CategoryVector x({0, 1, 0, 1, 0, 1}, 2), y({0, 1, 1, 0, 0, 1}, 2);
    const std::vector<CategoryVector> z{CategoryVector({0, 0, 0, 0, 1, 1}, 2)};
    const auto dist = exact_distribution(x, y, z, Statistic::G2);
    double mass = 0.0;
    for (const auto& [value, m] : dist.support) {
        EXPECT_GE(m, 0.0);
        EXPECT_GE(value, 0.0);
        mass += m;
    }
    EXPECT_NEAR(mass, 1.0, 1e-9);
    // 4!/(2!2!) * 2!/(1!1!) = 12 arrangements, so every mass is a multiple of 1/12.
    for (const auto& [value, m] : dist.support) {
        const double units = m * 12.0;
        EXPECT_NEAR(units, std::round(units), 1e-9);
    }
}

TEST(ExactPvalue, GuardsLargeStrata) {
    std::vector<int> codes(11);
    for (int t = 0; t < 11; ++t) {
        codes[t] = t % 2;
    }
    EXPECT_THROW(exact_pvalue(CategoryVector(codes, 2), CategoryVector(codes, 2), std::vector<CategoryVector>{}, Statistic::G2), GuardError);
}

TEST(ExactPvalue, IncomputablePearsonIsAnInputError) {
    EXPECT_THROW(exact_pvalue(CategoryVector({0, 1}, 2), CategoryVector({0, 0}, 2), std::vector<CategoryVector>{}, Statistic::X2), InputError);
}

TEST(Fisher, PerfectSeparation) {
    // 2 / C(10, 5)
    EXPECT_NEAR(fisher_2x2_pvalue(ContingencyTable{{5, 0}, {0, 5}}), 2.0 / 252.0, 1e-12);
    EXPECT_NEAR(fisher_2x2_pvalue(ContingencyTable{{5, 0}, {0, 5}}), 0.00794, 1e-5);
}

TEST(Fisher, ModalTable) {
    EXPECT_NEAR(fisher_2x2_pvalue(ContingencyTable{{5, 5}, {5, 5}}), 1.0, 1e-12);
}

TEST(Fisher, NearSeparation) {
    // Margins (10, 10)/(10, 10): tables a = 0, 1, 9, 10 have weights 1, 100, 100, 1 out of C(20, 10).
    EXPECT_NEAR(fisher_2x2_pvalue(ContingencyTable{{1, 9}, {9, 1}}), 202.0 / 184756.0, 1e-12);
}

TEST(Fisher, RejectsNon2x2) {
    EXPECT_THROW(fisher_2x2_pvalue(ContingencyTable{{1, 2, 3}, {1, 2, 3}}), InputError);
    EXPECT_THROW(fisher_2x2_pvalue(ContingencyTable{{0, 0}, {0, 0}}), InputError);
}

TEST(Fisher, ValidPvaluesOnAllSmallTables) {
    // Range check only; G^2 ordering and point-probability ordering may differ.
    for (Count a = 0; a <= 4; ++a) {
        for (Count b = 0; b <= 4; ++b) {
            for (Count c = 0; c <= 4; ++c) {
                for (Count d = 0; d <= 4; ++d) {
                    if (a + b + c + d == 0) {
                        continue;
                    }
                    const double p = fisher_2x2_pvalue(ContingencyTable{{a, b}, {c, d}});
                    EXPECT_GT(p, 0.0);
                    EXPECT_LE(p, 1.0);
                }
            }
        }
    }
}

} // namespace
} // namespace cattest
