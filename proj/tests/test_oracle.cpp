#include "tandem/experiments.hpp"
#include "tandem/oracle.hpp"

#include <gtest/gtest.h>

using namespace tandem;

namespace {

const SystemParams kSymmetric{0.25, 0.25, 0.15, 0.15, 0.1, 0.1, 1.0, 1.0};
const SystemParams kSlope{0.8, 0.6, 0.6, 8.0, 0.03, 7.43, 16.0, 1.5};

SystemParams sample(int i) {
    ExperimentConfig c;
    c.seed = 2024;
    c.regime = regime_names()[static_cast<std::size_t>(i) % regime_names().size()].first;
    return generate_instance(c, static_cast<std::uint64_t>(i));
}

} // namespace

TEST(Enumeration, SymmetricTwoLevels) {
    const OracleResult r = enumerate_policies(kSymmetric, 2);
    EXPECT_LE(r.residual, 1e-9);
    EXPECT_NEAR(r.value(1, 1), solve(kSymmetric, 2).values.value(1, 1), 1e-9);
    EXPECT_GT(r.policies_examined, 1);
}

TEST(Enumeration, SlopeInstanceThreeLevels) {
    const OracleResult r = enumerate_policies(kSlope, 3);
    EXPECT_LE(r.residual, 1e-9);
}

TEST(Enumeration, SingleLevelBoundary) {
    const OracleResult r = enumerate_policies(kSymmetric, 1);
    const SystemParams& p = kSymmetric;
    EXPECT_NEAR(r.value(0, 1), p.h2 / (p.nu2 + p.xi2), 1e-12);
    EXPECT_NEAR(r.value(1, 0), p.h1 / (p.nu1 + p.xi1) + p.h2 / (p.nu2 + p.xi2), 1e-12);
}

TEST(Enumeration, PolicyCountIsProductOfActionSets) {
    const SystemParams u = uniformize(kSlope);
    long long expected = 1;
    for (int n = 1; n <= 2; ++n)
        for (int x1 = 0; x1 <= n; ++x1) expected *= static_cast<long long>(feasible_allocations({x1, n - x1}, u).size());
    EXPECT_EQ(enumerate_policies(kSlope, 2).policies_examined, expected);
}

TEST(Enumeration, PruningKeepsMinimum) {
    for (int i = 0; i < 6; ++i) {
        const SystemParams p = sample(i);
        const OracleResult full = enumerate_policies(p, 3);
        const OracleResult pruned = enumerate_policies(p, 3, true);
        EXPECT_LT(pruned.policies_examined, full.policies_examined);
        for (int n = 0; n <= 3; ++n)
            for (int x1 = 0; x1 <= n; ++x1) EXPECT_NEAR(pruned.value(x1, n - x1), full.value(x1, n - x1), 1e-12);
    }
}

TEST(Enumeration, SearchSpaceGuard) {
    try {
        enumerate_policies(kSlope, 4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SearchSpaceTooLarge);
    }
    EXPECT_THROW(enumerate_policies(kSlope, 5), Error);
}

TEST(ValueIteration, MatchesSolverAtFifteen) {
    for (int i = 0; i < 8; ++i) {
        const OracleResult r = value_iteration(sample(i), 15);
        EXPECT_LE(r.residual, 1e-6) << i;
        EXPECT_LT(r.span_gap, 1e-10);
    }
}

TEST(ValueIteration, TighterToleranceDoesNotHurt) {
    const SystemParams p = sample(3);
    const OracleResult a = value_iteration(p, 15, 1e-8);
    const OracleResult b = value_iteration(p, 15, 5e-9);
    EXPECT_LE(b.residual, a.residual);
    EXPECT_GE(b.iterations, a.iterations);
}

TEST(ValueIteration, AgreesWithEnumeration) {
    const OracleResult vi = value_iteration(kSlope, 2);
    const OracleResult en = enumerate_policies(kSlope, 2);
    for (int n = 0; n <= 2; ++n)
        for (int x1 = 0; x1 <= n; ++x1) EXPECT_NEAR(vi.value(x1, n - x1), en.value(x1, n - x1), 1e-6);
}

TEST(ValueIteration, IterationCap) {
    try {
        value_iteration(kSlope, 10, 1e-10, 5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MaxIterationsExceeded);
    }
}
