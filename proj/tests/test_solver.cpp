#include "tandem/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace tandem;

namespace {

SystemParams symmetric() { return {0.25, 0.25, 0.15, 0.15, 0.1, 0.1, 1.0, 1.0}; }
SystemParams slope_params() { return {0.8, 0.6, 0.6, 8.0, 0.03, 7.43, 16.0, 1.5}; }

// Random valid instance; nu_i is zeroed with probability 1/5.
SystemParams random_instance(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> rate(0.1, 5.0), cost(0.2, 10.0), frac(0.05, 1.0);
    std::bernoulli_distribution drop(0.2);
    while (true) {
        SystemParams p{rate(gen), rate(gen), rate(gen), rate(gen), 0, 0, cost(gen), cost(gen)};
        if (drop(gen)) p.nu1 = 0;
        if (drop(gen)) p.nu2 = 0;
        if (p.nu1 > 0) p.xi1 = frac(gen) * p.mu1;
        if (p.nu2 > 0) p.xi2 = frac(gen) * p.mu2;
        try {
            return validate(p);
        } catch (const Error&) {
        }
    }
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

} // namespace

TEST(Solve, SymmetricBoundaryValues) {
    const Solution s = solve(symmetric(), 4);
    EXPECT_EQ(s.values.value(0, 0), 0.0);
    EXPECT_NEAR(s.values.value(1, 0), 1 / 0.35 + 1 / 0.35, 1e-12);
    EXPECT_NEAR(s.values.value(0, 2), 2 / 0.4 + 1 / 0.35, 1e-12);
}

// Closed forms for the boundary states, written from the raw rates.
TEST(Solve, BoundaryClosedForms) {
    std::mt19937_64 gen(42);
    for (int k = 0; k < 40; ++k) {
        const SystemParams p = random_instance(gen);
        const int n = 12;
        const Solution s = solve(p, n);
        const double r2_one = p.nu2 > 0 ? p.nu2 + p.xi2 : p.mu2;
        const double r2_many = p.nu2 + p.mu2;
        const double r1_one = p.nu1 > 0 ? p.nu1 + p.xi1 : p.mu1;
        const double r1_many = p.nu1 + p.mu1;
        EXPECT_LE(rel(s.values.value(0, 1), p.h2 / r2_one), 1e-12);
        for (int x2 = 2; x2 <= n; ++x2)
            EXPECT_LE(rel(s.values.value(0, x2) - s.values.value(0, x2 - 1), p.h2 * x2 / r2_many), 1e-12);
        EXPECT_LE(rel(s.values.value(1, 0) - s.values.value(0, 1), p.h1 / r1_one), 1e-12);
        for (int x1 = 2; x1 <= n; ++x1)
            EXPECT_LE(rel(s.values.value(x1, 0) - s.values.value(x1 - 1, 1), p.h1 * x1 / r1_many), 1e-12);
    }
}

TEST(Solve, ValuesIncreaseInBothCoordinates) {
    std::mt19937_64 gen(7);
    for (int k = 0; k < 20; ++k) {
        const Solution s = solve(random_instance(gen), 15);
        for (int n = 0; n < 15; ++n) {
            for (int x1 = 0; x1 <= n; ++x1) {
                const int x2 = n - x1;
                EXPECT_GT(s.values.value(x1 + 1, x2), s.values.value(x1, x2));
                EXPECT_GT(s.values.value(x1, x2 + 1), s.values.value(x1, x2));
            }
        }
    }
}

TEST(Solve, StoredActionAttainsMinimum) {
    std::mt19937_64 gen(11);
    for (int k = 0; k < 10; ++k) {
        const SystemParams raw = random_instance(gen);
        const Solution s = solve(raw, 10);
        const SystemParams& p = s.values.params();
        for (int n = 1; n <= 10; ++n) {
            for (int x1 = 0; x1 <= n; ++x1) {
                const int x2 = n - x1;
                double best = INFINITY;
                for (const auto& a : feasible_allocations({x1, x2}, p)) {
                    double w = p.h1 * x1 + p.h2 * x2;
                    if (a.rho1 > 0) w += a.rho1 * s.values.normalized(x1 - 1, x2 + 1);
                    if (a.rho2 > 0) w += a.rho2 * s.values.normalized(x1, x2 - 1);
                    best = std::min(best, w / (a.rho1 + a.rho2));
                }
                const double v = s.values.normalized(x1, x2);
                EXPECT_LE(std::abs(v - best), 1e-12 * (1 + std::abs(v)));
                EXPECT_GE(s.policy.gap(x1, x2), 0.0);
            }
        }
    }
}

TEST(Solve, TimeRescalingKeepsPolicy) {
    const SystemParams p = slope_params();
    SystemParams q = p;
    const double c = 3.7;
    for (double* r : {&q.nu1, &q.nu2, &q.mu1, &q.mu2, &q.xi1, &q.xi2}) *r *= c;
    const Solution a = solve(p, 20), b = solve(q, 20);
    for (int n = 1; n <= 20; ++n) {
        for (int x1 = 0; x1 <= n; ++x1) {
            EXPECT_TRUE(a.policy.at(x1, n - x1).same_assignment(b.policy.at(x1, n - x1)));
            EXPECT_NEAR(b.values.value(x1, n - x1), a.values.value(x1, n - x1) / c,
                        1e-12 * a.values.value(x1, n - x1));
        }
    }
}

TEST(QValue, MatchesBoundaryFormulas) {
    const Solution s = solve(symmetric(), 3);
    const SystemParams& p = s.values.params();
    Allocation collab{Dedicated::work, Dedicated::idle, Flex::station1, true, false, p.nu1 + p.xi1, 0.0};
    EXPECT_NEAR(q_value({1, 0}, collab, s.values), p.h1 / (p.nu1 + p.xi1) + s.values.normalized(0, 1), 1e-12);
    Allocation both{Dedicated::idle, Dedicated::work, Flex::station2, false, false, 0.0, p.nu2 + p.mu2};
    EXPECT_NEAR(q_value({0, 3}, both, s.values), 3 * p.h2 / (p.nu2 + p.mu2) + s.values.normalized(0, 2), 1e-12);
}

TEST(QValue, ScaleInvariant) {
    const Solution s = solve(symmetric(), 3);
    Allocation a{Dedicated::work, Dedicated::work, Flex::station1, false, false, 0.3, 0.25};
    Allocation b = a;
    b.rho1 *= 2;
    b.rho2 *= 2;
    SystemParams p2 = s.values.params();
    p2.h1 *= 2;
    p2.h2 *= 2;
    ValueTable t2(p2, 3);
    for (int n = 1; n <= 3; ++n)
        for (int x1 = 0; x1 <= n; ++x1) t2.set_normalized({x1, n - x1}, s.values.normalized(x1, n - x1));
    EXPECT_NEAR(q_value({2, 1}, a, s.values), q_value({2, 1}, b, t2), 1e-12);
}

TEST(QValue, MissingNeighbour) {
    ValueTable t(uniformize(symmetric()), 3);
    Allocation a{Dedicated::work, Dedicated::idle, Flex::station1, false, false, 0.5, 0.0};
    try {
        q_value({2, 0}, a, t);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DependencyMissing);
    }
}

TEST(EvaluatePolicy, OptimalPolicyReproducesValues) {
    std::mt19937_64 gen(5);
    for (int k = 0; k < 10; ++k) {
        const SystemParams p = random_instance(gen);
        const Solution s = solve(p, 12);
        const ValueTable v = evaluate_policy(p, s.policy);
        for (int n = 0; n <= 12; ++n)
            for (int x1 = 0; x1 <= n; ++x1)
                EXPECT_LE(rel(v.value(x1, n - x1), s.values.value(x1, n - x1)), 1e-12);
    }
}

TEST(EvaluatePolicy, SuboptimalPolicyCostsMore) {
    const SystemParams p = slope_params();
    const Solution s = solve(p, 10);
    const SystemParams u = s.values.params();
    Policy pol = s.policy;
    // Flexible server always downstream when there is work there, upstream
    // dedicated server idle whenever it can be.
    for (int n = 1; n <= 10; ++n) {
        for (int x1 = 0; x1 <= n; ++x1) {
            const State st{x1, n - x1};
            const auto acts = feasible_allocations(st, u);
            const Allocation* pick = nullptr;
            for (const auto& a : acts) {
                const bool down = st.x2 == 0 || a.flex == Flex::station2;
                if (!down || a.rho2 != max_rate2(st, u, a.flex)) continue;
                if (!pick || (st.x2 == 0 ? a.rho1 > pick->rho1 : a.rho1 < pick->rho1)) pick = &a;
            }
            ASSERT_NE(pick, nullptr);
            pol.action[tri_index(x1, n - x1)] = *pick;
        }
    }
    const ValueTable v = evaluate_policy(p, pol);
    bool strictly = false;
    for (int n = 1; n <= 10; ++n) {
        for (int x1 = 0; x1 <= n; ++x1) {
            EXPECT_GE(v.value(x1, n - x1), s.values.value(x1, n - x1) * (1 - 1e-12));
            strictly = strictly || v.value(x1, n - x1) > s.values.value(x1, n - x1) * (1 + 1e-9);
        }
    }
    EXPECT_TRUE(strictly);
}

TEST(EvaluatePolicy, SingleJobUpstream) {
    const SystemParams p = symmetric();
    const Solution s = solve(p, 1);
    Policy pol = s.policy;
    const SystemParams u = s.values.params();
    pol.action[tri_index(1, 0)] = Allocation{Dedicated::idle, Dedicated::idle, Flex::station1, false, false, u.mu1, 0};
    const ValueTable v = evaluate_policy(p, pol);
    EXPECT_NEAR(v.value(1, 0), p.h1 / p.mu1 + v.value(0, 1), 1e-12);
}

TEST(EvaluatePolicy, RejectsInfeasibleAction) {
    const SystemParams p = symmetric();
    const Solution s = solve(p, 2);
    Policy pol = s.policy;
    const SystemParams u = s.values.params();
    // separate jobs with a single upstream job
    pol.action[tri_index(1, 0)] =
        Allocation{Dedicated::work, Dedicated::idle, Flex::station1, false, false, u.nu1 + u.mu1, 0};
    try {
        evaluate_policy(p, pol);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InfeasibleAction);
    }
}

TEST(ValueTable, OutsideDomain) {
    const Solution s = solve(symmetric(), 3);
    EXPECT_THROW(s.values.value(2, 2), Error);
    EXPECT_THROW(s.values.value(-1, 0), Error);
}
