#include "tandem/experiments.hpp"

#include <gtest/gtest.h>

using namespace tandem;

namespace {

ExperimentConfig config(BatchRegime r, int count, std::uint64_t seed = 7) {
    ExperimentConfig c = ExperimentConfig::defaults_for(r);
    c.count = count;
    c.seed = seed;
    return c;
}

// The regime definitions restated independently of the generator.
bool satisfies(BatchRegime r, const SystemParams& p) {
    const double up = p.mu1 * (p.h1 - p.h2), down = p.mu2 * p.h2;
    switch (r) {
    case BatchRegime::thm1_hypotheses:
    case BatchRegime::lemma_suite: return p.h1 >= p.h2 && p.nu2 >= p.mu2 && p.mu1 >= p.mu2;
    case BatchRegime::thm1_violate_nu2: return p.h1 >= p.h2 && p.nu2 < p.mu2 && p.mu1 >= p.mu2;
    case BatchRegime::thm1_violate_mu1: return p.h1 >= p.h2 && p.nu2 >= p.mu2 && p.mu1 < p.mu2;
    case BatchRegime::thm1_violate_both: return p.h1 >= p.h2 && p.nu2 < p.mu2 && p.mu1 < p.mu2;
    case BatchRegime::thm2_nu2_ge_mu2: return p.nu1 == 0 && p.xi1 == 0 && up < down && p.nu2 >= p.mu2;
    case BatchRegime::thm2_nu2_lt_mu2: return p.nu1 == 0 && p.xi1 == 0 && up < down && p.nu2 < p.mu2;
    case BatchRegime::thm2_priority: return p.nu1 == 0 && p.xi1 == 0 && up >= down;
    case BatchRegime::thm3_switching: return p.nu2 == 0 && p.xi2 == 0 && p.h1 >= p.h2 && p.mu1 >= p.mu2;
    case BatchRegime::thm3_priority: return p.nu2 == 0 && p.h1 >= p.h2 && p.mu1 >= p.mu2 && up <= down;
    case BatchRegime::thm3_mu1_lt_mu2: return p.nu2 == 0 && p.h1 >= p.h2 && p.mu1 < p.mu2 && up > down;
    case BatchRegime::idling_h1_lt_h2: return p.h1 < p.h2 && p.nu1 > 0 && p.nu2 > 0;
    case BatchRegime::thm6_nu2_zero: return p.h1 < p.h2 && p.nu2 == 0 && p.nu1 > 0;
    }
    return false;
}

} // namespace

TEST(Rng, Deterministic) {
    Rng a(123), b(123), c(124);
    for (int i = 0; i < 10; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        EXPECT_NE(x, c.next());
    }
    Rng u(5);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 1.0);
        const double y = u.log_uniform(0.05, 10.0);
        EXPECT_GE(y, 0.05 * (1 - 1e-12));
        EXPECT_LE(y, 10.0 * (1 + 1e-12));
    }
}

TEST(GenerateInstance, SameIndexSameInstance) {
    const auto c = config(BatchRegime::thm1_hypotheses, 10);
    EXPECT_EQ(generate_instance(c, 3), generate_instance(c, 3));
    EXPECT_NE(generate_instance(c, 3), generate_instance(c, 4));
}

TEST(GenerateInstance, EveryRegimeHonoursItsConditions) {
    for (const auto& [r, name] : regime_names()) {
        const auto c = config(r, 200, 99);
        for (std::uint64_t i = 0; i < 200; ++i) {
            const SystemParams p = generate_instance(c, i);
            EXPECT_NO_THROW(validate(p)) << name;
            EXPECT_TRUE(satisfies(r, p)) << name << " index " << i;
            for (double rate : {p.nu1, p.nu2, p.mu1, p.mu2}) {
                if (rate == 0.0) continue;
                EXPECT_GE(rate, c.rate_range.lo * (1 - 1e-12)) << name;
                EXPECT_LE(rate, c.rate_range.hi * (1 + 1e-12)) << name;
            }
        }
    }
}

TEST(GenerateInstance, UnsatisfiableRegime) {
    auto c = config(BatchRegime::thm1_violate_both, 1);
    c.rate_range = {1.0, 1.0}; // nu2 < mu2 impossible
    try {
        generate_instance(c, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::RegimeUnsatisfiable);
    }
}

TEST(Config, Checks) {
    auto c = config(BatchRegime::thm1_hypotheses, 0);
    EXPECT_THROW(c.check(), Error);
    c.count = 5;
    c.n_max = 9;
    EXPECT_THROW(c.check(), Error);
    EXPECT_THROW(parse_regime("thm9"), Error);
    EXPECT_EQ(parse_regime("thm3_priority"), BatchRegime::thm3_priority);
    EXPECT_EQ(ExperimentConfig::defaults_for(BatchRegime::idling_h1_lt_h2).n_max, 200);
    EXPECT_EQ(ExperimentConfig::defaults_for(BatchRegime::thm1_hypotheses).n_max, 40);
}

TEST(RunBatch, SwitchingRegimeHasNoViolations) {
    const BatchReport rep = run_batch(config(BatchRegime::thm1_hypotheses, 150));
    EXPECT_EQ(rep.solve_errors, 0);
    EXPECT_EQ(rep.asserted_violations(), 0);
    ASSERT_NE(rep.find("slope_at_least_minus_one"), nullptr);
    EXPECT_TRUE(rep.find("slope_at_least_minus_one")->asserted);
    EXPECT_EQ(rep.find("switching_curve")->instances_checked, 150);
}

TEST(RunBatch, PriorityRegimes) {
    for (BatchRegime r : {BatchRegime::thm2_priority, BatchRegime::thm3_priority}) {
        const BatchReport rep = run_batch(config(r, 100));
        EXPECT_TRUE(rep.ok()) << rep.regime;
    }
}

TEST(RunBatch, ThreadCountDoesNotChangeResults) {
    auto c = config(BatchRegime::thm1_violate_both, 200);
    const BatchReport one = run_batch(c);
    c.threads = 3;
    const BatchReport three = run_batch(c);
    ASSERT_EQ(one.claims.size(), three.claims.size());
    for (std::size_t i = 0; i < one.claims.size(); ++i) {
        EXPECT_EQ(one.claims[i].claim, three.claims[i].claim);
        EXPECT_EQ(one.claims[i].violations, three.claims[i].violations);
    }
    ASSERT_EQ(one.counterexamples.size(), three.counterexamples.size());
    for (std::size_t i = 0; i < one.counterexamples.size(); ++i) {
        EXPECT_EQ(one.counterexamples[i].index, three.counterexamples[i].index);
        EXPECT_EQ(one.counterexamples[i].params, three.counterexamples[i].params);
    }
}

TEST(RunBatch, ObservedSlopeViolationsReplay) {
    // seed 7 has steep segments among its first few hundred instances
    auto c = config(BatchRegime::thm1_violate_both, 400);
    const BatchReport rep = run_batch(c);
    EXPECT_EQ(rep.asserted_violations(), 0);
    const ClaimTally* slope = rep.find("slope_at_least_minus_one");
    ASSERT_NE(slope, nullptr);
    EXPECT_FALSE(slope->asserted);
    EXPECT_GT(slope->violations, 0);
    int replayed = 0;
    for (const auto& cx : rep.counterexamples) {
        const auto v = replay(c, cx);
        ASSERT_TRUE(v.has_value());
        EXPECT_FALSE(v->pass);
        ASSERT_TRUE(v->witness.has_value());
        EXPECT_EQ(v->witness->x1, cx.witness.x1);
        EXPECT_EQ(v->witness->x2, cx.witness.x2);
        ++replayed;
    }
    EXPECT_GT(replayed, 0);
}

TEST(PaperExamples, Reproduced) {
    const GoldenReport rep = reproduce_paper_examples();
    EXPECT_TRUE(rep.ok());
    EXPECT_NEAR(rep.upstream_saving, 9.18, 1e-12);
    EXPECT_NEAR(rep.downstream_saving, 9.24, 1e-12);
    ASSERT_EQ(rep.checks.size(), 3u);
    EXPECT_EQ(rep.checks[0].actual, Flex::station2);
    EXPECT_EQ(rep.checks[1].actual, Flex::station1);
    EXPECT_EQ(rep.checks[2].actual, Flex::station1);
    EXPECT_NO_THROW(require_paper_examples());
}
