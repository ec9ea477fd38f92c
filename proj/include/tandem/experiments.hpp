#pragma once

// Random instance generation and batch structural studies.

#include "tandem/structure.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace tandem {

/// SplitMix64 finalizer; turns (seed ^ index) into a well-mixed 64-bit seed.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256** seeded through SplitMix64. Portable, so generated instances
/// are identical across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t z = seed;
        for (auto& w : s_) {
            z += 0x9e3779b97f4a7c15ULL;
            w = mix64(z);
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    /// Exponential with the given rate; uses 1 - U to avoid log(0).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> s_{};
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

enum class BatchRegime {
    thm1_hypotheses,
    thm1_violate_nu2,
    thm1_violate_mu1,
    thm1_violate_both,
    thm2_nu2_ge_mu2,
    thm2_nu2_lt_mu2,
    thm2_priority,
    thm3_switching,
    thm3_priority,
    thm3_mu1_lt_mu2,
    idling_h1_lt_h2,
    thm6_nu2_zero,
    lemma_suite,
};

inline const std::vector<std::pair<BatchRegime, std::string>>& regime_names() {
    static const std::vector<std::pair<BatchRegime, std::string>> names = {
        {BatchRegime::thm1_hypotheses, "thm1_hypotheses"},
        {BatchRegime::thm1_violate_nu2, "thm1_violate_nu2"},
        {BatchRegime::thm1_violate_mu1, "thm1_violate_mu1"},
        {BatchRegime::thm1_violate_both, "thm1_violate_both"},
        {BatchRegime::thm2_nu2_ge_mu2, "thm2_nu2_ge_mu2"},
        {BatchRegime::thm2_nu2_lt_mu2, "thm2_nu2_lt_mu2"},
        {BatchRegime::thm2_priority, "thm2_priority"},
        {BatchRegime::thm3_switching, "thm3_switching"},
        {BatchRegime::thm3_priority, "thm3_priority"},
        {BatchRegime::thm3_mu1_lt_mu2, "thm3_mu1_lt_mu2"},
        {BatchRegime::idling_h1_lt_h2, "idling_h1_lt_h2"},
        {BatchRegime::thm6_nu2_zero, "thm6_nu2_zero"},
        {BatchRegime::lemma_suite, "lemma_suite"},
    };
    return names;
}

inline std::string to_string(BatchRegime r) {
    for (const auto& [k, n] : regime_names())
        if (k == r) return n;
    return "?";
}

inline BatchRegime parse_regime(const std::string& name) {
    for (const auto& [k, n] : regime_names())
        if (n == name) return k;
    throw Error(ErrorKind::InvalidArgument, "unknown regime '" + name + "'");
}

/// Regimes whose structural checks rely on deep triangles (zero crossings
/// and idling thresholds observed inside n_max = 200).
inline bool needs_deep_domain(BatchRegime r) {
    return r == BatchRegime::idling_h1_lt_h2 || r == BatchRegime::thm6_nu2_zero || r == BatchRegime::lemma_suite;
}

struct ExperimentConfig {
    BatchRegime regime = BatchRegime::thm1_hypotheses;
    int count = 1000;
    std::uint64_t seed = 1;
    int n_max = 40;
    Range rate_range{0.05, 10.0};
    Range h_range{0.1, 20.0};
    Range xi_fraction{0.05, 1.0};
    int threads = 1;
    int max_counterexamples = 10;
    VerifyOptions verify{};

    /// Defaults for a regime. Deep regimes use n_max = 200 and moderate
    /// ranges: with rate ratios up to 200 or cost ratios near 1 the
    /// crossings they look for sit beyond any practical triangle.
    static ExperimentConfig defaults_for(BatchRegime r) {
        ExperimentConfig c;
        c.regime = r;
        if (needs_deep_domain(r)) {
            c.n_max = 200;
            c.rate_range = {0.5, 2.0};
            c.h_range = {1.0, 4.0};
        }
        return c;
    }

    void check() const {
        if (count < 1) throw Error(ErrorKind::InvalidArgument, "count must be >= 1");
        if (n_max < 10) throw Error(ErrorKind::InvalidArgument, "batch n_max must be >= 10");
        if (!(rate_range.lo > 0.0 && rate_range.hi >= rate_range.lo))
            throw Error(ErrorKind::InvalidArgument, "bad rate range");
        if (!(h_range.lo > 0.0 && h_range.hi >= h_range.lo)) throw Error(ErrorKind::InvalidArgument, "bad h range");
        if (!(xi_fraction.lo > 0.0 && xi_fraction.hi <= 1.0 && xi_fraction.hi >= xi_fraction.lo))
            throw Error(ErrorKind::InvalidArgument, "bad xi fraction range");
        if (threads < 1) throw Error(ErrorKind::InvalidArgument, "threads must be >= 1");
    }
};

inline constexpr const char* kGeneratorDescription =
    "nu1, nu2, mu1, mu2 and h1, h2 log-uniform on their ranges; xi_i = u_i mu_i with u_i uniform, "
    "redrawn until nu_i + xi_i > mu_i; regime orderings imposed by permuting the sampled rates and "
    "swapping h1, h2, remaining conditions by rejection. One reasonable choice, not a published one.";

namespace detail {

inline void order3(double& smallest, double& middle, double& largest) {
    std::array<double, 3> v{smallest, middle, largest};
    std::sort(v.begin(), v.end());
    smallest = v[0];
    middle = v[1];
    largest = v[2];
}

inline bool regime_holds(BatchRegime r, const SystemParams& p) {
    const double up = p.mu1 * (p.h1 - p.h2), down = p.mu2 * p.h2;
    switch (r) {
    case BatchRegime::thm1_hypotheses:
    case BatchRegime::lemma_suite: return p.h1 >= p.h2 && p.nu2 >= p.mu2 && p.mu1 >= p.mu2;
    case BatchRegime::thm1_violate_nu2: return p.h1 >= p.h2 && p.nu2 < p.mu2 && p.mu1 >= p.mu2;
    case BatchRegime::thm1_violate_mu1: return p.h1 >= p.h2 && p.nu2 >= p.mu2 && p.mu1 < p.mu2;
    case BatchRegime::thm1_violate_both: return p.h1 >= p.h2 && p.nu2 < p.mu2 && p.mu1 < p.mu2;
    case BatchRegime::thm2_nu2_ge_mu2: return p.nu1 == 0.0 && up < down && p.nu2 >= p.mu2;
    case BatchRegime::thm2_nu2_lt_mu2: return p.nu1 == 0.0 && up < down && p.nu2 < p.mu2;
    case BatchRegime::thm2_priority: return p.nu1 == 0.0 && up >= down;
    case BatchRegime::thm3_switching: return p.nu2 == 0.0 && p.h1 >= p.h2 && p.mu1 >= p.mu2;
    case BatchRegime::thm3_priority: return p.nu2 == 0.0 && p.h1 >= p.h2 && p.mu1 >= p.mu2 && up <= down;
    case BatchRegime::thm3_mu1_lt_mu2: return p.nu2 == 0.0 && p.h1 >= p.h2 && p.mu1 < p.mu2 && up > down;
    case BatchRegime::idling_h1_lt_h2: return p.h1 < p.h2 && p.nu1 > 0.0 && p.nu2 > 0.0;
    case BatchRegime::thm6_nu2_zero: return p.h1 < p.h2 && p.nu2 == 0.0 && p.nu1 > 0.0;
    }
    return false;
}

} // namespace detail

inline constexpr int kRegimeAttempts = 10000;

/// Deterministic instance `index` of the configured regime. Rates are raw
/// (not uniformized).
inline SystemParams generate_instance(const ExperimentConfig& cfg, std::uint64_t index) {
    Rng rng(mix64(cfg.seed ^ index));
    const BatchRegime r = cfg.regime;
    for (int attempt = 0; attempt < kRegimeAttempts; ++attempt) {
        SystemParams p;
        p.nu1 = rng.log_uniform(cfg.rate_range.lo, cfg.rate_range.hi);
        p.nu2 = rng.log_uniform(cfg.rate_range.lo, cfg.rate_range.hi);
        p.mu1 = rng.log_uniform(cfg.rate_range.lo, cfg.rate_range.hi);
        p.mu2 = rng.log_uniform(cfg.rate_range.lo, cfg.rate_range.hi);
        p.h1 = rng.log_uniform(cfg.h_range.lo, cfg.h_range.hi);
        p.h2 = rng.log_uniform(cfg.h_range.lo, cfg.h_range.hi);

        switch (r) {
        case BatchRegime::thm1_hypotheses:
        case BatchRegime::lemma_suite: detail::order3(p.mu2, p.nu2, p.mu1); break;
        case BatchRegime::thm1_violate_both: detail::order3(p.nu2, p.mu1, p.mu2); break;
        case BatchRegime::thm1_violate_nu2: detail::order3(p.nu2, p.mu2, p.mu1); break;
        case BatchRegime::thm1_violate_mu1: detail::order3(p.mu1, p.mu2, p.nu2); break;
        case BatchRegime::thm2_nu2_ge_mu2:
            if (p.nu2 < p.mu2) std::swap(p.nu2, p.mu2);
            break;
        case BatchRegime::thm2_nu2_lt_mu2:
            if (p.nu2 > p.mu2) std::swap(p.nu2, p.mu2);
            break;
        case BatchRegime::thm3_switching:
        case BatchRegime::thm3_priority:
            if (p.mu1 < p.mu2) std::swap(p.mu1, p.mu2);
            break;
        case BatchRegime::thm3_mu1_lt_mu2:
            if (p.mu1 > p.mu2) std::swap(p.mu1, p.mu2);
            break;
        default: break;
        }

        const bool wants_h1_ge = r != BatchRegime::idling_h1_lt_h2 && r != BatchRegime::thm6_nu2_zero &&
                                 r != BatchRegime::thm2_nu2_ge_mu2 && r != BatchRegime::thm2_nu2_lt_mu2;
        const bool wants_h1_lt = r == BatchRegime::idling_h1_lt_h2 || r == BatchRegime::thm6_nu2_zero;
        if (wants_h1_ge && p.h1 < p.h2) std::swap(p.h1, p.h2);
        if (wants_h1_lt && p.h1 > p.h2) std::swap(p.h1, p.h2);

        if (r == BatchRegime::thm2_nu2_ge_mu2 || r == BatchRegime::thm2_nu2_lt_mu2 || r == BatchRegime::thm2_priority)
            p.nu1 = 0.0;
        if (r == BatchRegime::thm3_switching || r == BatchRegime::thm3_priority ||
            r == BatchRegime::thm3_mu1_lt_mu2 || r == BatchRegime::thm6_nu2_zero)
            p.nu2 = 0.0;

        auto draw_xi = [&](double nu, double mu) -> std::optional<double> {
            if (nu == 0.0) return 0.0;
            for (int k = 0; k < 100; ++k) {
                const double xi = rng.uniform(cfg.xi_fraction.lo, cfg.xi_fraction.hi) * mu;
                if (nu + xi > mu && xi > 0.0) return xi;
            }
            return std::nullopt;
        };
        const auto xi1 = draw_xi(p.nu1, p.mu1);
        const auto xi2 = draw_xi(p.nu2, p.mu2);
        if (!xi1 || !xi2) continue;
        p.xi1 = *xi1;
        p.xi2 = *xi2;

        if (!detail::regime_holds(r, p)) continue;
        try {
            validate(p);
        } catch (const Error&) {
            continue;
        }
        return p;
    }
    throw Error(ErrorKind::RegimeUnsatisfiable,
                to_string(r) + ": no instance after " + std::to_string(kRegimeAttempts) + " draws");
}

/// Claims a batch treats as asserted beyond the ones proven for the
/// instance: the numerical agreement reported for neighbouring regimes.
inline std::set<std::string> promoted_claims(BatchRegime r) {
    switch (r) {
    case BatchRegime::thm1_violate_nu2:
    case BatchRegime::thm1_violate_mu1:
    case BatchRegime::thm2_nu2_lt_mu2:
    case BatchRegime::thm3_mu1_lt_mu2: return {"switching_curve", "slope_at_least_minus_one"};
    case BatchRegime::thm1_violate_both: return {"switching_curve"};
    case BatchRegime::idling_h1_lt_h2: return {"two_switching_points"};
    default: return {};
    }
}

struct ClaimTally {
    std::string claim;
    bool asserted = false;
    long instances_checked = 0;
    long violations = 0;
};

struct Counterexample {
    std::uint64_t index = 0;
    std::uint64_t seed = 0;
    SystemParams params;
    std::string claim;
    bool asserted = false;
    Witness witness;
};

struct InstanceOutcome {
    std::uint64_t index = 0;
    SystemParams params;
    std::optional<std::string> error;
    std::vector<Verdict> verdicts;
    std::optional<int> t_at_one;
    std::optional<int> t2_at_one;
};

struct BatchReport {
    std::string regime;
    ExperimentConfig config;
    long instances = 0;
    long solve_errors = 0;
    std::vector<ClaimTally> claims;
    std::vector<Counterexample> counterexamples;
    std::vector<std::string> errors;
    double wall_clock_s = 0.0;
    // Summary statistics over instances where the quantity exists.
    double mean_t_at_one = 0.0;
    int max_t_at_one = 0;
    long t_at_one_found = 0;
    double mean_t2_at_one = 0.0;
    int max_t2_at_one = 0;
    long t2_at_one_found = 0;

    long asserted_violations() const {
        long n = 0;
        for (const auto& c : claims)
            if (c.asserted) n += c.violations;
        return n;
    }
    const ClaimTally* find(const std::string& claim) const {
        for (const auto& c : claims)
            if (c.claim == claim) return &c;
        return nullptr;
    }
    bool ok() const { return asserted_violations() == 0 && solve_errors == 0; }
};

/// Solves and verifies instance `index`; the verdicts carry the batch's
/// assertion flags.
inline InstanceOutcome run_instance(const ExperimentConfig& cfg, std::uint64_t index) {
    InstanceOutcome out;
    out.index = index;
    try {
        out.params = generate_instance(cfg, index);
        const Solution sol = solve(out.params, cfg.n_max);
        StructureReport rep = verify_all(sol, cfg.verify);
        const auto promoted = promoted_claims(cfg.regime);
        for (auto& v : rep.verdicts) {
            if (promoted.count(v.claim) && v.applicable) v.asserted = true;
        }
        out.verdicts = std::move(rep.verdicts);
        out.t_at_one = rep.curve.t1_at_one();
        out.t2_at_one = rep.curve.t2_at_one();
    } catch (const Error& e) {
        out.error = e.what();
    }
    return out;
}

inline BatchReport run_batch(const ExperimentConfig& cfg) {
    cfg.check();
    const auto start = std::chrono::steady_clock::now();
    std::vector<InstanceOutcome> outcomes(static_cast<std::size_t>(cfg.count));
    {
        std::vector<std::jthread> workers;
        const int nt = std::min(cfg.threads, cfg.count);
        for (int w = 0; w < nt; ++w) {
            workers.emplace_back([&, w] {
                for (int i = w; i < cfg.count; i += nt)
                    outcomes[static_cast<std::size_t>(i)] = run_instance(cfg, static_cast<std::uint64_t>(i));
            });
        }
    }

    BatchReport rep;
    rep.regime = to_string(cfg.regime);
    rep.config = cfg;
    rep.instances = cfg.count;
    std::map<std::string, std::size_t> slot;
    double t_sum = 0.0, t2_sum = 0.0;
    for (const auto& o : outcomes) {
        if (o.error) {
            ++rep.solve_errors;
            if (rep.errors.size() < 20) rep.errors.push_back("instance " + std::to_string(o.index) + ": " + *o.error);
            continue;
        }
        if (o.t_at_one) {
            ++rep.t_at_one_found;
            t_sum += *o.t_at_one;
            rep.max_t_at_one = std::max(rep.max_t_at_one, *o.t_at_one);
        }
        if (o.t2_at_one) {
            ++rep.t2_at_one_found;
            t2_sum += *o.t2_at_one;
            rep.max_t2_at_one = std::max(rep.max_t2_at_one, *o.t2_at_one);
        }
        for (const auto& v : o.verdicts) {
            if (!v.applicable) continue;
            auto [it, fresh] = slot.try_emplace(v.claim, rep.claims.size());
            if (fresh) rep.claims.push_back(ClaimTally{v.claim, v.asserted, 0, 0});
            ClaimTally& tally = rep.claims[it->second];
            tally.asserted = tally.asserted || v.asserted;
            ++tally.instances_checked;
            if (!v.pass) {
                ++tally.violations;
                if (static_cast<int>(rep.counterexamples.size()) < cfg.max_counterexamples || v.asserted) {
                    rep.counterexamples.push_back(Counterexample{o.index, cfg.seed, o.params, v.claim, v.asserted,
                                                                 v.witness.value_or(Witness{})});
                }
            }
        }
    }
    if (rep.t_at_one_found) rep.mean_t_at_one = t_sum / static_cast<double>(rep.t_at_one_found);
    if (rep.t2_at_one_found) rep.mean_t2_at_one = t2_sum / static_cast<double>(rep.t2_at_one_found);
    rep.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

/// Re-runs one recorded counterexample and returns the verdict for its claim.
inline std::optional<Verdict> replay(const ExperimentConfig& cfg, const Counterexample& cx) {
    ExperimentConfig c = cfg;
    c.seed = cx.seed;
    const InstanceOutcome o = run_instance(c, cx.index);
    for (const auto& v : o.verdicts)
        if (v.claim == cx.claim) return v;
    return std::nullopt;
}

/// Parameter sets of the two published counterexamples.
inline SystemParams slope_counterexample_params() { return SystemParams{0.8, 0.6, 0.6, 8.0, 0.03, 7.43, 16.0, 1.5}; }
inline SystemParams priority_counterexample_params() { return SystemParams{1.3, 0.0, 0.9, 7.7, 0.1, 0.0, 11.4, 1.2}; }

struct GoldenCheck {
    std::string name;
    State state;
    Flex expected;
    Flex actual;
    bool pass() const { return expected == actual; }
};

struct GoldenReport {
    std::vector<GoldenCheck> checks;
    double upstream_saving = 0.0;   // mu1 (h1 - h2) of the priority counterexample
    double downstream_saving = 0.0; // mu2 h2
    bool savings_ordered = false;
    bool ok() const {
        return savings_ordered && std::all_of(checks.begin(), checks.end(), [](const GoldenCheck& c) { return c.pass(); });
    }
};

/// The slope counterexample keeps the flexible server downstream at (3,3)
/// but moves it upstream at (2,4). The priority counterexample has
/// mu1 (h1 - h2) < mu2 h2 yet serves upstream at (3,1).
inline GoldenReport reproduce_paper_examples(int n_max = 10) {
    GoldenReport rep;
    const Solution a = solve(slope_counterexample_params(), n_max);
    rep.checks.push_back({"slope_counterexample", {3, 3}, Flex::station2, a.policy.at(3, 3).flex});
    rep.checks.push_back({"slope_counterexample", {2, 4}, Flex::station1, a.policy.at(2, 4).flex});

    const SystemParams bp = priority_counterexample_params();
    rep.upstream_saving = bp.mu1 * (bp.h1 - bp.h2);
    rep.downstream_saving = bp.mu2 * bp.h2;
    rep.savings_ordered = rep.upstream_saving < rep.downstream_saving;
    const Solution b = solve(bp, n_max);
    rep.checks.push_back({"priority_counterexample", {3, 1}, Flex::station1, b.policy.at(3, 1).flex});
    return rep;
}

inline void require_paper_examples(int n_max = 10) {
    const GoldenReport rep = reproduce_paper_examples(n_max);
    for (const auto& c : rep.checks) {
        if (!c.pass())
            throw Error(ErrorKind::GoldenMismatch,
                        c.name + " at (" + std::to_string(c.state.x1) + "," + std::to_string(c.state.x2) +
                            "): expected flex=" + std::string(to_string(c.expected)) +
                            " got " + std::string(to_string(c.actual)));
    }
    if (!rep.savings_ordered) throw Error(ErrorKind::GoldenMismatch, "priority counterexample savings not ordered");
}

} // namespace tandem
