#pragma once

// Continuous-time Monte Carlo estimate of the clearing cost under a fixed
// policy. Independent of the recursion in solver.hpp apart from the policy
// table itself.

#include "tandem/experiments.hpp"
#include "tandem/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace tandem {

struct SimConfig {
    State start{};
    long replications = 100000;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct SimResult {
    double mean = 0.0;
    double se = 0.0;
    long replications = 0;
    std::uint64_t digest = 0; // FNV-1a over the per-replication costs, in order
};

namespace detail {

inline double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

/// One sample path from `start` to the empty state. Rates in the policy are
/// uniformized; `scale` converts them back to the original time unit.
inline double simulate_once(const SystemParams& normalized, const Policy& policy, State start, Rng& rng) {
    State s = start;
    double cost = 0.0;
    while (s.total() > 0) {
        const Allocation& a = policy.at(s);
        const double r1 = a.rho1 * normalized.scale;
        const double r2 = a.rho2 * normalized.scale;
        const double total = r1 + r2;
        if (!(total > 0.0))
            throw Error(ErrorKind::DeadPolicy,
                        "no service at (" + std::to_string(s.x1) + "," + std::to_string(s.x2) + ")");
        cost += (normalized.h1 * s.x1 + normalized.h2 * s.x2) * rng.exponential(total);
        if (rng.uniform() * total < r1) {
            --s.x1;
            ++s.x2;
        } else {
            --s.x2;
        }
    }
    return cost;
}

/// `normalized` must be the uniformized params the policy was built with
/// (Solution::values.params()).
inline SimResult simulate(const SystemParams& normalized, const Policy& policy, const SimConfig& cfg) {
    if (cfg.replications < 1) throw Error(ErrorKind::InvalidArgument, "replications must be >= 1");
    if (cfg.start.x1 < 0 || cfg.start.x2 < 0 || cfg.start.total() > policy.n_max)
        throw Error(ErrorKind::InvalidArgument, "start state outside the policy domain");

    std::vector<double> costs(static_cast<std::size_t>(cfg.replications));
    const long nt = std::max<long>(1, std::min<long>(cfg.threads, cfg.replications));
    {
        std::vector<std::jthread> workers;
        std::vector<std::exception_ptr> failures(static_cast<std::size_t>(nt));
        for (long w = 0; w < nt; ++w) {
            workers.emplace_back([&, w] {
                try {
                    for (long r = w; r < cfg.replications; r += nt) {
                        Rng rng(mix64(cfg.seed ^ static_cast<std::uint64_t>(r)));
                        costs[static_cast<std::size_t>(r)] = simulate_once(normalized, policy, cfg.start, rng);
                    }
                } catch (...) {
                    failures[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        workers.clear();
        for (auto& f : failures)
            if (f) std::rethrow_exception(f);
    }

    SimResult res;
    res.replications = cfg.replications;
    const double n = static_cast<double>(cfg.replications);
    res.mean = detail::pairwise_sum(costs) / n;
    if (cfg.replications > 1) {
        std::vector<double> sq(costs.size());
        for (std::size_t i = 0; i < costs.size(); ++i) sq[i] = (costs[i] - res.mean) * (costs[i] - res.mean);
        res.se = std::sqrt(detail::pairwise_sum(sq) / (n - 1.0)) / std::sqrt(n);
    }
    res.digest = detail::fnv1a(costs.data(), costs.size() * sizeof(double));
    return res;
}

} // namespace tandem
