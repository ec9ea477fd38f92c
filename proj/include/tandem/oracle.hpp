#pragma once

// Two checks on solve() that share nothing with its argmin: exhaustive
// enumeration of deterministic policies on tiny triangles, and plain value
// iteration on the uniformized chain.

#include "tandem/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace tandem {

enum class OracleMethod { enumeration, value_iteration };

constexpr std::string_view to_string(OracleMethod m) {
    return m == OracleMethod::enumeration ? "enum" : "vi";
}

struct OracleResult {
    OracleMethod method = OracleMethod::enumeration;
    int n_max = 0;
    std::vector<double> values; // best cost per state, original time unit, tri_index order
    double residual = 0.0;      // max |V_oracle - V_solver| over the triangle
    long long policies_examined = 0;
    long iterations = 0;
    double span_gap = 0.0;

    double value(int x1, int x2) const { return values.at(tri_index(x1, x2)); }
};

inline constexpr double kMaxPolicies = 1e7;

namespace detail {

// Keeps actions that use the largest feasible station-2 rate for their
// flexible-server choice and either the largest or no station-1 rate.
inline std::vector<Allocation> undominated(State s, const SystemParams& p, std::vector<Allocation> acts) {
    std::erase_if(acts, [&](const Allocation& a) {
        const double r2 = max_rate2(s, p, a.flex);
        const double r1 = max_rate1(s, p, a.flex);
        return a.rho2 != r2 || (a.rho1 != 0.0 && a.rho1 != r1);
    });
    return acts;
}

inline double max_abs_diff(const std::vector<double>& a, const ValueTable& solved) {
    double r = 0.0;
    const int n = solved.n_max();
    for (int lvl = 0; lvl <= n; ++lvl)
        for (int x1 = 0; x1 <= lvl; ++x1)
            r = std::max(r, std::abs(a[tri_index(x1, lvl - x1)] - solved.value(x1, lvl - x1)));
    return r;
}

} // namespace detail

/// Tries every deterministic stationary policy on {x1 + x2 <= n_max} and
/// keeps the pointwise minimum. Policies are walked as an odometer whose
/// fastest digit is the last state in level order, so each step only
/// re-evaluates the states after the digit that changed.
inline OracleResult enumerate_policies(const SystemParams& raw, int n_max, bool prune_dominated = false) {
    if (n_max < 1 || n_max > 4) throw Error(ErrorKind::InvalidArgument, "enumeration needs 1 <= n_max <= 4");
    const SystemParams p = uniformize(validate(raw));

    std::vector<State> order;
    std::vector<std::vector<Allocation>> acts;
    double space = 1.0;
    for (int n = 1; n <= n_max; ++n) {
        for (int x1 = 0; x1 <= n; ++x1) {
            const State s{x1, n - x1};
            auto a = feasible_allocations(s, p);
            if (prune_dominated) a = detail::undominated(s, p, std::move(a));
            space *= static_cast<double>(a.size());
            order.push_back(s);
            acts.push_back(std::move(a));
        }
    }
    if (space > kMaxPolicies)
        throw Error(ErrorKind::SearchSpaceTooLarge,
                    std::to_string(static_cast<long long>(space)) + " policies exceed the 1e7 budget");

    const std::size_t k = order.size();
    std::vector<std::size_t> digit(k, 0);
    ValueTable table(p, n_max);
    std::vector<double> best(tri_size(n_max), std::numeric_limits<double>::infinity());
    best[0] = 0.0;

    auto evaluate_from = [&](std::size_t first) {
        for (std::size_t i = first; i < k; ++i) {
            const State s = order[i];
            const double v = q_value(s, acts[i][digit[i]], table);
            table.set_normalized(s, v);
            auto& b = best[tri_index(s.x1, s.x2)];
            b = std::min(b, v);
        }
    };
    // After the first full pass, a state's best is only improved when the
    // state or something before it changed, which evaluate_from covers.
    OracleResult out;
    out.method = OracleMethod::enumeration;
    out.n_max = n_max;
    evaluate_from(0);
    out.policies_examined = 1;
    while (true) {
        std::size_t i = k;
        while (i > 0) {
            --i;
            if (++digit[i] < acts[i].size()) break;
            digit[i] = 0;
            if (i == 0) {
                i = k;
                break;
            }
        }
        if (i == k) break;
        evaluate_from(i);
        ++out.policies_examined;
    }

    out.values.resize(best.size());
    for (std::size_t i = 0; i < best.size(); ++i) out.values[i] = best[i] / p.scale;
    out.residual = detail::max_abs_diff(out.values, solve(raw, n_max).values);
    return out;
}

inline constexpr long kMaxValueIterations = 1000000;

/// Synchronous Bellman sweeps on the uniformized chain from V = 0, stopped
/// when the span of V_{k+1} - V_k drops below `tol` (normalized cost units).
inline OracleResult value_iteration(const SystemParams& raw, int n_max, double tol = 1e-10,
                                    long max_iter = kMaxValueIterations) {
    if (n_max < 1) throw Error(ErrorKind::InvalidArgument, "n_max must be >= 1");
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be > 0");
    const SystemParams p = uniformize(validate(raw));

    const std::size_t size = tri_size(n_max);
    std::vector<std::vector<Allocation>> acts(size);
    std::vector<double> cost(size, 0.0);
    for (int n = 1; n <= n_max; ++n) {
        for (int x1 = 0; x1 <= n; ++x1) {
            const State s{x1, n - x1};
            acts[tri_index(x1, s.x2)] = feasible_allocations(s, p);
            cost[tri_index(x1, s.x2)] = p.h1 * x1 + p.h2 * s.x2;
        }
    }

    std::vector<double> v(size, 0.0), next(size, 0.0);
    OracleResult out;
    out.method = OracleMethod::value_iteration;
    out.n_max = n_max;
    for (long it = 1; it <= max_iter; ++it) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int n = 0; n <= n_max; ++n) {
            for (int x1 = 0; x1 <= n; ++x1) {
                const int x2 = n - x1;
                const std::size_t idx = tri_index(x1, x2);
                double b = 0.0;
                if (n > 0) {
                    b = std::numeric_limits<double>::infinity();
                    for (const auto& a : acts[idx]) {
                        double w = (1.0 - a.rho1 - a.rho2) * v[idx];
                        if (a.rho1 > 0.0) w += a.rho1 * v[tri_index(x1 - 1, x2 + 1)];
                        if (a.rho2 > 0.0) w += a.rho2 * v[tri_index(x1, x2 - 1)];
                        b = std::min(b, w);
                    }
                    b += cost[idx];
                }
                next[idx] = b;
                lo = std::min(lo, b - v[idx]);
                hi = std::max(hi, b - v[idx]);
            }
        }
        v.swap(next);
        out.iterations = it;
        out.span_gap = hi - lo;
        if (out.span_gap < tol) break;
        if (it == max_iter)
            throw Error(ErrorKind::MaxIterationsExceeded,
                        "span " + std::to_string(out.span_gap) + " after " + std::to_string(it) + " sweeps");
    }

    out.values.resize(size);
    for (std::size_t i = 0; i < size; ++i) out.values[i] = v[i] / p.scale;
    out.residual = detail::max_abs_diff(out.values, solve(raw, n_max).values);
    return out;
}

} // namespace tandem
