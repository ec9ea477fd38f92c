#pragma once

#include "tandem/model.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace tandem {

/// Position of (x1, x2) in a triangular table ordered by total job count,
/// then by x1.
inline std::size_t tri_index(int x1, int x2) {
    const auto n = static_cast<std::size_t>(x1 + x2);
    return n * (n + 1) / 2 + static_cast<std::size_t>(x1);
}

inline std::size_t tri_size(int n_max) { return tri_index(0, n_max + 1); }

/// Minimal expected holding cost over {x1 + x2 <= n_max}.
///
/// Values are held in the uniformized scale used by the optimality equations
/// (`normalized`); `value` reports them in the original time unit.
class ValueTable {
  public:
    ValueTable() = default;
    ValueTable(SystemParams params, int n_max)
        : params_(params), n_max_(n_max), v_(tri_size(n_max), std::numeric_limits<double>::quiet_NaN()) {
        v_[0] = 0.0;
    }

    int n_max() const { return n_max_; }
    const SystemParams& params() const { return params_; }

    bool contains(int x1, int x2) const { return x1 >= 0 && x2 >= 0 && x1 + x2 <= n_max_; }
    bool contains(State s) const { return contains(s.x1, s.x2); }

    double normalized(int x1, int x2) const { return v_[checked(x1, x2)]; }
    double normalized(State s) const { return normalized(s.x1, s.x2); }
    double value(int x1, int x2) const { return normalized(x1, x2) / params_.scale; }
    double value(State s) const { return value(s.x1, s.x2); }

    bool has(int x1, int x2) const { return contains(x1, x2) && !std::isnan(v_[tri_index(x1, x2)]); }

    void set_normalized(State s, double v) { v_[checked(s.x1, s.x2)] = v; }

  private:
    std::size_t checked(int x1, int x2) const {
        if (!contains(x1, x2))
            throw Error(ErrorKind::DependencyMissing,
                        "state (" + std::to_string(x1) + "," + std::to_string(x2) + ") outside domain");
        return tri_index(x1, x2);
    }

    SystemParams params_{};
    int n_max_ = 0;
    std::vector<double> v_;
};

/// One allocation per nonempty state of the triangle, plus the margin to the
/// runner-up. Entry 0 (the empty state) is unused.
struct Policy {
    int n_max = 0;
    std::vector<Allocation> action;
    std::vector<double> q_gap;

    const Allocation& at(int x1, int x2) const { return action.at(tri_index(x1, x2)); }
    const Allocation& at(State s) const { return at(s.x1, s.x2); }
    double gap(int x1, int x2) const { return q_gap.at(tri_index(x1, x2)); }
};

/// Cost of taking `alloc` once in `s` and following the table afterwards,
/// with the self-transition of the uniformized chain solved out:
///   (h.x + rho1 V(x1-1, x2+1) + rho2 V(x1, x2-1)) / (rho1 + rho2).
inline double q_value(State s, const Allocation& alloc, const ValueTable& table) {
    const SystemParams& p = table.params();
    const double total = alloc.rho1 + alloc.rho2;
    if (!(total > 0.0)) throw Error(ErrorKind::InvalidArgument, "allocation serves no station");
    double acc = p.h1 * s.x1 + p.h2 * s.x2;
    if (alloc.rho1 > 0.0) {
        if (!table.has(s.x1 - 1, s.x2 + 1))
            throw Error(ErrorKind::DependencyMissing, "upstream completion target not yet computed");
        acc += alloc.rho1 * table.normalized(s.x1 - 1, s.x2 + 1);
    }
    if (alloc.rho2 > 0.0) {
        if (!table.has(s.x1, s.x2 - 1))
            throw Error(ErrorKind::DependencyMissing, "downstream completion target not yet computed");
        acc += alloc.rho2 * table.normalized(s.x1, s.x2 - 1);
    }
    return acc / total;
}

struct Solution {
    ValueTable values;
    Policy policy;
};

/// Relative tie window used when choosing among near-equal Q-values.
inline constexpr double kTieTolerance = 1e-12;

/// Exact solve by one pass over total-job levels. Within a level, states are
/// visited by increasing x1 so that (x1-1, x2+1) is already final.
inline Solution solve(const SystemParams& raw, int n_max, double tie_tol = kTieTolerance) {
    if (n_max < 1) throw Error(ErrorKind::InvalidArgument, "n_max must be >= 1");
    const SystemParams p = uniformize(validate(raw));

    Solution sol{ValueTable(p, n_max), Policy{n_max, std::vector<Allocation>(tri_size(n_max)),
                                              std::vector<double>(tri_size(n_max), 0.0)}};
    std::vector<double> q;
    for (int n = 1; n <= n_max; ++n) {
        for (int x1 = 0; x1 <= n; ++x1) {
            const State s{x1, n - x1};
            const auto actions = feasible_allocations(s, p);
            q.resize(actions.size());
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < actions.size(); ++i) {
                q[i] = q_value(s, actions[i], sol.values);
                best = std::min(best, q[i]);
            }
            const double window = tie_tol * (1.0 + std::abs(best));
            std::size_t pick = actions.size();
            for (std::size_t i = 0; i < actions.size(); ++i) {
                if (q[i] > best + window) continue;
                if (pick == actions.size() || actions[i].preference(s) < actions[pick].preference(s))
                    pick = i;
            }
            double runner_up = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < actions.size(); ++i) {
                if (i != pick) runner_up = std::min(runner_up, q[i]);
            }
            const std::size_t idx = tri_index(s.x1, s.x2);
            sol.values.set_normalized(s, q[pick]);
            sol.policy.action[idx] = actions[pick];
            sol.policy.q_gap[idx] = std::max(0.0, runner_up - q[pick]);
        }
    }
    return sol;
}

/// Matches an allocation against the feasible set by its rate pair.
inline std::optional<Allocation> find_feasible(State s, const SystemParams& normalized, double rho1,
                                               double rho2, double rel_tol = 1e-12) {
    for (const auto& a : feasible_allocations(s, normalized)) {
        const double scale = std::max({1e-300, std::abs(a.rho1) + std::abs(a.rho2)});
        if (std::abs(a.rho1 - rho1) <= rel_tol * scale && std::abs(a.rho2 - rho2) <= rel_tol * scale)
            return a;
    }
    return std::nullopt;
}

/// Exact cost of a fixed stationary policy over the triangle.
inline ValueTable evaluate_policy(const SystemParams& raw, const Policy& policy) {
    const SystemParams p = uniformize(validate(raw));
    const int n_max = policy.n_max;
    if (n_max < 1 || policy.action.size() < tri_size(n_max))
        throw Error(ErrorKind::InvalidArgument, "policy does not cover the triangle");
    ValueTable table(p, n_max);
    for (int n = 1; n <= n_max; ++n) {
        for (int x1 = 0; x1 <= n; ++x1) {
            const State s{x1, n - x1};
            const Allocation& a = policy.at(s);
            if (!find_feasible(s, p, a.rho1, a.rho2))
                throw Error(ErrorKind::InfeasibleAction, "state (" + std::to_string(s.x1) + "," +
                                                             std::to_string(s.x2) + "): " + a.label());
            table.set_normalized(s, q_value(s, a, table));
        }
    }
    return table;
}

} // namespace tandem
