#pragma once

// Two-station tandem clearing system with one dedicated server per station
// and one flexible server that may work in either station.

#include "tandem/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace tandem {

/// Rates and holding costs of one instance.
///
/// `nu` are dedicated-server rates, `mu` flexible-server rates and `xi` the
/// increment obtained when the flexible server joins the dedicated server on
/// the same job (combined rate nu + xi). `scale` is the raw rate sum that was
/// divided out by uniformize(); it is 1 for raw input.
struct SystemParams {
    double nu1 = 0.0, nu2 = 0.0;
    double mu1 = 0.0, mu2 = 0.0;
    double xi1 = 0.0, xi2 = 0.0;
    double h1 = 0.0, h2 = 0.0;
    double scale = 1.0;

    double rate_sum() const { return nu1 + nu2 + mu1 + mu2 + xi1 + xi2; }

    /// Full collaboration at station i means nu_i + xi_i = nu_i + mu_i.
    bool full_collaboration1() const { return nu1 > 0.0 && xi1 == mu1; }
    bool full_collaboration2() const { return nu2 > 0.0 && xi2 == mu2; }

    friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

struct State {
    int x1 = 0;
    int x2 = 0;

    int total() const { return x1 + x2; }
    friend bool operator==(const State&, const State&) = default;
};

enum class Dedicated : std::uint8_t { work, idle, absent };
enum class Flex : std::uint8_t { station1, station2, idle };

constexpr std::string_view to_string(Dedicated d) {
    switch (d) {
    case Dedicated::work: return "work";
    case Dedicated::idle: return "idle";
    case Dedicated::absent: return "none";
    }
    return "?";
}

constexpr std::string_view to_string(Flex f) {
    switch (f) {
    case Flex::station1: return "s1";
    case Flex::station2: return "s2";
    case Flex::idle: return "idle";
    }
    return "?";
}

/// A server assignment and the service rates it induces in each station.
struct Allocation {
    Dedicated d1 = Dedicated::idle;
    Dedicated d2 = Dedicated::idle;
    Flex flex = Flex::idle;
    bool collab1 = false;
    bool collab2 = false;
    double rho1 = 0.0;
    double rho2 = 0.0;

    /// Servers left idle although their station has work. The flexible
    /// server always has work somewhere in a nonempty state.
    int idle_servers(State s) const {
        int n = 0;
        if (d1 == Dedicated::idle && s.x1 > 0) ++n;
        if (d2 == Dedicated::idle && s.x2 > 0) ++n;
        if (flex == Flex::idle) ++n;
        return n;
    }

    /// Tie-break key, smaller is preferred: non-idling, then flexible server
    /// upstream, then separate jobs over collaboration.
    auto preference(State s) const {
        return std::make_tuple(idle_servers(s), static_cast<int>(flex), int(collab1) + int(collab2),
                               static_cast<int>(d1), static_cast<int>(d2));
    }

    bool same_assignment(const Allocation& o) const {
        return d1 == o.d1 && d2 == o.d2 && flex == o.flex && collab1 == o.collab1 &&
               collab2 == o.collab2;
    }

    std::string label() const {
        std::string out = "d1=";
        out += to_string(d1);
        out += ",d2=";
        out += to_string(d2);
        out += ",flex=";
        out += to_string(flex);
        if (collab1) out += ",collab1";
        if (collab2) out += ",collab2";
        return out;
    }
};

/// Checks the rate and cost constraints of the additive-with-partial-
/// collaboration model. Throws Error on the first violation.
inline SystemParams validate(const SystemParams& p) {
    const double all[] = {p.nu1, p.nu2, p.mu1, p.mu2, p.xi1, p.xi2, p.h1, p.h2, p.scale};
    for (double v : all) {
        if (!std::isfinite(v)) throw Error(ErrorKind::NonPositiveRate, "parameters must be finite");
    }
    if (p.mu1 <= 0.0 || p.mu2 <= 0.0)
        throw Error(ErrorKind::NonPositiveRate, "flexible-server rates mu1, mu2 must be > 0");
    if (p.h1 <= 0.0 || p.h2 <= 0.0)
        throw Error(ErrorKind::NonPositiveRate, "holding-cost rates h1, h2 must be > 0");
    if (p.nu1 < 0.0 || p.nu2 < 0.0 || p.xi1 < 0.0 || p.xi2 < 0.0)
        throw Error(ErrorKind::NonPositiveRate, "nu and xi must be >= 0");
    if (p.scale <= 0.0) throw Error(ErrorKind::NonPositiveRate, "uniformization scale must be > 0");

    auto station = [](int i, double nu, double mu, double xi) {
        const std::string tag = "station " + std::to_string(i);
        if (nu == 0.0) {
            if (xi != 0.0)
                throw Error(ErrorKind::OrphanCollaboration,
                            tag + ": xi > 0 but there is no dedicated server to collaborate with");
            return;
        }
        if (xi > mu)
            throw Error(ErrorKind::CollaborationBoundViolated,
                        tag + ": xi > mu (superadditive collaboration); such an instance is "
                              "equivalent to the additive model with flexible rate xi in place of mu");
        if (xi <= 0.0)
            throw Error(ErrorKind::CollaborationBoundViolated, tag + ": xi must be > 0 when nu > 0");
        if (nu + xi <= mu)
            throw Error(ErrorKind::CollaborationBoundViolated,
                        tag + ": collaboration must beat the flexible server alone (nu + xi > mu)");
    };
    station(1, p.nu1, p.mu1, p.xi1);
    station(2, p.nu2, p.mu2, p.xi2);
    return p;
}

/// Divides the six rates by their sum. Holding costs are unchanged; the sum
/// is accumulated into `scale` so that repeated calls are harmless.
inline SystemParams uniformize(const SystemParams& p) {
    const double s = p.rate_sum();
    SystemParams out = p;
    out.nu1 /= s;
    out.nu2 /= s;
    out.mu1 /= s;
    out.mu2 /= s;
    out.xi1 /= s;
    out.xi2 /= s;
    out.scale = p.scale * s;
    return out;
}

namespace detail {

struct StationOption {
    Dedicated ded;
    bool flex_here;
    bool collab;
    double rho;
};

// Options for one station given whether the flexible server is there.
inline void station_options(int x, double nu, double mu, double xi, bool flex_here,
                            std::vector<StationOption>& out) {
    out.clear();
    const bool has_ded = nu > 0.0;
    if (x == 0) {
        out.push_back({has_ded ? Dedicated::idle : Dedicated::absent, false, false, 0.0});
        return;
    }
    if (!flex_here) {
        if (has_ded) {
            out.push_back({Dedicated::work, false, false, nu});
            out.push_back({Dedicated::idle, false, false, 0.0});
        } else {
            out.push_back({Dedicated::absent, false, false, 0.0});
        }
        return;
    }
    if (has_ded) {
        if (x >= 2) out.push_back({Dedicated::work, true, false, nu + mu});
        out.push_back({Dedicated::work, true, true, nu + xi});
        out.push_back({Dedicated::idle, true, false, mu});
    } else {
        out.push_back({Dedicated::absent, true, false, mu});
    }
}

} // namespace detail

/// All assignments of the three servers in a nonempty state, reduced to
/// distinct rate pairs. When two assignments induce the same pair, the one
/// with the smaller preference key is kept. The all-idle assignment is never
/// emitted. Dominated options stay in the set.
inline std::vector<Allocation> feasible_allocations(State s, const SystemParams& p) {
    if (s.x1 < 0 || s.x2 < 0) throw Error(ErrorKind::InvalidArgument, "negative job count");
    if (s.total() == 0) throw Error(ErrorKind::EmptySystem, "no decision in the empty state");

    std::vector<Allocation> out;
    std::vector<detail::StationOption> opt1, opt2;
    for (Flex flex : {Flex::station1, Flex::station2, Flex::idle}) {
        if (flex == Flex::station1 && s.x1 == 0) continue;
        if (flex == Flex::station2 && s.x2 == 0) continue;
        detail::station_options(s.x1, p.nu1, p.mu1, p.xi1, flex == Flex::station1, opt1);
        detail::station_options(s.x2, p.nu2, p.mu2, p.xi2, flex == Flex::station2, opt2);
        for (const auto& a : opt1) {
            for (const auto& b : opt2) {
                if (a.rho + b.rho <= 0.0) continue;
                Allocation alloc{a.ded, b.ded, flex, a.collab, b.collab, a.rho, b.rho};
                auto dup = std::find_if(out.begin(), out.end(), [&](const Allocation& o) {
                    return o.rho1 == alloc.rho1 && o.rho2 == alloc.rho2;
                });
                if (dup == out.end()) {
                    out.push_back(alloc);
                } else if (alloc.preference(s) < dup->preference(s)) {
                    *dup = alloc;
                }
            }
        }
    }
    return out;
}

/// Largest feasible rate in station 1 when the flexible server is at `flex`.
inline double max_rate1(State s, const SystemParams& p, Flex flex) {
    if (s.x1 == 0) return 0.0;
    if (flex != Flex::station1) return p.nu1;
    if (p.nu1 == 0.0) return p.mu1;
    return s.x1 >= 2 ? p.nu1 + p.mu1 : p.nu1 + p.xi1;
}

inline double max_rate2(State s, const SystemParams& p, Flex flex) {
    if (s.x2 == 0) return 0.0;
    if (flex != Flex::station2) return p.nu2;
    if (p.nu2 == 0.0) return p.mu2;
    return s.x2 >= 2 ? p.nu2 + p.mu2 : p.nu2 + p.xi2;
}

} // namespace tandem
