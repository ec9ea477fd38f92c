#pragma once

// Decision functions, switching curves and numerical checks of the
// structural properties of optimal allocations.

#include "tandem/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace tandem {

/// f, g and the four decision functions built from them, in the uniformized
/// scale. Undefined entries are NaN.
///
///   f(x1,x2)      = V(x1,x2) - V(x1-1,x2+1)       x1 >= 1
///   g(x1,x2)      = V(x1,x2-1) - V(x1,x2)         x2 >= 1, g(x1,0) = 0
///   d(x1,x2)      = mu1 f + mu2 g                  x1 >= 1
///   dtilde(1,x2)  = xi1 f + mu2 g
///   dhat(x1,1)    = mu1 f + xi2 g
///   dbar(1,1)     = xi1 f + xi2 g
class DecisionFunctions {
  public:
    DecisionFunctions() = default;

    explicit DecisionFunctions(const ValueTable& table)
        : params_(table.params()), n_max_(table.n_max()) {
        if (n_max_ < 2) throw Error(ErrorKind::DomainTooSmall, "decision functions need n_max >= 2");
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const std::size_t size = tri_size(n_max_);
        f_.assign(size, nan);
        g_.assign(size, nan);
        d_.assign(size, nan);
        dtilde_.assign(size, nan);
        dhat_.assign(size, nan);
        v_.assign(size, nan);
        const SystemParams& p = params_;
        for (int n = 0; n <= n_max_; ++n) {
            for (int x1 = 0; x1 <= n; ++x1) {
                const int x2 = n - x1;
                const std::size_t i = tri_index(x1, x2);
                v_[i] = table.normalized(x1, x2);
                g_[i] = x2 >= 1 ? table.normalized(x1, x2 - 1) - table.normalized(x1, x2) : 0.0;
                if (x1 >= 1) {
                    f_[i] = table.normalized(x1, x2) - table.normalized(x1 - 1, x2 + 1);
                    d_[i] = p.mu1 * f_[i] + p.mu2 * g_[i];
                }
                if (x1 == 1) dtilde_[i] = p.xi1 * f_[i] + p.mu2 * g_[i];
                if (x1 >= 1 && x2 == 1) dhat_[i] = p.mu1 * f_[i] + p.xi2 * g_[i];
            }
        }
        dbar_ = p.xi1 * f(1, 1) + p.xi2 * g(1, 1);
    }

    const SystemParams& params() const { return params_; }
    int n_max() const { return n_max_; }

    bool in_domain(int x1, int x2) const { return x1 >= 0 && x2 >= 0 && x1 + x2 <= n_max_; }

    double V(int x1, int x2) const { return get(v_, x1, x2, "V"); }
    double f(int x1, int x2) const { return get(f_, x1, x2, "f"); }
    double g(int x1, int x2) const { return get(g_, x1, x2, "g"); }
    double d(int x1, int x2) const { return get(d_, x1, x2, "d"); }
    double dtilde(int x2) const { return get(dtilde_, 1, x2, "dtilde"); }
    double dhat(int x1) const { return get(dhat_, x1, 1, "dhat"); }
    double dbar() const { return dbar_; }

    /// Raw grid lookups for serialization; NaN where undefined.
    double f_or_nan(int x1, int x2) const { return raw(f_, x1, x2); }
    double g_or_nan(int x1, int x2) const { return raw(g_, x1, x2); }
    double d_or_nan(int x1, int x2) const { return raw(d_, x1, x2); }
    double dtilde_or_nan(int x1, int x2) const { return raw(dtilde_, x1, x2); }
    double dhat_or_nan(int x1, int x2) const { return raw(dhat_, x1, x2); }
    double dbar_or_nan(int x1, int x2) const {
        return x1 == 1 && x2 == 1 ? dbar_ : std::numeric_limits<double>::quiet_NaN();
    }

    /// Sign decides the flexible server's station when both dedicated
    /// servers work: >= 0 means upstream. A station with a single job and a
    /// dedicated server only gains the collaboration increment xi; without a
    /// dedicated server the flexible server brings its full rate mu.
    double governing(int x1, int x2) const {
        const double inc1 = (params_.nu1 > 0.0 && x1 == 1) ? params_.xi1 : params_.mu1;
        const double inc2 = (params_.nu2 > 0.0 && x2 == 1) ? params_.xi2 : params_.mu2;
        return inc1 * f(x1, x2) + inc2 * g(x1, x2);
    }

    /// Sign classification band around zero.
    double sign_tolerance(int x1, int x2) const { return 1e-10 * (1.0 + std::abs(V(x1, x2))); }

  private:
    double raw(const std::vector<double>& grid, int x1, int x2) const {
        if (!in_domain(x1, x2)) return std::numeric_limits<double>::quiet_NaN();
        return grid[tri_index(x1, x2)];
    }
    double get(const std::vector<double>& grid, int x1, int x2, const char* name) const {
        const double v = raw(grid, x1, x2);
        if (std::isnan(v))
            throw Error(ErrorKind::DependencyMissing, std::string(name) + "(" + std::to_string(x1) + "," +
                                                          std::to_string(x2) + ") undefined");
        return v;
    }

    SystemParams params_{};
    int n_max_ = 0;
    std::vector<double> v_, f_, g_, d_, dtilde_, dhat_;
    double dbar_ = std::numeric_limits<double>::quiet_NaN();
};

inline DecisionFunctions decision_functions(const ValueTable& table) { return DecisionFunctions(table); }

/// Which structural results apply to an instance. Depends on parameters only.
struct Regime {
    bool h1_ge_h2 = false;
    bool nu1_zero = false;
    bool nu2_zero = false;
    bool nu2_ge_mu2 = false;
    bool mu1_ge_mu2 = false;
    bool full_collaboration = false;
    double upstream_saving = 0.0;   // mu1 (h1 - h2)
    double downstream_saving = 0.0; // mu2 h2

    bool non_idling() const { return h1_ge_h2 || nu1_zero; }

    bool switching_curve_proven() const {
        if (nu1_zero) return upstream_saving < downstream_saving && nu2_ge_mu2;
        if (nu2_zero) return h1_ge_h2 && mu1_ge_mu2;
        return h1_ge_h2 && nu2_ge_mu2 && mu1_ge_mu2;
    }
    bool priority_upstream() const { return nu1_zero && upstream_saving >= downstream_saving; }
    bool priority_downstream() const {
        return nu2_zero && !nu1_zero && h1_ge_h2 && mu1_ge_mu2 && upstream_saving <= downstream_saving;
    }
    bool dtilde_lemma() const { return h1_ge_h2 && !nu1_zero && !nu2_zero && nu2_ge_mu2; }
    bool d_lemma() const { return dtilde_lemma() && mu1_ge_mu2; }
    bool idling() const { return !h1_ge_h2 && !nu1_zero; }
    bool two_switching_points() const {
        return idling() && !nu2_zero && (full_collaboration || nu2_ge_mu2);
    }
    bool downstream_priority_idling() const { return !h1_ge_h2 && nu2_zero; }
    bool recursions_apply() const { return h1_ge_h2 && !nu1_zero && !nu2_zero; }

    std::string name() const {
        if (nu1_zero) return priority_upstream() ? "no_upstream_dedicated_priority" : "no_upstream_dedicated_switching";
        if (!h1_ge_h2) return nu2_zero ? "idling_no_downstream_dedicated" : "idling";
        if (nu2_zero) return priority_downstream() ? "no_downstream_dedicated_priority" : "no_downstream_dedicated_switching";
        return switching_curve_proven() ? "non_idling_switching" : "non_idling_unproven";
    }
};

inline Regime classify(const SystemParams& p) {
    Regime r;
    r.h1_ge_h2 = p.h1 >= p.h2;
    r.nu1_zero = p.nu1 == 0.0;
    r.nu2_zero = p.nu2 == 0.0;
    r.nu2_ge_mu2 = p.nu2 >= p.mu2;
    r.mu1_ge_mu2 = p.mu1 >= p.mu2;
    r.full_collaboration = (p.nu1 == 0.0 || p.xi1 == p.mu1) && (p.nu2 == 0.0 || p.xi2 == p.mu2);
    r.upstream_saving = p.mu1 * (p.h1 - p.h2);
    r.downstream_saving = p.mu2 * p.h2;
    return r;
}

struct Witness {
    int x1 = 0;
    int x2 = 0;
    std::string detail;
};

struct Verdict {
    Verdict() = default;
    explicit Verdict(std::string name) : claim(std::move(name)) {}

    std::string claim;
    bool applicable = true;
    bool asserted = true; // false: observation or diagnostic only
    bool pass = true;
    long checked = 0;
    std::optional<Witness> witness;
    std::optional<double> residual;
    std::string note;

    // Records the first failure only.
    void fail(int x1, int x2, std::string detail) {
        if (pass) witness = Witness{x1, x2, std::move(detail)};
        pass = false;
    }
    bool ok() const { return !applicable || !asserted || pass; }
};

inline Verdict not_applicable(std::string claim, std::string note) {
    Verdict v;
    v.claim = std::move(claim);
    v.applicable = false;
    v.note = std::move(note);
    return v;
}

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string at(const char* fn, int x1, int x2) {
    return std::string(fn) + "(" + std::to_string(x1) + "," + std::to_string(x2) + ")";
}

} // namespace detail

/// Thresholds per x1 (index 0 unused). nullopt means the threshold lies
/// beyond the solved triangle.
struct SwitchingCurve {
    int n_max = 0;
    std::vector<std::optional<int>> t;  // flexible server moves downstream at x2 >= t(x1)
    std::vector<std::optional<int>> t2; // dedicated upstream server idles at x2 >= t2(x1)
    bool slope_ok = true;
    bool nondecreasing = true;
    bool t2_nondecreasing = true;
    std::optional<Witness> slope_witness;

    std::optional<int> t1_at_one() const { return t.size() > 1 ? t[1] : std::nullopt; }
    std::optional<int> t2_at_one() const { return t2.size() > 1 ? t2[1] : std::nullopt; }
};

namespace detail {

// Smallest x2 >= 1 with pred true, requiring pred to stay true up to the top
// of the column.
inline std::optional<int> upper_threshold(int x1, int n_max, const std::function<bool(int)>& pred,
                                          const char* what) {
    std::optional<int> first;
    for (int x2 = 1; x1 + x2 <= n_max; ++x2) {
        const bool on = pred(x2);
        if (on && !first) first = x2;
        if (!on && first)
            throw Error(ErrorKind::NotThresholdShaped,
                        std::string(what) + " not single-crossing at (" + std::to_string(x1) + "," +
                            std::to_string(x2) + ") after switching at x2=" + std::to_string(*first));
    }
    return first;
}

// Compares thresholds at consecutive x1; `beyond` entries are resolved using
// the domain edge, which makes some comparisons certain.
inline void slope_scan(SwitchingCurve& c, const std::vector<std::optional<int>>& t, bool& nondecreasing,
                       bool check_slope) {
    const int top = c.n_max - 1;
    for (int x1 = 1; x1 + 1 <= top; ++x1) {
        const auto& cur = t[x1];
        const auto& next = t[x1 + 1];
        if (!next) continue;
        // Unknown cur is at least n_max - x1 + 1; next is at most n_max - x1 - 1.
        const int cur_lb = cur ? *cur : c.n_max - x1 + 1;
        if (*next < cur_lb) nondecreasing = false;
        if (check_slope && *next < cur_lb - 1 && c.slope_ok) {
            c.slope_ok = false;
            c.slope_witness = Witness{x1 + 1, *next,
                                      "t(" + std::to_string(x1 + 1) + ")=" + std::to_string(*next) + " < t(" +
                                          std::to_string(x1) + ")-1" +
                                          (cur ? "=" + std::to_string(*cur - 1) : " (t beyond domain)")};
        }
    }
}

} // namespace detail

/// Switching curve of the flexible server in a non-idling regime. Throws
/// NotThresholdShaped if some column switches back upstream.
inline SwitchingCurve extract_switching_curve(const Policy& policy, const DecisionFunctions& fns) {
    const Regime r = classify(fns.params());
    if (!r.non_idling())
        throw Error(ErrorKind::HypothesisNotMet, "switching curve extraction needs h1 >= h2 or nu1 = 0");
    SwitchingCurve c;
    c.n_max = policy.n_max;
    c.t.assign(static_cast<std::size_t>(c.n_max), std::nullopt);
    c.t2.assign(static_cast<std::size_t>(c.n_max), std::nullopt);
    for (int x1 = 1; x1 < c.n_max; ++x1) {
        c.t[x1] = detail::upper_threshold(
            x1, c.n_max, [&](int x2) { return policy.at(x1, x2).flex == Flex::station2; }, "flexible allocation");
    }
    detail::slope_scan(c, c.t, c.nondecreasing, true);
    return c;
}

/// Thresholds of an idling regime: t(x1) for the flexible server and t2(x1)
/// where the upstream dedicated server starts idling.
inline SwitchingCurve extract_idling_thresholds(const Policy& policy, const DecisionFunctions& fns) {
    const SystemParams& p = fns.params();
    if (p.h1 >= p.h2) throw Error(ErrorKind::IdlingRegimeRequired, "idling thresholds need h1 < h2");
    if (p.nu1 == 0.0) throw Error(ErrorKind::IdlingRegimeRequired, "no upstream dedicated server to idle");
    SwitchingCurve c;
    c.n_max = policy.n_max;
    c.t.assign(static_cast<std::size_t>(c.n_max), std::nullopt);
    c.t2.assign(static_cast<std::size_t>(c.n_max), std::nullopt);
    for (int x1 = 1; x1 < c.n_max; ++x1) {
        c.t[x1] = detail::upper_threshold(
            x1, c.n_max, [&](int x2) { return policy.at(x1, x2).flex == Flex::station2; }, "flexible allocation");
        c.t2[x1] = detail::upper_threshold(
            x1, c.n_max, [&](int x2) { return policy.at(x1, x2).d1 == Dedicated::idle; }, "upstream idling");
    }
    detail::slope_scan(c, c.t, c.nondecreasing, true);
    detail::slope_scan(c, c.t2, c.t2_nondecreasing, false);
    return c;
}

/// Checks on the solved policy that hold for every instance: value
/// monotonicity, the two rate-maximization properties, sign agreement of the
/// governing decision function, and non-idling where it is implied.
inline std::vector<Verdict> verify_policy(const Policy& policy, const DecisionFunctions& fns) {
    using detail::at;
    using detail::num;
    const SystemParams& p = fns.params();
    const Regime r = classify(p);
    const int n_max = fns.n_max();

    Verdict mono{"value_monotone"};
    for (int n = 0; n < n_max; ++n) {
        for (int x1 = 0; x1 <= n; ++x1) {
            const int x2 = n - x1;
            const double v = fns.V(x1, x2);
            mono.checked += 2;
            if (!(fns.V(x1 + 1, x2) > v))
                mono.fail(x1, x2, at("V", x1 + 1, x2) + "=" + num(fns.V(x1 + 1, x2)) + " <= " + at("V", x1, x2) + "=" + num(v));
            if (!(fns.V(x1, x2 + 1) > v))
                mono.fail(x1, x2, at("V", x1, x2 + 1) + "=" + num(fns.V(x1, x2 + 1)) + " <= " + at("V", x1, x2) + "=" + num(v));
        }
    }

    Verdict rate2{"rate2_maximal"};
    Verdict rate1{"rate1_bang_bang"};
    Verdict sign{"decision_sign_consistency"};
    Verdict idle{"non_idling"};
    if (!r.non_idling()) idle = not_applicable("non_idling", "upstream idling can be optimal when h1 < h2");

    for (int n = 1; n <= n_max; ++n) {
        for (int x1 = 0; x1 <= n; ++x1) {
            const int x2 = n - x1;
            const State s{x1, x2};
            const Allocation& a = policy.at(s);
            if (x2 >= 1) {
                ++rate2.checked;
                if (a.flex == Flex::idle)
                    rate2.fail(x1, x2, "flexible server idle with downstream work: " + a.label());
                else if (a.rho2 != max_rate2(s, p, a.flex))
                    rate2.fail(x1, x2, "rho2=" + num(a.rho2) + " below max " + num(max_rate2(s, p, a.flex)) + " for " + a.label());
            }
            if (x1 >= 1) {
                const double fv = fns.f(x1, x2);
                const double tol = fns.sign_tolerance(x1, x2);
                if (x2 == 0 || fv > tol) {
                    ++rate1.checked;
                    if (a.rho1 != max_rate1(s, p, a.flex))
                        rate1.fail(x1, x2, at("f", x1, x2) + "=" + num(fv) + " >= 0 but rho1=" + num(a.rho1) +
                                               " below max " + num(max_rate1(s, p, a.flex)));
                } else if (fv < -tol) {
                    ++rate1.checked;
                    if (a.rho1 != 0.0)
                        rate1.fail(x1, x2, at("f", x1, x2) + "=" + num(fv) + " < 0 but rho1=" + num(a.rho1));
                }
                if (x2 >= 1 && (p.nu1 == 0.0 || fv > tol)) {
                    const double gv = fns.governing(x1, x2);
                    const double gtol = fns.sign_tolerance(x1, x2);
                    if (gv > gtol || gv < -gtol) {
                        ++sign.checked;
                        const Flex want = gv > 0 ? Flex::station1 : Flex::station2;
                        if (a.flex != want)
                            sign.fail(x1, x2, "decision function " + num(gv) + " but flexible server at " +
                                                  std::string(to_string(a.flex)));
                    }
                }
            }
            if (idle.applicable) {
                ++idle.checked;
                if (a.idle_servers(s) > 0) idle.fail(x1, x2, "idling allocation " + a.label());
            }
        }
    }
    return {mono, rate2, rate1, sign, idle};
}

/// Monotonicity and sign properties of the decision functions. Limits in x2
/// are checked as a zero crossing inside the triangle, only when n_max >= 200.
inline std::vector<Verdict> verify_lemmas(const DecisionFunctions& fns, int crossing_x1_max = 5) {
    using detail::at;
    using detail::num;
    const Regime r = classify(fns.params());
    const int n_max = fns.n_max();
    const bool deep = n_max >= 200;
    std::vector<Verdict> out;

    if (r.h1_ge_h2) {
        Verdict v{"upstream_advantage_positive"};
        for (int n = 1; n <= n_max; ++n) {
            for (int x1 = 1; x1 <= n; ++x1) {
                ++v.checked;
                const double fv = fns.f(x1, n - x1);
                if (!(fv > 0.0)) v.fail(x1, n - x1, at("f", x1, n - x1) + "=" + num(fv) + " <= 0");
            }
        }
        out.push_back(v);
    } else {
        out.push_back(not_applicable("upstream_advantage_positive", "requires h1 >= h2"));
    }

    if (r.dtilde_lemma()) {
        Verdict dec{"dtilde_decreasing"};
        for (int x2 = 0; x2 + 2 <= n_max; ++x2) {
            ++dec.checked;
            const double a = fns.dtilde(x2), b = fns.dtilde(x2 + 1);
            if (!(b < a)) dec.fail(1, x2 + 1, at("dtilde", 1, x2 + 1) + "=" + num(b) + " >= " + at("dtilde", 1, x2) + "=" + num(a));
        }
        out.push_back(dec);
        if (deep) {
            Verdict cross{"dtilde_crosses_zero"};
            cross.checked = 1;
            cross.note = "finite-domain surrogate for divergence to -infinity";
            bool found = false;
            for (int x2 = 0; x2 + 1 <= n_max && !found; ++x2) found = fns.dtilde(x2) < 0.0;
            if (!found) cross.fail(1, n_max - 1, at("dtilde", 1, n_max - 1) + "=" + num(fns.dtilde(n_max - 1)) + " still >= 0");
            out.push_back(cross);
        } else {
            out.push_back(not_applicable("dtilde_crosses_zero", "needs n_max >= 200"));
        }
    } else {
        out.push_back(not_applicable("dtilde_decreasing", "requires h1 >= h2, nu1 > 0, nu2 >= mu2"));
        out.push_back(not_applicable("dtilde_crosses_zero", "requires h1 >= h2, nu1 > 0, nu2 >= mu2"));
    }

    if (r.d_lemma()) {
        Verdict dec{"d_decreasing"};
        for (int n = 1; n < n_max; ++n) {
            for (int x1 = 1; x1 <= n; ++x1) {
                const int x2 = n - x1;
                ++dec.checked;
                const double a = fns.d(x1, x2), b = fns.d(x1, x2 + 1);
                if (!(b < a)) dec.fail(x1, x2 + 1, at("d", x1, x2 + 1) + "=" + num(b) + " >= " + at("d", x1, x2) + "=" + num(a));
            }
        }
        out.push_back(dec);

        if (deep) {
            Verdict cross{"d_crosses_zero"};
            cross.note = "finite-domain surrogate for divergence to -infinity, x1 <= " + std::to_string(crossing_x1_max);
            for (int x1 = 1; x1 <= std::min(crossing_x1_max, n_max - 1); ++x1) {
                ++cross.checked;
                bool found = false;
                for (int x2 = 0; x1 + x2 <= n_max && !found; ++x2) found = fns.d(x1, x2) < 0.0;
                if (!found) cross.fail(x1, n_max - x1, at("d", x1, n_max - x1) + "=" + num(fns.d(x1, n_max - x1)) + " still >= 0");
            }
            out.push_back(cross);
        } else {
            out.push_back(not_applicable("d_crosses_zero", "needs n_max >= 200"));
        }

        Verdict imp{"slope_implications"};
        for (int x2 = 1; x2 + 2 <= n_max; ++x2) {
            const double a = fns.d(2, x2), b = fns.d(1, x2 + 1);
            if (a >= 0.0) {
                ++imp.checked;
                if (a < b - fns.sign_tolerance(2, x2))
                    imp.fail(2, x2, at("d", 2, x2) + "=" + num(a) + " >= 0 but < " + at("d", 1, x2 + 1) + "=" + num(b));
            }
        }
        for (int x2 = 2; x2 + 1 <= n_max; ++x2) {
            const double a = fns.dtilde(x2), b = fns.d(2, x2 - 1);
            if (a >= 0.0) {
                ++imp.checked;
                if (a > b + fns.sign_tolerance(1, x2))
                    imp.fail(1, x2, at("dtilde", 1, x2) + "=" + num(a) + " >= 0 but > " + at("d", 2, x2 - 1) + "=" + num(b));
            }
        }
        for (int n = 4; n <= n_max; ++n) {
            for (int x1 = 2; x1 <= n - 2; ++x1) {
                const int x2 = n - x1;
                const double a = fns.d(x1, x2), b = fns.d(x1 + 1, x2 - 1);
                if (a >= 0.0) {
                    ++imp.checked;
                    if (a > b + fns.sign_tolerance(x1, x2))
                        imp.fail(x1, x2, at("d", x1, x2) + "=" + num(a) + " >= 0 but > " + at("d", x1 + 1, x2 - 1) + "=" + num(b));
                }
            }
        }
        out.push_back(imp);
    } else {
        for (const char* c : {"d_decreasing", "d_crosses_zero", "slope_implications"})
            out.push_back(not_applicable(c, "requires h1 >= h2, nu1 > 0, nu2 >= mu2, mu1 >= mu2"));
    }
    return out;
}

/// Threshold-type and priority results. `curve` receives the extracted
/// thresholds when extraction succeeds.
inline std::vector<Verdict> verify_thresholds(const Policy& policy, const DecisionFunctions& fns,
                                              SwitchingCurve* curve = nullptr, int x1_max = 20) {
    const Regime r = classify(fns.params());
    const int n_max = fns.n_max();
    const bool deep = n_max >= 200;
    std::vector<Verdict> out;

    if (r.non_idling()) {
        Verdict shape{"switching_curve"};
        Verdict slope{"slope_at_least_minus_one"};
        Verdict mono{"switching_curve_nondecreasing"};
        mono.asserted = false;
        mono.note = "diagnostic";
        if (!r.switching_curve_proven()) {
            shape.asserted = slope.asserted = false;
            shape.note = slope.note = "not proven for this regime; observed only";
        }
        try {
            const SwitchingCurve c = extract_switching_curve(policy, fns);
            shape.checked = slope.checked = mono.checked = n_max - 1;
            if (!c.slope_ok) slope.fail(c.slope_witness->x1, c.slope_witness->x2, c.slope_witness->detail);
            if (!c.nondecreasing) mono.fail(0, 0, "switching curve decreases somewhere");
            if (curve) *curve = c;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NotThresholdShaped) throw;
            shape.checked = 1;
            shape.fail(0, 0, e.what());
            slope.applicable = mono.applicable = false;
            slope.note = mono.note = "no switching curve";
        }
        out.push_back(shape);
        out.push_back(slope);
        out.push_back(mono);
    } else {
        out.push_back(not_applicable("switching_curve", "idling regime"));
        out.push_back(not_applicable("slope_at_least_minus_one", "idling regime"));
        out.push_back(not_applicable("switching_curve_nondecreasing", "idling regime"));
    }

    if (r.priority_upstream()) {
        Verdict v{"priority_upstream"};
        for (int n = 1; n <= n_max; ++n)
            for (int x1 = 1; x1 <= n; ++x1) {
                ++v.checked;
                if (policy.at(x1, n - x1).flex != Flex::station1)
                    v.fail(x1, n - x1, "flexible server not upstream: " + policy.at(x1, n - x1).label());
            }
        out.push_back(v);
    } else {
        out.push_back(not_applicable("priority_upstream", "requires nu1 = 0 and mu1 (h1 - h2) >= mu2 h2"));
    }

    if (r.priority_downstream()) {
        Verdict v{"priority_downstream"};
        for (int n = 2; n <= n_max; ++n)
            for (int x1 = 1; x1 < n; ++x1) {
                ++v.checked;
                if (policy.at(x1, n - x1).flex != Flex::station2)
                    v.fail(x1, n - x1, "flexible server not downstream: " + policy.at(x1, n - x1).label());
            }
        out.push_back(v);
    } else {
        out.push_back(not_applicable("priority_downstream",
                                     "requires nu2 = 0, h1 >= h2, mu1 >= mu2, mu1 (h1 - h2) <= mu2 h2"));
    }

    if (r.idling()) {
        Verdict exists{"idling_threshold_exists"};
        Verdict two{"two_switching_points"};
        exists.note = "x1 <= " + std::to_string(x1_max);
        if (!r.two_switching_points()) {
            two.asserted = false;
            two.note = "requires full collaboration or nu2 >= mu2; observed only";
        }
        try {
            SwitchingCurve c = extract_idling_thresholds(policy, fns);
            if (deep) {
                for (int x1 = 1; x1 <= std::min(x1_max, n_max - 1); ++x1) {
                    ++exists.checked;
                    if (!c.t2[x1]) exists.fail(x1, n_max - x1, "no upstream idling up to x2=" + std::to_string(n_max - x1));
                }
            } else {
                exists.applicable = false;
                exists.note = "needs n_max >= 200";
            }
            ++two.checked;
            const auto t1 = c.t1_at_one(), t2 = c.t2_at_one();
            if (deep && (!t1 || !t2))
                two.fail(1, 0, "switching points not found in domain");
            else if (t1 && t2 && *t1 > *t2)
                two.fail(1, *t2, "t1=" + std::to_string(*t1) + " > t2=" + std::to_string(*t2));
            else if (t2 && !t1)
                two.fail(1, *t2, "idling without flexible server downstream");
            if (curve) *curve = c;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NotThresholdShaped) throw;
            exists.checked = std::max(1L, exists.checked);
            exists.fail(0, 0, e.what());
            two.fail(0, 0, e.what());
        }
        out.push_back(exists);
        out.push_back(two);
    } else {
        out.push_back(not_applicable("idling_threshold_exists", "requires h1 < h2 and nu1 > 0"));
        out.push_back(not_applicable("two_switching_points", "requires h1 < h2 and nu1 > 0"));
    }

    if (r.downstream_priority_idling()) {
        Verdict v{"downstream_priority_idling"};
        for (int n = 1; n <= n_max; ++n)
            for (int x1 = 0; x1 < n; ++x1) {
                ++v.checked;
                if (policy.at(x1, n - x1).flex != Flex::station2)
                    v.fail(x1, n - x1, "flexible server not downstream: " + policy.at(x1, n - x1).label());
            }
        out.push_back(v);
        if (r.nu1_zero) {
            out.push_back(not_applicable("idling_threshold_nondecreasing", "no upstream dedicated server"));
        } else {
            Verdict m{"idling_threshold_nondecreasing"};
            try {
                SwitchingCurve c = extract_idling_thresholds(policy, fns);
                for (int x1 = 1; x1 + 1 < n_max; ++x1) {
                    ++m.checked;
                    if (!c.t2[x1 + 1]) continue;
                    const int lb = c.t2[x1] ? *c.t2[x1] : n_max - x1 + 1;
                    if (*c.t2[x1 + 1] < lb)
                        m.fail(x1 + 1, *c.t2[x1 + 1],
                               "t2(" + std::to_string(x1 + 1) + ")=" + std::to_string(*c.t2[x1 + 1]) + " < t2(" +
                                   std::to_string(x1) + ")" + (c.t2[x1] ? "=" + std::to_string(*c.t2[x1]) : " (beyond domain)"));
                }
                if (deep) {
                    for (int x1 = 1; x1 <= std::min(x1_max, n_max - 1); ++x1) {
                        ++m.checked;
                        if (!c.t2[x1]) m.fail(x1, n_max - x1, "no upstream idling in domain");
                    }
                }
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NotThresholdShaped) throw;
                m.fail(0, 0, e.what());
            }
            out.push_back(m);
        }
    } else {
        out.push_back(not_applicable("downstream_priority_idling", "requires h1 < h2 and nu2 = 0"));
        out.push_back(not_applicable("idling_threshold_nondecreasing", "requires h1 < h2 and nu2 = 0"));
    }
    return out;
}

/// Recursive identities satisfied by the decision functions in the
/// non-idling regime with both dedicated servers present. Each identity is
/// evaluated at every state where its terms are defined; the verdict carries
/// the largest relative residual |lhs - rhs| / (|lhs| + sum |rhs terms|).
inline std::vector<Verdict> verify_appendix_recursions(const ValueTable& table, const DecisionFunctions& fns,
                                                       double tol = 1e-8) {
    (void)table;
    const Regime r = classify(fns.params());
    if (!r.recursions_apply())
        throw Error(ErrorKind::HypothesisNotMet,
                    "decision-function recursions need h1 >= h2 and both dedicated servers");
    const int n_max = fns.n_max();
    if (n_max < 6) throw Error(ErrorKind::DomainTooSmall, "recursion checks need n_max >= 6");

    const SystemParams& p = fns.params();
    const double nu1 = p.nu1, nu2 = p.nu2, mu1 = p.mu1, mu2 = p.mu2, xi1 = p.xi1, xi2 = p.xi2;
    const double h1 = p.h1, h2 = p.h2;
    auto pos = [](double a) { return std::max(0.0, a); };
    auto neg = [](double a) { return std::min(0.0, a); };
    auto ind = [](bool b) { return b ? 1.0 : 0.0; };
    const double dbar = fns.dbar();

    std::vector<Verdict> out;
    auto check = [&](const char* name, auto&& fill) {
        Verdict v{name};
        double worst = 0.0;
        auto record = [&](int x1, int x2, double lhs, std::initializer_list<double> terms) {
            double rhs = 0.0, mag = std::abs(lhs);
            for (double t : terms) {
                rhs += t;
                mag += std::abs(t);
            }
            const double res = mag > 0.0 ? std::abs(lhs - rhs) / mag : 0.0;
            ++v.checked;
            if (res > worst) worst = res;
            if (!(res <= tol))
                v.fail(x1, x2, "lhs=" + detail::num(lhs) + " rhs=" + detail::num(rhs) + " residual=" + detail::num(res));
        };
        fill(record);
        v.residual = worst;
        out.push_back(v);
    };

    check("dtilde_at_x2_0", [&](auto& rec) {
        const double dt0 = fns.dtilde(0);
        rec(1, 0, dt0, {xi1 * (h1 - h2), xi1 * (nu2 + xi2) * fns.V(0, 1), (nu2 + mu1 + mu2 + xi2) * dt0});
    });
    check("dtilde_at_x2_1", [&](auto& rec) {
        const double dt1 = fns.dtilde(1);
        rec(1, 1, dt1,
            {xi1 * (h1 - h2), -mu2 * h2, nu2 * fns.dtilde(0), mu1 * dt1, nu1 * mu2 * fns.g(0, 2),
             xi1 * xi2 * fns.f(1, 1), mu2 * mu2 * fns.g(1, 1), xi1 * neg(dbar), mu2 * pos(dbar)});
    });
    check("dtilde_recursion", [&](auto& rec) {
        for (int x2 = 2; x2 + 1 <= n_max; ++x2) {
            const double dt = fns.dtilde(x2);
            const double prev = fns.dtilde(x2 - 1);
            rec(1, x2, dt,
                {xi1 * (h1 - h2), -mu2 * h2, nu2 * prev, (mu1 + xi2) * dt, nu1 * mu2 * fns.g(0, x2 + 1),
                 xi1 * neg(dt), mu2 * pos(dt), mu2 * (neg(dbar) * ind(x2 == 2) + neg(prev) * ind(x2 > 2))});
        }
    });
    check("d_x1_1_at_x2_0", [&](auto& rec) {
        const double d10 = fns.d(1, 0);
        rec(1, 0, d10, {mu1 * (h1 - h2), mu1 * (nu2 + xi2) * fns.V(0, 1), (nu2 + mu1 + mu2 + xi2) * d10});
    });
    check("d_x1_1_recursion", [&](auto& rec) {
        for (int x2 = 1; x2 + 1 <= n_max; ++x2) {
            const double d = fns.d(1, x2);
            const double a = x2 == 1 ? neg(dbar) : neg(fns.dtilde(x2));
            const double b = x2 == 2 ? neg(dbar) : (x2 > 2 ? neg(fns.dtilde(x2 - 1)) : 0.0);
            rec(1, x2, d,
                {mu1 * (h1 - h2), -mu2 * h2, nu2 * fns.d(1, x2 - 1), (mu1 + mu2 + xi2) * d,
                 mu2 * (nu1 + xi1 - mu1) * fns.g(0, x2 + 1), (mu1 - mu2) * a, mu2 * b});
        }
    });
    check("d_at_x2_0", [&](auto& rec) {
        for (int x1 = 2; x1 <= n_max; ++x1) {
            const double d = fns.d(x1, 0);
            const double up = x1 == 2 ? pos(dbar) : pos(fns.dhat(x1 - 1));
            rec(x1, 0, d,
                {mu1 * (h1 - h2), nu1 * mu1 * fns.f(x1 - 1, 1), -mu1 * (nu2 + xi2) * fns.g(x1 - 1, 1),
                 (nu2 + mu2 + xi1 + xi2) * d, mu1 * up});
        }
    });
    check("d_at_x2_1", [&](auto& rec) {
        for (int x1 = 2; x1 + 1 <= n_max; ++x1) {
            const double d = fns.d(x1, 1);
            const double dh = fns.dhat(x1);
            const double up = x1 == 2 ? pos(fns.dtilde(2)) : pos(fns.d(x1 - 1, 2));
            rec(x1, 1, d,
                {mu1 * (h1 - h2), -mu2 * h2, nu1 * fns.d(x1 - 1, 2), nu2 * fns.d(x1, 0), (xi1 + xi2) * d,
                 mu2 * (mu2 - xi2) * fns.g(x1, 1), mu1 * neg(dh), mu2 * pos(dh), mu1 * up});
        }
    });
    check("d_recursion", [&](auto& rec) {
        for (int n = 4; n <= n_max; ++n) {
            for (int x1 = 2; x1 <= n - 2; ++x1) {
                const int x2 = n - x1;
                const double d = fns.d(x1, x2);
                const double up = x1 == 2 ? pos(fns.dtilde(x2 + 1)) : pos(fns.d(x1 - 1, x2 + 1));
                const double down = x2 == 2 ? neg(fns.dhat(x1)) : neg(fns.d(x1, x2 - 1));
                rec(x1, x2, d,
                    {mu1 * (h1 - h2), -mu2 * h2, nu1 * fns.d(x1 - 1, x2 + 1), nu2 * fns.d(x1, x2 - 1),
                     (xi1 + xi2) * d, mu1 * neg(d), mu2 * pos(d), mu1 * up, mu2 * down});
            }
        }
    });
    return out;
}

/// Everything above for one solved instance.
struct StructureReport {
    Regime regime;
    std::vector<Verdict> verdicts;
    SwitchingCurve curve;

    bool all_pass() const {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.ok(); });
    }
    const Verdict* find(const std::string& claim) const {
        for (const auto& v : verdicts)
            if (v.claim == claim) return &v;
        return nullptr;
    }
};

struct VerifyOptions {
    double identity_tol = 1e-8;
    int crossing_x1_max = 5; // columns where d(x1, .) must cross zero
    int idling_x1_max = 20;  // columns where an idling threshold must exist
};

inline StructureReport verify_all(const Solution& sol, const VerifyOptions& opt = {}) {
    StructureReport rep;
    rep.regime = classify(sol.values.params());
    const DecisionFunctions fns(sol.values);
    auto append = [&](std::vector<Verdict> vs) {
        for (auto& v : vs) rep.verdicts.push_back(std::move(v));
    };
    append(verify_policy(sol.policy, fns));
    append(verify_lemmas(fns, opt.crossing_x1_max));
    append(verify_thresholds(sol.policy, fns, &rep.curve, opt.idling_x1_max));
    if (rep.regime.recursions_apply() && fns.n_max() >= 6) {
        append(verify_appendix_recursions(sol.values, fns, opt.identity_tol));
    } else {
        rep.verdicts.push_back(not_applicable("recursions", "needs h1 >= h2, both dedicated servers, n_max >= 6"));
    }
    return rep;
}

} // namespace tandem
