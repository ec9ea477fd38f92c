#pragma once

// Command-line front end. Every flag can also come from the environment as
// TANDEM_<FLAG> (upper case, dashes as underscores), e.g. TANDEM_NMAX=60.

#include "tandem/io.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <string>
#include <vector>

namespace tandem {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;

inline int exit_code_for(ErrorKind kind) {
    if (is_validation_error(kind)) return kExitValidation;
    if (kind == ErrorKind::InvalidArgument) return kExitUsage;
    return kExitAssertion;
}

namespace detail {

inline std::pair<double, double> parse_pair(const std::string& text, const char* what) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be A,B");
    return {parse_double(text.substr(0, comma), what), parse_double(text.substr(comma + 1), what)};
}

inline State parse_state(const std::string& text) {
    const auto [a, b] = parse_pair(text, "--start");
    if (a != static_cast<int>(a) || b != static_cast<int>(b) || a < 0 || b < 0)
        throw Error(ErrorKind::InvalidArgument, "--start needs two non-negative integers");
    return {static_cast<int>(a), static_cast<int>(b)};
}

inline CLI::Option* env(CLI::Option* opt, const std::string& flag) {
    std::string name = "TANDEM_";
    for (char c : flag) name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return opt->envname(name);
}

// Writes `text` to `path`, or to `out` when no path was given.
inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        if (!text.empty() && text.back() != '\n') out << '\n';
    } else {
        write_file(path, text);
    }
}

} // namespace detail

struct CliOptions {
    std::string instance;
    std::string out;
    std::string policy;
    std::string grid;
    std::string regime = "thm1_hypotheses";
    std::string start = "5,5";
    std::string method = "enum";
    std::string rate_range;
    std::string h_range;
    int n_max = 0; // 0: subcommand default
    std::uint64_t seed = 1;
    int count = 1000;
    long reps = 100000;
    int threads = 1;
    double tol = 0.0; // 0: subcommand default
    double tie_tol = kTieTolerance;
    double agree_tol = 1e-6;
    int crossing_x1_max = 5;
    int idling_x1_max = 20;
    bool prune = false;
    bool with_timing = false;
};

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Exact solver and structure checks for a two-station tandem clearing system with a flexible server",
                 "tandem"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    CliOptions o;

    auto instance = [&](CLI::App* sc, bool required = true) {
        auto* opt = detail::env(sc->add_option("--instance", o.instance, "instance JSON (nu1 nu2 mu1 mu2 xi1 xi2 h1 h2)"),
                                "instance");
        if (required) opt->required();
    };
    auto nmax = [&](CLI::App* sc, const char* help) {
        detail::env(sc->add_option("--nmax", o.n_max, help)->check(CLI::Range(1, 100000)), "nmax");
    };
    auto outfile = [&](CLI::App* sc, const char* help) { detail::env(sc->add_option("--out", o.out, help), "out"); };
    auto seed = [&](CLI::App* sc) { detail::env(sc->add_option("--seed", o.seed, "64-bit RNG seed"), "seed"); };
    auto threads = [&](CLI::App* sc) {
        detail::env(sc->add_option("--threads", o.threads, "worker cap")->check(CLI::Range(1, 1024)), "threads");
    };
    auto tie = [&](CLI::App* sc) {
        detail::env(sc->add_option("--tie-tol", o.tie_tol, "relative window for argmin ties (default 1e-12)"), "tie-tol");
    };

    auto* solve_cmd = app.add_subcommand("solve", "exact values and an optimal policy as CSV");
    instance(solve_cmd);
    nmax(solve_cmd, "largest total job count (default 20)");
    outfile(solve_cmd, "value/policy CSV (default stdout)");
    detail::env(solve_cmd->add_option("--grid", o.grid, "also write decision functions as CSV"), "grid");
    tie(solve_cmd);

    auto* policy_cmd = app.add_subcommand("policy", "policy map; with --policy, exact cost of a given policy");
    instance(policy_cmd);
    nmax(policy_cmd, "largest total job count (default 20)");
    detail::env(policy_cmd->add_option("--policy", o.policy, "policy CSV to evaluate instead of the optimum"), "policy");
    outfile(policy_cmd, "value/policy CSV of the evaluated policy");
    tie(policy_cmd);

    auto* verify_cmd = app.add_subcommand("verify", "structure, lemma and identity checks on one instance");
    instance(verify_cmd);
    nmax(verify_cmd, "largest total job count (default 40; crossings need 200)");
    outfile(verify_cmd, "StructureReport JSON (default stdout)");
    detail::env(verify_cmd->add_option("--grid", o.grid, "decision-function CSV"), "grid");
    detail::env(verify_cmd->add_option("--tol", o.tol, "identity residual tolerance (default 1e-8)"), "tol");
    detail::env(verify_cmd->add_option("--crossing-x1-max", o.crossing_x1_max, "columns checked for d zero crossings"),
                "crossing-x1-max");
    detail::env(verify_cmd->add_option("--idling-x1-max", o.idling_x1_max, "columns checked for idling thresholds"),
                "idling-x1-max");
    tie(verify_cmd);

    auto* sweep_cmd = app.add_subcommand("sweep", "batch study over random instances of one regime");
    std::vector<std::string> names;
    for (const auto& [k, n] : regime_names()) names.push_back(n);
    detail::env(sweep_cmd->add_option("--regime", o.regime, "regime name")->check(CLI::IsMember(names)), "regime");
    detail::env(sweep_cmd->add_option("--count", o.count, "instances")->check(CLI::PositiveNumber), "count");
    seed(sweep_cmd);
    nmax(sweep_cmd, "solve depth (default 40, 200 for deep regimes)");
    threads(sweep_cmd);
    outfile(sweep_cmd, "BatchReport JSON (default stdout)");
    detail::env(sweep_cmd->add_option("--rate-range", o.rate_range, "lo,hi for nu and mu"), "rate-range");
    detail::env(sweep_cmd->add_option("--h-range", o.h_range, "lo,hi for holding costs"), "h-range");
    detail::env(sweep_cmd->add_option("--tol", o.tol, "identity residual tolerance (default 1e-8)"), "tol");
    detail::env(sweep_cmd->add_option("--crossing-x1-max", o.crossing_x1_max, "columns checked for d zero crossings"),
                "crossing-x1-max");
    detail::env(sweep_cmd->add_option("--idling-x1-max", o.idling_x1_max, "columns checked for idling thresholds"),
                "idling-x1-max");
    detail::env(sweep_cmd->add_flag("--timing", o.with_timing, "include wall-clock time in the report"), "timing");

    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo clearing cost under the optimal or a given policy");
    instance(sim_cmd);
    detail::env(sim_cmd->add_option("--start", o.start, "start state X1,X2 (default 5,5)"), "start");
    detail::env(sim_cmd->add_option("--reps", o.reps, "replications")->check(CLI::PositiveNumber), "reps");
    seed(sim_cmd);
    threads(sim_cmd);
    detail::env(sim_cmd->add_option("--policy", o.policy, "policy CSV (default: solve for the optimum)"), "policy");
    nmax(sim_cmd, "solve depth for the optimal policy (default: start level)");
    outfile(sim_cmd, "result JSON (default stdout)");

    auto* oracle_cmd = app.add_subcommand("oracle", "compare solve() with enumeration or value iteration");
    instance(oracle_cmd);
    nmax(oracle_cmd, "triangle size (default 3 for enum, 15 for vi)");
    detail::env(oracle_cmd->add_option("--method", o.method, "enum or vi")->check(CLI::IsMember({"enum", "vi"})),
                "method");
    detail::env(oracle_cmd->add_option("--tol", o.tol, "value-iteration span tolerance (default 1e-10)"), "tol");
    detail::env(oracle_cmd->add_option("--agree-tol", o.agree_tol, "allowed |V_oracle - V| (default 1e-6)"),
                "agree-tol");
    detail::env(oracle_cmd->add_flag("--prune", o.prune, "enumerate only undominated actions"), "prune");
    outfile(oracle_cmd, "result JSON (default stdout)");

    auto* paper_cmd = app.add_subcommand("paper-examples", "check the two published counterexamples");
    nmax(paper_cmd, "solve depth (default 10)");
    outfile(paper_cmd, "result JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        RunManifest m = make_manifest(app.get_subcommands().front()->get_name());
        auto load = [&] {
            add_input(m, o.instance);
            const SystemParams p = validate(load_instance(o.instance));
            m.config["instance"] = params_to_json(p);
            return p;
        };
        auto with_manifest = [&](json body) {
            json j{{"manifest", m.to_json()}};
            for (auto& [k, v] : body.items()) j[k] = v;
            return j.dump(2);
        };

        if (*solve_cmd) {
            const SystemParams p = load();
            const int n = o.n_max ? o.n_max : 20;
            m.config["n_max"] = n;
            m.config["tie_tol"] = o.tie_tol;
            const Solution sol = solve(p, n, o.tie_tol);
            detail::emit(o.out, policy_csv(sol.values, sol.policy), out);
            if (!o.out.empty()) write_file(o.out + ".manifest.json", m.to_json().dump(2) + "\n");
            if (!o.grid.empty()) {
                if (n < 2) throw Error(ErrorKind::DomainTooSmall, "decision grid needs n_max >= 2");
                write_file(o.grid, decision_grid_csv(decision_functions(sol.values)));
            }
            return kExitOk;
        }

        if (*policy_cmd) {
            const SystemParams p = load();
            if (o.policy.empty()) {
                const int n = o.n_max ? o.n_max : 20;
                const Solution sol = solve(p, n, o.tie_tol);
                out << policy_map(sol.policy);
                if (!o.out.empty()) write_file(o.out, policy_csv(sol.values, sol.policy));
                return kExitOk;
            }
            add_input(m, o.policy);
            const Policy pol = read_policy_csv(read_file(o.policy), p);
            const ValueTable vp = evaluate_policy(p, pol);
            const Solution best = solve(p, pol.n_max, o.tie_tol);
            double excess = 0.0;
            for (int n = 1; n <= pol.n_max; ++n)
                for (int x1 = 0; x1 <= n; ++x1)
                    excess = std::max(excess, vp.value(x1, n - x1) - best.values.value(x1, n - x1));
            out << policy_map(pol);
            out << "max excess over optimum: " << fmt17(excess) << "\n";
            if (!o.out.empty()) write_file(o.out, policy_csv(vp, pol));
            return kExitOk;
        }

        if (*verify_cmd) {
            const SystemParams p = load();
            const int n = o.n_max ? o.n_max : 40;
            VerifyOptions vo;
            vo.identity_tol = o.tol > 0.0 ? o.tol : vo.identity_tol;
            vo.crossing_x1_max = o.crossing_x1_max;
            vo.idling_x1_max = o.idling_x1_max;
            m.config["n_max"] = n;
            m.config["tie_tol"] = o.tie_tol;
            m.config["identity_tol"] = vo.identity_tol;
            const Solution sol = solve(p, n, o.tie_tol);
            if (n < 2) throw Error(ErrorKind::DomainTooSmall, "verify needs n_max >= 2");
            const StructureReport rep = verify_all(sol, vo);
            detail::emit(o.out, with_manifest(structure_report_to_json(rep)) + "\n", out);
            if (!o.grid.empty()) write_file(o.grid, decision_grid_csv(decision_functions(sol.values)));
            if (!o.out.empty()) {
                out << rep.regime.name() << ": " << (rep.all_pass() ? "all asserted claims pass" : "FAILED") << "\n";
                for (const auto& v : rep.verdicts) {
                    if (v.ok()) continue;
                    out << "  " << v.claim;
                    if (v.witness) out << " at (" << v.witness->x1 << "," << v.witness->x2 << ")";
                    out << "\n";
                }
            }
            return rep.all_pass() ? kExitOk : kExitAssertion;
        }

        if (*sweep_cmd) {
            ExperimentConfig cfg = ExperimentConfig::defaults_for(parse_regime(o.regime));
            cfg.count = o.count;
            cfg.seed = o.seed;
            cfg.threads = o.threads;
            if (o.n_max) cfg.n_max = o.n_max;
            if (!o.rate_range.empty()) {
                const auto [lo, hi] = detail::parse_pair(o.rate_range, "--rate-range");
                cfg.rate_range = {lo, hi};
            }
            if (!o.h_range.empty()) {
                const auto [lo, hi] = detail::parse_pair(o.h_range, "--h-range");
                cfg.h_range = {lo, hi};
            }
            if (o.tol > 0.0) cfg.verify.identity_tol = o.tol;
            cfg.verify.crossing_x1_max = o.crossing_x1_max;
            cfg.verify.idling_x1_max = o.idling_x1_max;
            m.config = config_to_json(cfg);
            m.seeds = {cfg.seed};
            const BatchReport rep = run_batch(cfg);
            const std::string text = with_manifest(batch_report_to_json(rep, o.with_timing)) + "\n";
            detail::emit(o.out, text, out);
            if (!o.out.empty()) {
                out << rep.regime << ": " << rep.instances << " instances, violations=" << rep.asserted_violations()
                    << ", solve errors=" << rep.solve_errors << "\n";
                for (const auto& c : rep.claims)
                    out << "  " << c.claim << (c.asserted ? "" : " (observed)") << ": " << c.violations << "/"
                        << c.instances_checked << "\n";
            }
            return rep.ok() ? kExitOk : kExitAssertion;
        }

        if (*sim_cmd) {
            const SystemParams p = load();
            SimConfig sc;
            sc.start = detail::parse_state(o.start);
            sc.replications = o.reps;
            sc.seed = o.seed;
            sc.threads = o.threads;
            m.config["start"] = {sc.start.x1, sc.start.x2};
            m.config["reps"] = sc.replications;
            m.seeds = {sc.seed};
            json body;
            if (sc.start.total() == 0) {
                body = sim_result_to_json(SimResult{0.0, 0.0, sc.replications, 0});
            } else if (!o.policy.empty()) {
                add_input(m, o.policy);
                const Policy pol = read_policy_csv(read_file(o.policy), p);
                const ValueTable vp = evaluate_policy(p, pol);
                const SimResult r = simulate(vp.params(), pol, sc);
                body = sim_result_to_json(r);
                body["exact"] = vp.value(sc.start);
            } else {
                const int n = std::max(o.n_max, sc.start.total());
                m.config["n_max"] = n;
                const Solution sol = solve(p, n);
                const SimResult r = simulate(sol.values.params(), sol.policy, sc);
                body = sim_result_to_json(r);
                body["exact"] = sol.values.value(sc.start);
            }
            detail::emit(o.out, with_manifest(body) + "\n", out);
            return kExitOk;
        }

        if (*oracle_cmd) {
            const SystemParams p = load();
            const bool vi = o.method == "vi";
            const int n = o.n_max ? o.n_max : (vi ? 15 : 3);
            m.config["n_max"] = n;
            m.config["method"] = o.method;
            const OracleResult r = vi ? value_iteration(p, n, o.tol > 0.0 ? o.tol : 1e-10)
                                      : enumerate_policies(p, n, o.prune);
            json body = oracle_result_to_json(r);
            body["agree_tol"] = o.agree_tol;
            body["agrees"] = r.residual <= o.agree_tol;
            detail::emit(o.out, with_manifest(body) + "\n", out);
            return r.residual <= o.agree_tol ? kExitOk : kExitAssertion;
        }

        if (*paper_cmd) {
            const int n = o.n_max ? std::max(o.n_max, 6) : 10;
            m.config["n_max"] = n;
            const GoldenReport rep = reproduce_paper_examples(n);
            detail::emit(o.out, with_manifest(golden_report_to_json(rep)) + "\n", out);
            if (!rep.ok()) {
                err << "GoldenMismatch:";
                for (const auto& c : rep.checks)
                    if (!c.pass())
                        err << " " << c.name << "(" << c.state.x1 << "," << c.state.x2 << ") flex=" << to_string(c.actual);
                err << "\n";
                return kExitAssertion;
            }
            return kExitOk;
        }
    } catch (const Error& e) {
        err << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitAssertion;
    }
    return kExitUsage;
}

} // namespace tandem
