#pragma once

// Instance files, CSV grids and JSON reports.

#include "tandem/experiments.hpp"
#include "tandem/oracle.hpp"
#include "tandem/simulate.hpp"
#include "tandem/solver.hpp"
#include "tandem/structure.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace tandem {

inline constexpr const char* kVersion = "0.3.1";

using json = nlohmann::ordered_json;

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
    out << text;
}

// ---- instances ------------------------------------------------------------

inline json params_to_json(const SystemParams& p) {
    return json{{"nu1", p.nu1}, {"nu2", p.nu2}, {"mu1", p.mu1}, {"mu2", p.mu2},
                {"xi1", p.xi1}, {"xi2", p.xi2}, {"h1", p.h1},   {"h2", p.h2}};
}

/// Raw (unvalidated) parameters from an instance object. All eight keys are
/// required so that a typo cannot silently zero a rate.
inline SystemParams params_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "instance must be a JSON object");
    auto get = [&](const char* key) {
        if (!j.contains(key)) throw Error(ErrorKind::InvalidArgument, std::string("instance lacks '") + key + "'");
        if (!j.at(key).is_number())
            throw Error(ErrorKind::InvalidArgument, std::string("instance key '") + key + "' is not a number");
        return j.at(key).get<double>();
    };
    SystemParams p;
    p.nu1 = get("nu1");
    p.nu2 = get("nu2");
    p.mu1 = get("mu1");
    p.mu2 = get("mu2");
    p.xi1 = get("xi1");
    p.xi2 = get("xi2");
    p.h1 = get("h1");
    p.h2 = get("h2");
    return p;
}

inline SystemParams load_instance(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, path + ": " + e.what());
    }
    return params_from_json(j);
}

// ---- value / policy CSV -----------------------------------------------------

inline constexpr const char* kPolicyHeader = "x1,x2,V,rho1,rho2,d1,d2,flex,q_gap";

/// One row per state of the triangle by level, then x1. Costs and rates are
/// in the original time unit; the empty state has blank action cells.
inline std::string policy_csv(const ValueTable& values, const Policy& policy) {
    const double scale = values.params().scale;
    std::string out = std::string(kPolicyHeader) + "\n";
    for (int n = 0; n <= values.n_max(); ++n) {
        for (int x1 = 0; x1 <= n; ++x1) {
            const int x2 = n - x1;
            out += std::to_string(x1) + "," + std::to_string(x2) + "," + fmt17(values.value(x1, x2));
            if (n == 0) {
                out += ",0,0,,,,\n";
                continue;
            }
            const Allocation& a = policy.at(x1, x2);
            out += "," + fmt17(a.rho1 * scale) + "," + fmt17(a.rho2 * scale);
            out += "," + std::string(to_string(a.d1)) + "," + std::string(to_string(a.d2)) + "," +
                   std::string(to_string(a.flex));
            out += "," + fmt17(policy.gap(x1, x2) / scale) + "\n";
        }
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

inline double parse_double(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw Error(ErrorKind::InvalidArgument, where + ": bad number '" + s + "'");
    return v;
}

inline int parse_int(const std::string& s, const std::string& where) {
    const double v = parse_double(s, where);
    if (v != static_cast<int>(v)) throw Error(ErrorKind::InvalidArgument, where + ": bad integer '" + s + "'");
    return static_cast<int>(v);
}

} // namespace detail

/// Reads a policy written by policy_csv (or edited by hand). Actions are
/// matched to the feasible set by their rate pair; the V and q_gap columns
/// are ignored. Every nonempty state of the triangle must be present.
inline Policy read_policy_csv(const std::string& text, const SystemParams& raw) {
    const SystemParams p = uniformize(validate(raw));
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::InvalidArgument, "empty policy file");
    const auto header = detail::split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* need : {"x1", "x2", "rho1", "rho2"})
        if (!col.count(need)) throw Error(ErrorKind::InvalidArgument, std::string("policy file lacks column ") + need);

    struct Row {
        int x1, x2;
        double rho1, rho2;
    };
    std::vector<Row> rows;
    int n_max = 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_csv(line);
        const std::string where = "policy line " + std::to_string(lineno);
        auto cell = [&](const char* name) -> const std::string& {
            const std::size_t i = col.at(name);
            if (i >= cells.size()) throw Error(ErrorKind::InvalidArgument, where + ": missing " + name);
            return cells[i];
        };
        Row r{detail::parse_int(cell("x1"), where), detail::parse_int(cell("x2"), where), 0.0, 0.0};
        if (r.x1 < 0 || r.x2 < 0) throw Error(ErrorKind::InvalidArgument, where + ": negative state");
        if (r.x1 + r.x2 == 0) continue;
        r.rho1 = detail::parse_double(cell("rho1"), where);
        r.rho2 = detail::parse_double(cell("rho2"), where);
        n_max = std::max(n_max, r.x1 + r.x2);
        rows.push_back(r);
    }
    if (n_max < 1) throw Error(ErrorKind::InvalidArgument, "policy file has no states");

    Policy pol{n_max, std::vector<Allocation>(tri_size(n_max)), std::vector<double>(tri_size(n_max), 0.0)};
    std::vector<char> seen(tri_size(n_max), 0);
    for (const Row& r : rows) {
        const State s{r.x1, r.x2};
        const auto a = find_feasible(s, p, r.rho1 / p.scale, r.rho2 / p.scale, 1e-9);
        if (!a)
            throw Error(ErrorKind::InfeasibleAction, "state (" + std::to_string(r.x1) + "," + std::to_string(r.x2) +
                                                         "): rates (" + fmt17(r.rho1) + ", " + fmt17(r.rho2) +
                                                         ") are not a feasible allocation");
        pol.action[tri_index(s.x1, s.x2)] = *a;
        seen[tri_index(s.x1, s.x2)] = 1;
    }
    for (int n = 1; n <= n_max; ++n)
        for (int x1 = 0; x1 <= n; ++x1)
            if (!seen[tri_index(x1, n - x1)])
                throw Error(ErrorKind::InvalidArgument,
                            "policy file lacks state (" + std::to_string(x1) + "," + std::to_string(n - x1) + ")");
    return pol;
}

// ---- decision grids ---------------------------------------------------------

/// f and g in the original cost unit; the d-family is invariant under
/// rescaling time and is written as computed. Absent entries are blank.
inline std::string decision_grid_csv(const DecisionFunctions& fns) {
    const double scale = fns.params().scale;
    auto cell = [](double v) { return std::isnan(v) ? std::string() : fmt17(v); };
    std::string out = "x1,x2,f,g,d,dtilde,dhat,dbar\n";
    for (int n = 0; n <= fns.n_max(); ++n) {
        for (int x1 = 0; x1 <= n; ++x1) {
            const int x2 = n - x1;
            out += std::to_string(x1) + "," + std::to_string(x2) + "," + cell(fns.f_or_nan(x1, x2) / scale) + "," +
                   cell(fns.g_or_nan(x1, x2) / scale) + "," + cell(fns.d_or_nan(x1, x2)) + "," +
                   cell(fns.dtilde_or_nan(x1, x2)) + "," + cell(fns.dhat_or_nan(x1, x2)) + "," +
                   cell(fns.dbar_or_nan(x1, x2)) + "\n";
        }
    }
    return out;
}

/// Flexible-server map: rows are x2 from the top level down, columns x1.
/// '1'/'2' give the flexible server's station, 'i' marks states where it is
/// downstream and the upstream dedicated server idles, '-' a flexible server
/// left idle.
inline std::string policy_map(const Policy& policy) {
    std::string out;
    for (int x2 = policy.n_max; x2 >= 0; --x2) {
        char label[16];
        std::snprintf(label, sizeof label, "%3d |", x2);
        out += label;
        for (int x1 = 0; x1 + x2 <= policy.n_max; ++x1) {
            if (x1 + x2 == 0) {
                out += " .";
                continue;
            }
            const Allocation& a = policy.at(x1, x2);
            char c = '-';
            if (a.flex == Flex::station1) c = '1';
            if (a.flex == Flex::station2) c = (a.d1 == Dedicated::idle && x1 > 0) ? 'i' : '2';
            out += ' ';
            out += c;
        }
        out += '\n';
    }
    out += "    +";
    for (int x1 = 0; x1 <= policy.n_max; ++x1) out += "--";
    out += "\n     ";
    for (int x1 = 0; x1 <= policy.n_max; ++x1) out += " " + std::to_string(x1 % 10);
    out += "  (x1)\n";
    return out;
}

// ---- reports ----------------------------------------------------------------

inline json optional_ints(const std::vector<std::optional<int>>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(x ? json(*x) : json(nullptr));
    return a;
}

inline json witness_to_json(const Witness& w) { return json{{"x1", w.x1}, {"x2", w.x2}, {"detail", w.detail}}; }

inline json verdict_to_json(const Verdict& v) {
    json j{{"claim", v.claim}, {"pass", v.pass}, {"applicable", v.applicable}, {"asserted", v.asserted},
           {"checked", v.checked}};
    if (v.witness) j["witness"] = witness_to_json(*v.witness);
    if (v.residual) j["residual"] = *v.residual;
    if (!v.note.empty()) j["note"] = v.note;
    return j;
}

inline json structure_report_to_json(const StructureReport& rep) {
    json verdicts = json::array();
    for (const auto& v : rep.verdicts) verdicts.push_back(verdict_to_json(v));
    return json{{"regime", rep.regime.name()},
                {"all_pass", rep.all_pass()},
                {"verdicts", verdicts},
                {"t", optional_ints(rep.curve.t)},
                {"t2", optional_ints(rep.curve.t2)},
                {"crossing_note", "limits in x2 are checked as zero crossings inside the solved triangle"}};
}

inline json config_to_json(const ExperimentConfig& c) {
    return json{{"regime", to_string(c.regime)},
                {"count", c.count},
                {"seed", c.seed},
                {"n_max", c.n_max},
                {"rate_range", {c.rate_range.lo, c.rate_range.hi}},
                {"h_range", {c.h_range.lo, c.h_range.hi}},
                {"xi_fraction", {c.xi_fraction.lo, c.xi_fraction.hi}},
                {"crossing_x1_max", c.verify.crossing_x1_max},
                {"idling_x1_max", c.verify.idling_x1_max},
                {"identity_tol", c.verify.identity_tol},
                {"threads", c.threads}};
}

/// `with_timing` is off for reproducible runs so that reports compare
/// byte for byte.
inline json batch_report_to_json(const BatchReport& rep, bool with_timing) {
    json claims = json::array();
    for (const auto& c : rep.claims)
        claims.push_back(json{{"claim", c.claim},
                              {"asserted", c.asserted},
                              {"instances_checked", c.instances_checked},
                              {"violations", c.violations}});
    json cx = json::array();
    for (const auto& c : rep.counterexamples)
        cx.push_back(json{{"index", c.index},
                          {"seed", c.seed},
                          {"claim", c.claim},
                          {"asserted", c.asserted},
                          {"params", params_to_json(c.params)},
                          {"witness", witness_to_json(c.witness)}});
    json j{{"regime", rep.regime},
           {"generator", kGeneratorDescription},
           {"instances", rep.instances},
           {"solve_errors", rep.solve_errors},
           {"asserted_violations", rep.asserted_violations()},
           {"ok", rep.ok()},
           {"claims", claims},
           {"counterexamples", cx},
           {"errors", rep.errors},
           {"summary",
            {{"t_at_one_found", rep.t_at_one_found},
             {"mean_t_at_one", rep.mean_t_at_one},
             {"max_t_at_one", rep.max_t_at_one},
             {"t2_at_one_found", rep.t2_at_one_found},
             {"mean_t2_at_one", rep.mean_t2_at_one},
             {"max_t2_at_one", rep.max_t2_at_one}}}};
    if (with_timing) j["wall_clock_s"] = rep.wall_clock_s;
    return j;
}

inline json golden_report_to_json(const GoldenReport& rep) {
    json checks = json::array();
    for (const auto& c : rep.checks)
        checks.push_back(json{{"example", c.name},
                              {"state", {c.state.x1, c.state.x2}},
                              {"expected_flex", to_string(c.expected)},
                              {"actual_flex", to_string(c.actual)},
                              {"pass", c.pass()}});
    return json{{"checks", checks},
                {"upstream_saving", rep.upstream_saving},
                {"downstream_saving", rep.downstream_saving},
                {"savings_ordered", rep.savings_ordered},
                {"ok", rep.ok()}};
}

inline json sim_result_to_json(const SimResult& r) {
    return json{{"mean", r.mean}, {"se", r.se}, {"reps", r.replications}, {"digest", hex64(r.digest)}};
}

inline json oracle_result_to_json(const OracleResult& r) {
    json j{{"method", to_string(r.method)}, {"n_max", r.n_max}, {"residual", r.residual}};
    if (r.method == OracleMethod::enumeration) {
        j["policies_examined"] = r.policies_examined;
    } else {
        j["iterations"] = r.iterations;
        j["span_gap"] = r.span_gap;
    }
    json best = json::array();
    for (int n = 0; n <= r.n_max; ++n)
        for (int x1 = 0; x1 <= n; ++x1) best.push_back(json{{"x1", x1}, {"x2", n - x1}, {"V", r.value(x1, n - x1)}});
    j["best"] = best;
    return j;
}

// ---- run manifest -------------------------------------------------------------

struct RunManifest {
    std::string subcommand;
    json config = json::object();
    std::vector<std::uint64_t> seeds;
    std::map<std::string, std::string> input_digests; // path -> FNV-1a of the bytes
    std::string timestamp;
    bool reproducible = false; // SOURCE_DATE_EPOCH was set

    json to_json() const {
        json digests = json::object();
        for (const auto& [k, v] : input_digests) digests[k] = v;
        return json{{"subcommand", subcommand}, {"version", kVersion}, {"config", config},
                    {"seeds", seeds},           {"input_digests", digests}, {"timestamp", timestamp}};
    }
};

/// UTC timestamp; SOURCE_DATE_EPOCH pins it for reproducible output.
inline std::string manifest_timestamp(bool* pinned = nullptr) {
    std::time_t t = std::time(nullptr);
    bool fixed = false;
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end && *end == '\0') {
            t = static_cast<std::time_t>(v);
            fixed = true;
        }
    }
    if (pinned) *pinned = fixed;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline RunManifest make_manifest(std::string subcommand) {
    RunManifest m;
    m.subcommand = std::move(subcommand);
    m.timestamp = manifest_timestamp(&m.reproducible);
    return m;
}

inline void add_input(RunManifest& m, const std::string& path) {
    const std::string bytes = read_file(path);
    m.input_digests[path] = hex64(detail::fnv1a(bytes.data(), bytes.size()));
}

} // namespace tandem
