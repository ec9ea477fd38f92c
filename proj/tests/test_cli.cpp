#include "tandem/cli.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace tandem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "tandem");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string data(const char* name) { return std::string(TANDEM_DATA_DIR) + "/" + name; }

std::string tmp(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "tandem_cli_test";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

} // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"sweep", "--regime", "thm9"}).code, kExitUsage);
    EXPECT_EQ(run({"solve"}).code, kExitUsage);
    EXPECT_EQ(run({"simulate", "--instance", data("symmetric.json"), "--start", "a,b"}).code, kExitUsage);
    EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, ValidationErrorsExitThree) {
    const Outcome r = run({"verify", "--instance", data("superadditive.json")});
    EXPECT_EQ(r.code, kExitValidation);
    EXPECT_NE(r.err.find("CollaborationBoundViolated"), std::string::npos) << r.err;
}

TEST(Cli, PaperExamples) {
    const Outcome r = run({"paper-examples"});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j["manifest"]["subcommand"], "paper-examples");
    EXPECT_TRUE(j.contains("checks"));
}

TEST(Cli, SolveWritesCsvAndManifest) {
    const std::string out = tmp("solve.csv"), grid = tmp("grid.csv");
    const Outcome r = run({"solve", "--instance", data("slope_counterexample.json"), "--nmax", "6", "--out", out, "--grid",
                           grid});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const std::string csv = read_file(out);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), kPolicyHeader);
    const json m = json::parse(read_file(out + ".manifest.json"));
    EXPECT_EQ(m["config"]["n_max"], 6);
    EXPECT_EQ(m["input_digests"].size(), 1u);
    EXPECT_EQ(read_file(grid).substr(0, 2), "x1");

    // feeding the optimum back gives zero excess
    const Outcome p = run({"policy", "--instance", data("slope_counterexample.json"), "--policy", out});
    ASSERT_EQ(p.code, kExitOk) << p.err;
    EXPECT_NE(p.out.find("max excess over optimum: 0"), std::string::npos) << p.out;
}

TEST(Cli, VerifyReport) {
    const Outcome r = run({"verify", "--instance", data("symmetric.json"), "--nmax", "20"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const json j = json::parse(r.out);
    EXPECT_TRUE(j["all_pass"].get<bool>());
    EXPECT_TRUE(j["verdicts"].is_array());
}

TEST(Cli, EnvironmentOverride) {
    ::setenv("TANDEM_NMAX", "4", 1);
    const Outcome r = run({"solve", "--instance", data("symmetric.json")});
    ::unsetenv("TANDEM_NMAX");
    ASSERT_EQ(r.code, kExitOk) << r.err;
    std::size_t rows = 0;
    for (char c : r.out) rows += c == '\n';
    EXPECT_EQ(rows, 1 + tri_size(4));
}

TEST(Cli, SweepIsReproducible) {
    ::setenv("SOURCE_DATE_EPOCH", "0", 1);
    const std::vector<std::string> args{"sweep", "--regime", "thm1_hypotheses", "--count", "20", "--seed", "3"};
    const Outcome a = run(args), b = run(args);
    ::unsetenv("SOURCE_DATE_EPOCH");
    ASSERT_EQ(a.code, kExitOk) << a.err;
    EXPECT_EQ(a.out, b.out);
    const json j = json::parse(a.out);
    EXPECT_EQ(j["manifest"]["seeds"][0], 3);
    EXPECT_EQ(j["manifest"]["timestamp"], "1970-01-01T00:00:00Z");
}

TEST(Cli, Oracle) {
    EXPECT_EQ(run({"oracle", "--instance", data("slope_counterexample.json"), "--nmax", "2"}).code, kExitOk);
    const Outcome vi = run({"oracle", "--instance", data("idling.json"), "--method", "vi", "--nmax", "10"});
    ASSERT_EQ(vi.code, kExitOk) << vi.err;
    EXPECT_TRUE(json::parse(vi.out)["agrees"].get<bool>());
    EXPECT_EQ(run({"oracle", "--instance", data("symmetric.json"), "--nmax", "4"}).code, kExitAssertion);
}

TEST(Cli, Simulate) {
    const Outcome r = run({"simulate", "--instance", data("symmetric.json"), "--start", "2,2", "--reps", "20000"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const json j = json::parse(r.out);
    for (const char* k : {"mean", "se", "reps", "exact"}) EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_LT(std::abs(j["mean"].get<double>() - j["exact"].get<double>()), 4 * j["se"].get<double>());
}
