#include "lmmselect/io.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using lmmselect::Json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "lmmselect_test_cli";

int run(const std::string& args, const std::string& env = "")
{
    const std::string cmd = env + " " + LMMSELECT_CLI + " " + args + " > " + (kWork / "stdout").string() +
                            " 2> " + (kWork / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Json stdout_json()
{
    return Json::parse(slurp(kWork / "stdout"));
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
    static void TearDownTestSuite() { fs::remove_all(kWork); }

    std::string manifest(const std::string& name, const std::string& extra = "")
    {
        const fs::path dir = kWork / name;
        if (!fs::exists(dir / "manifest.json"))
            EXPECT_EQ(run("generate --scenario fig1 --s0 3 --out " + dir.string() + " " + extra), 0);
        return (dir / "manifest.json").string();
    }
};

} // namespace

TEST_F(Cli, GenerateWritesFig1Files)
{
    const std::string m = manifest("g1");
    const auto stored = lmmselect::load_instance(m);
    EXPECT_EQ(stored.problem.x.rows(), 120);
    EXPECT_EQ(stored.problem.x.cols(), 150);
    EXPECT_EQ(stored.problem.z.cols(), 40);
    for (const char* f : {"x.csv", "z.csv", "y.csv", "manifest.json"})
        EXPECT_TRUE(fs::exists(kWork / "g1" / f)) << f;
}

TEST_F(Cli, GenerateIsByteIdentical)
{
    manifest("same_a", "--seed 0");
    manifest("same_b", "--seed 0");
    for (const char* f : {"x.csv", "z.csv", "y.csv", "manifest.json"})
        EXPECT_EQ(slurp(kWork / "same_a" / f), slurp(kWork / "same_b" / f)) << f;
}

TEST_F(Cli, SeedEnvironmentVariable)
{
    ASSERT_EQ(run("generate --scenario fig1 --s0 3 --out " + (kWork / "env7").string(), "LMM_SELECT_SEED=7"), 0);
    manifest("flag7", "--seed 7");
    EXPECT_EQ(slurp(kWork / "env7" / "y.csv"), slurp(kWork / "flag7" / "y.csv"));
    EXPECT_NE(slurp(kWork / "env7" / "y.csv"), slurp(kWork / "g1" / "y.csv"));
    // An explicit flag wins over the environment.
    ASSERT_EQ(run("generate --scenario fig1 --s0 3 --seed 0 --out " + (kWork / "env_flag").string(), "LMM_SELECT_SEED=7"), 0);
    EXPECT_EQ(slurp(kWork / "env_flag" / "y.csv"), slurp(kWork / "g1" / "y.csv"));
}

TEST_F(Cli, StrongPenaltyGivesEmptySupport)
{
    ASSERT_EQ(run("fit --manifest " + manifest("g1") + " --lambda 1e9"), 0);
    const Json j = stdout_json();
    EXPECT_TRUE(j["support"].empty());
    EXPECT_TRUE(j["beta"].empty());
    EXPECT_LE(j["kkt_residual"].get<double>(), 1e-6);
}

TEST_F(Cli, NaiveMatchesTinyRidge)
{
    const std::string m = manifest("g1");
    ASSERT_EQ(run("fit --manifest " + m + " --method hdlmm_naive --lambda 15"), 0);
    const Json naive = stdout_json();
    ASSERT_EQ(run("fit --manifest " + m + " --method lmm_convex_1 --lambda 15 --capital-lambda 1e-8"), 0);
    const Json convex = stdout_json();
    std::map<long, double> a, b;
    for (const auto& e : naive["beta"])
        a[e["index"].get<long>()] = e["value"].get<double>();
    for (const auto& e : convex["beta"])
        b[e["index"].get<long>()] = e["value"].get<double>();
    ASSERT_FALSE(a.empty());
    for (long j = 0; j < 150; ++j)
        EXPECT_NEAR(a.count(j) ? a[j] : 0.0, b.count(j) ? b[j] : 0.0, 1e-4) << j;
}

TEST_F(Cli, MalformedCsvIsAValidationError)
{
    const std::string m = manifest("broken");
    std::ofstream(kWork / "broken" / "x.csv", std::ios::app) << "1,2,oops\n";
    EXPECT_EQ(run("fit --manifest " + m + " --lambda 1"), 2);
    const std::string err = slurp(kWork / "stderr");
    EXPECT_NE(err.find("x.csv:121:"), std::string::npos) << err;
}

TEST_F(Cli, ExitCodes)
{
    EXPECT_EQ(run("fit --manifest /nonexistent/manifest.json --lambda 1"), 4);
    EXPECT_EQ(run("fit --manifest " + manifest("g1") + " --lambda -1"), 2);
    EXPECT_EQ(run("generate --scenario fig9 --out " + (kWork / "nope").string()), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    // figD2 case 3 covariance is indefinite, so D^{-1} does not exist.
    ASSERT_EQ(run("generate --scenario figD2 --case 3 --p 20 --out " + (kWork / "d3").string()), 0);
    EXPECT_EQ(run("weights --kind covariance --manifest " + (kWork / "d3" / "manifest.json").string()), 3);
}

TEST_F(Cli, PathDiagnoseReduceWeights)
{
    const std::string m = manifest("g1");
    ASSERT_EQ(run("path --manifest " + m + " --lambda-count 10 --capital-lambdas 0.1,10 --out " +
                  (kWork / "path.csv").string()),
              0);
    const std::string csv = slurp(kWork / "path.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "lambda,capital_lambda,support_size,objective,kkt_residual,converged,support,error");

    ASSERT_EQ(run("diagnose ircon --manifest " + m), 0);
    const Json ir = stdout_json();
    EXPECT_NEAR(ir["margin"].get<double>(), 1.0 - ir["value"].get<double>(), 1e-15);

    ASSERT_EQ(run("weights --manifest " + m), 0);
    EXPECT_EQ(stdout_json()["weights"].size(), 2u);

    ASSERT_EQ(run("reduce --manifest " + m + " --threshold 0.9 --out " + (kWork / "reduced").string()), 0);
    const Json red = stdout_json();
    EXPECT_TRUE(fs::exists(kWork / "reduced" / "loadings_1.csv"));
    EXPECT_EQ(lmmselect::load_instance(kWork / "reduced" / "manifest.json").problem.q(),
              red["new_group_sizes"][0].get<long>() + red["new_group_sizes"][1].get<long>());

    ASSERT_EQ(run("fit --manifest " + m + " --lambda 10 --out " + (kWork / "fit.json").string()), 0);
    const Json fit = Json::parse(slurp(kWork / "fit.json"));
    std::ofstream beta(kWork / "beta.csv");
    std::vector<double> dense(150, 0.0);
    for (const auto& e : fit["beta"])
        dense[e["index"].get<std::size_t>()] = e["value"].get<double>();
    for (double v : dense)
        beta << lmmselect::format_double(v) << '\n';
    beta.close();
    std::ofstream u(kWork / "u.csv");
    for (const auto& v : fit["u"])
        u << lmmselect::format_double(v.get<double>()) << '\n';
    u.close();
    ASSERT_EQ(run("diagnose kkt --manifest " + m + " --lambda 10 --beta " + (kWork / "beta.csv").string() +
                  " --u " + (kWork / "u.csv").string()),
              0);
    EXPECT_LE(stdout_json()["kkt_residual"].get<double>(), 1e-6);
}

TEST_F(Cli, ExperimentIsDeterministic)
{
    const Json config{
        {"scenario", {{"name", "fig1"}, {"p", 40}}},
        {"methods", {"lasso", "lmm_convex_3"}},
        {"s0", {1, 2}},
        {"replicates", 2},
        {"master_seed", 5},
        {"grid", {{"lambda_count", 10}, {"capital_lambdas", {1.0}}}},
    };
    std::ofstream(kWork / "exp.json") << config.dump();
    const std::string base = "experiment --config " + (kWork / "exp.json").string() + " --out ";
    ASSERT_EQ(run(base + (kWork / "e1").string()), 0);
    ASSERT_EQ(run(base + (kWork / "e2").string() + " --jobs 2"), 0);
    const std::string summary = slurp(kWork / "e1" / "summary.csv");
    EXPECT_EQ(summary, slurp(kWork / "e2" / "summary.csv"));
    EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 5);
    const std::string records = slurp(kWork / "e1" / "records.jsonl");
    EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 8);
    EXPECT_TRUE(fs::exists(kWork / "e1" / "report.json"));

    ASSERT_EQ(run(base + (kWork / "e3").string(), "LMM_SELECT_SEED=6"), 0);
    const Json report = Json::parse(slurp(kWork / "e3" / "report.json"));
    EXPECT_EQ(report["config"]["master_seed"].get<int>(), 6);
}

TEST_F(Cli, ConsistencyCurve)
{
    ASSERT_EQ(run("consistency-curve --scenario fig1 --s0 2 --n-list 60,120 --replicates 2 --lambda-count 10 "
                  "--capital-lambdas 1"),
              0);
    const std::string csv = slurp(kWork / "stdout");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,replicates,successes,rate");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
