#include "lmmselect/error.hpp"
#include "lmmselect/experiment.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace lmmselect;

namespace {

ExperimentConfig small_config()
{
    ExperimentConfig config;
    config.scenario = default_spec(Scenario::Fig1);
    config.scenario.p = 60;
    config.methods = {Method::Lasso, Method::LmmConvex1, Method::HdlmmNaive};
    config.s0_min = 1;
    config.s0_max = 3;
    config.replicates = 3;
    config.options.grid.lambda_count = 15;
    config.options.grid.capital_lambdas = {0.1, 10.0};
    config.master_seed = 12;
    return config;
}

std::string summary_csv(const ExperimentReport& report)
{
    std::ostringstream out;
    write_summary_csv(out, report.summary);
    return out.str();
}

} // namespace

TEST(Experiment, EmptySupportIsRecoveredAtStrongPenalty)
{
    ExperimentConfig config;
    config.scenario = default_spec(Scenario::Fig1);
    config.methods = {Method::Lasso};
    config.s0_min = config.s0_max = 0;
    config.replicates = 1;
    const ExperimentReport report = run_experiment(config);
    ASSERT_EQ(report.summary.size(), 1u);
    EXPECT_EQ(report.summary[0].successes, 1);
    EXPECT_EQ(report.summary[0].replicates, 1);
}

TEST(Experiment, RecordsAndSummaryAgree)
{
    const ExperimentConfig config = small_config();
    std::vector<std::pair<Index, Index>> order;
    const ExperimentReport report = run_experiment(config, [&](const std::vector<ReplicateRecord>& batch) {
        ASSERT_EQ(batch.size(), 3u);
        order.emplace_back(batch[0].s0, batch[0].replicate);
    });
    EXPECT_EQ(report.records.size(), 3u * 3u * 3u);
    ASSERT_EQ(order.size(), 9u);
    for (std::size_t i = 0; i < order.size(); ++i)
        EXPECT_EQ(order[i], (std::pair<Index, Index>{Index(1 + i / 3), Index(i % 3)}));

    ASSERT_EQ(report.summary.size(), 9u);
    EXPECT_EQ(report.summary[0].method, "lasso");
    EXPECT_EQ(report.summary[3].method, "lmm_convex_1");
    for (const auto& row : report.summary) {
        Index successes = 0;
        for (const auto& rec : report.records)
            if (rec.method == row.method && rec.s0 == row.s0)
                successes += rec.success;
        EXPECT_EQ(row.successes, successes);
        EXPECT_EQ(row.replicates, 3);
        EXPECT_LE(row.successes, row.replicates);
    }
    for (const auto& rec : report.records) {
        EXPECT_FALSE(rec.error.has_value());
        EXPECT_EQ(Index(rec.true_support.size()), rec.s0);
        if (rec.success)
            EXPECT_EQ(rec.closest_support, rec.true_support);
    }
}

TEST(Experiment, DeterministicAcrossRunsAndThreads)
{
    ExperimentConfig config = small_config();
    const std::string first = summary_csv(run_experiment(config));
    EXPECT_EQ(first, summary_csv(run_experiment(config)));
    config.jobs = 3;
    EXPECT_EQ(first, summary_csv(run_experiment(config)));
    EXPECT_EQ(first.substr(0, first.find('\n')), "method,s0,successes,replicates");
}

TEST(Experiment, MethodsAllRun)
{
    ExperimentConfig config;
    config.scenario = default_spec(Scenario::FigD2, 5);
    config.scenario.p = 40;
    config.methods = all_methods();
    config.s0_min = config.s0_max = 2;
    config.replicates = 1;
    config.options.grid.lambda_count = 8;
    config.options.grid.capital_lambdas = {1.0};
    config.options.per_group_values = {0.1, 10.0};
    const ExperimentReport report = run_experiment(config);
    ASSERT_EQ(report.records.size(), all_methods().size());
    for (const auto& rec : report.records) {
        EXPECT_FALSE(rec.error.has_value()) << rec.method << ": " << rec.error.value_or("");
        EXPECT_GT(rec.grid_points, 0u) << rec.method;
    }
    // lmm_convex_2 searches 2^2 per-group combinations.
    EXPECT_EQ(report.records[3].method, "lmm_convex_2");
    EXPECT_EQ(report.records[3].grid_points, 4u * 8u);
}

// One membership group makes Z a constant column, which correlation weights reject.
TEST(Experiment, MethodFailuresAreRecordedAndTheRunContinues)
{
    ExperimentConfig config;
    config.scenario = default_spec(Scenario::Fig2);
    config.scenario.p = 30;
    config.scenario.observation_groups = 1;
    config.methods = {Method::LmmConvex3, Method::Lasso};
    config.s0_min = config.s0_max = 1;
    config.replicates = 2;
    config.options.grid.lambda_count = 10;
    const ExperimentReport report = run_experiment(config);
    ASSERT_EQ(report.records.size(), 4u);
    for (const auto& rec : report.records) {
        if (rec.method == "lmm_convex_3") {
            ASSERT_TRUE(rec.error.has_value());
            EXPECT_NE(rec.error->find("zero variance"), std::string::npos) << *rec.error;
            EXPECT_FALSE(rec.success);
        } else {
            EXPECT_FALSE(rec.error.has_value());
        }
    }
    EXPECT_EQ(report.summary[0].failures, 2);
    EXPECT_EQ(report.summary[1].failures, 0);
}

TEST(ExperimentConfig, JsonRoundTrip)
{
    const ExperimentConfig config = small_config();
    const ExperimentConfig back = experiment_from_json(to_json(config));
    EXPECT_EQ(back.methods, config.methods);
    EXPECT_EQ(back.s0_min, 1);
    EXPECT_EQ(back.s0_max, 3);
    EXPECT_EQ(back.replicates, 3);
    EXPECT_EQ(back.master_seed, 12u);
    EXPECT_EQ(back.scenario.p, 60);
    EXPECT_EQ(back.options.grid.capital_lambdas, config.options.grid.capital_lambdas);
    EXPECT_EQ(back.options.grid.lambda_count, 15u);
}

TEST(ExperimentConfig, SchemaErrorsNameTheField)
{
    Json j = to_json(small_config());
    auto message = [](const Json& config) {
        try {
            experiment_from_json(config);
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::Schema);
            return std::string(e.what());
        }
        ADD_FAILURE();
        return std::string();
    };
    Json unknown = j;
    unknown["replicas"] = 3;
    EXPECT_NE(message(unknown).find("replicas"), std::string::npos);
    Json bad_method = j;
    bad_method["methods"] = {"lasso", "ridge"};
    EXPECT_NE(message(bad_method).find("methods"), std::string::npos);
    Json bad_grid = j;
    bad_grid["grid"]["lambda_count"] = -4;
    EXPECT_NE(message(bad_grid).find("grid.lambda_count"), std::string::npos);
    Json no_methods = j;
    no_methods["methods"] = Json::array();
    message(no_methods);
    Json no_scenario = j;
    no_scenario.erase("scenario");
    EXPECT_NE(message(no_scenario).find("scenario"), std::string::npos);
}
