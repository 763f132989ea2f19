#pragma once

#include "lmmselect/io.hpp"
#include "lmmselect/methods.hpp"
#include "lmmselect/simgen.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lmmselect {

struct ExperimentConfig {
    ScenarioSpec scenario;
    std::vector<Method> methods;
    Index s0_min = 1;
    Index s0_max = 5;
    Index replicates = 20;
    MethodOptions options;
    /// Support cap applied to every path; by default n / 2 of the scenario.
    std::optional<Index> max_support;
    bool cap_support = true;
    std::uint64_t master_seed = 0;
    unsigned jobs = 1;
};

/// Parses the JSON config format; unknown fields throw Schema naming the field.
ExperimentConfig experiment_from_json(const Json& j);
Json to_json(const ExperimentConfig& config);
void validate(const ExperimentConfig& config);

struct ReplicateRecord {
    std::string method;
    Index s0 = 0;
    Index replicate = 0;       // index within the s0 batch
    std::uint32_t stream = 0;  // replicate index passed to the generator
    std::uint64_t master_seed = 0;
    bool success = false;
    std::vector<Index> true_support;
    std::vector<Index> closest_support; // fit closest to the truth
    std::optional<GridPoint> closest_point;
    std::size_t grid_points = 0;
    std::size_t skipped_points = 0;
    std::optional<std::string> error;
    double seconds = 0.0;
};

struct SummaryRow {
    std::string method;
    Index s0 = 0;
    Index successes = 0;
    Index replicates = 0;
    Index failures = 0;
};

struct ExperimentReport {
    std::vector<ReplicateRecord> records; // ordered by (s0, replicate, method)
    std::vector<SummaryRow> summary;      // ordered by (method in config order, s0)
};

/// Called once per (s0, replicate) instance, in canonical order, as soon as
/// all earlier instances are done.
using RecordSink = std::function<void(const std::vector<ReplicateRecord>&)>;

ExperimentReport run_experiment(const ExperimentConfig& config, const RecordSink& sink = {});

std::vector<SummaryRow> summarize(const std::vector<ReplicateRecord>& records,
                                  const std::vector<Method>& methods);

Json to_json(const ReplicateRecord& record);
/// Columns method, s0, successes, replicates.
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary);

} // namespace lmmselect
