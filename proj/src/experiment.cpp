#include "lmmselect/experiment.hpp"

#include "lmmselect/error.hpp"
#include "lmmselect/parallel.hpp"

#include <chrono>
#include <map>
#include <mutex>
#include <ostream>

namespace lmmselect {

namespace {

[[noreturn]] void schema_error(const std::string& field, const std::string& what)
{
    throw Error(ErrorCode::Schema, "field '" + field + "': " + what);
}

Index count_field(const Json& j, const std::string& field)
{
    if (!j.is_number_integer() || j.get<long long>() < 0)
        schema_error(field, "expected a nonnegative integer");
    return static_cast<Index>(j.get<long long>());
}

double number_field(const Json& j, const std::string& field)
{
    if (!j.is_number())
        schema_error(field, "expected a number");
    return j.get<double>();
}

std::vector<double> number_list(const Json& j, const std::string& field)
{
    if (!j.is_array())
        schema_error(field, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j)
        out.push_back(number_field(v, field));
    return out;
}

void read_grid(const Json& j, ExperimentConfig& config)
{
    auto& grid = config.options.grid;
    for (const auto& [key, value] : j.items()) {
        const std::string field = "grid." + key;
        if (key == "lambda_count")
            grid.lambda_count = static_cast<std::size_t>(count_field(value, field));
        else if (key == "lambda_min_ratio")
            grid.lambda_min_ratio = number_field(value, field);
        else if (key == "lambdas")
            grid.lambdas = number_list(value, field);
        else if (key == "capital_lambdas")
            grid.capital_lambdas = number_list(value, field);
        else if (key == "per_group_values")
            config.options.per_group_values = number_list(value, field);
        else if (key == "max_support") {
            if (value.is_null())
                config.cap_support = false;
            else
                config.max_support = count_field(value, field);
        } else
            schema_error(field, "unknown field");
    }
}

void read_solver(const Json& j, SolverConfig& solver)
{
    for (const auto& [key, value] : j.items()) {
        const std::string field = "solver." + key;
        if (key == "tol")
            solver.tol = number_field(value, field);
        else if (key == "kkt_tol")
            solver.kkt_tol = number_field(value, field);
        else if (key == "max_iter")
            solver.max_iter = static_cast<long>(count_field(value, field));
        else
            schema_error(field, "unknown field");
    }
}

std::size_t support_cap(const ExperimentConfig& config, Index n)
{
    if (!config.cap_support)
        return 0;
    return static_cast<std::size_t>(config.max_support.value_or(n / 2));
}

} // namespace

ExperimentConfig experiment_from_json(const Json& j)
{
    if (!j.is_object())
        schema_error("config", "expected an object");
    ExperimentConfig config;
    config.scenario = scenario_from_json(require_field(j, "scenario", ""));
    for (const auto& [key, value] : j.items()) {
        if (key == "scenario")
            continue;
        if (key == "methods") {
            if (!value.is_array())
                schema_error(key, "expected an array of method names");
            for (const auto& m : value) {
                if (!m.is_string())
                    schema_error(key, "expected an array of method names");
                try {
                    config.methods.push_back(parse_method(m.get<std::string>()));
                } catch (const Error& e) {
                    schema_error(key, e.what());
                }
            }
        } else if (key == "s0") {
            if (value.is_number_integer()) {
                config.s0_min = config.s0_max = count_field(value, key);
            } else if (value.is_array() && value.size() == 2) {
                config.s0_min = count_field(value[0], "s0[0]");
                config.s0_max = count_field(value[1], "s0[1]");
            } else {
                schema_error(key, "expected an integer or [min, max]");
            }
        } else if (key == "replicates") {
            config.replicates = count_field(value, key);
        } else if (key == "master_seed") {
            if (!value.is_number_unsigned())
                schema_error(key, "expected a nonnegative integer");
            config.master_seed = value.get<std::uint64_t>();
        } else if (key == "jobs") {
            config.jobs = static_cast<unsigned>(count_field(value, key));
        } else if (key == "pca_threshold") {
            config.options.pca_threshold = number_field(value, key);
        } else if (key == "grid") {
            read_grid(value, config);
        } else if (key == "solver") {
            read_solver(value, config.options.solver);
        } else {
            schema_error(key, "unknown field");
        }
    }
    try {
        validate(config);
    } catch (const Error& e) {
        throw Error(ErrorCode::Schema, std::string("config: ") + e.what());
    }
    return config;
}

Json to_json(const ExperimentConfig& config)
{
    Json methods = Json::array();
    for (Method m : config.methods)
        methods.push_back(method_name(m));
    const auto& grid = config.options.grid;
    Json grid_json{
        {"lambda_count", grid.lambda_count},
        {"lambda_min_ratio", grid.lambda_min_ratio},
        {"capital_lambdas", grid.capital_lambdas},
        {"per_group_values", config.options.per_group_values},
    };
    if (!grid.lambdas.empty())
        grid_json["lambdas"] = grid.lambdas;
    if (!config.cap_support)
        grid_json["max_support"] = nullptr;
    else if (config.max_support)
        grid_json["max_support"] = *config.max_support;
    Json scenario = to_json(config.scenario);
    scenario.erase("master_seed");
    scenario.erase("replicate");
    return Json{
        {"scenario", scenario},
        {"methods", methods},
        {"s0", {config.s0_min, config.s0_max}},
        {"replicates", config.replicates},
        {"master_seed", config.master_seed},
        {"jobs", config.jobs},
        {"pca_threshold", config.options.pca_threshold},
        {"grid", grid_json},
        {"solver",
         {{"tol", config.options.solver.tol},
          {"kkt_tol", config.options.solver.kkt_tol},
          {"max_iter", config.options.solver.max_iter}}},
    };
}

void validate(const ExperimentConfig& config)
{
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
    if (config.methods.empty())
        fail("at least one method is required");
    if (config.replicates < 1)
        fail("replicates must be at least 1");
    if (config.s0_min < 0 || config.s0_max < config.s0_min)
        fail("s0 range must satisfy 0 <= min <= max");
    ScenarioSpec spec = config.scenario;
    spec.s0 = config.s0_max;
    validate(spec);
    validate(config.options.solver);
}

ExperimentReport run_experiment(const ExperimentConfig& config, const RecordSink& sink)
{
    validate(config);
    const std::size_t s0_count = static_cast<std::size_t>(config.s0_max - config.s0_min + 1);
    const std::size_t reps = static_cast<std::size_t>(config.replicates);
    const std::size_t tasks = s0_count * reps;

    MethodOptions options = config.options;
    if (const std::size_t cap = support_cap(config, config.scenario.n); cap > 0)
        options.grid.max_support = static_cast<Index>(cap);

    std::vector<std::vector<ReplicateRecord>> results(tasks);
    std::vector<bool> done(tasks, false);
    std::size_t flushed = 0;
    std::mutex flush_mutex;

    parallel_for(tasks, config.jobs, [&](std::size_t task) {
        ScenarioSpec spec = config.scenario;
        spec.s0 = config.s0_min + static_cast<Index>(task / reps);
        spec.master_seed = config.master_seed;
        spec.replicate = static_cast<std::uint32_t>(task);

        std::vector<ReplicateRecord> records;
        std::optional<GeneratedInstance> instance;
        std::optional<std::string> generation_error;
        try {
            instance = generate(spec);
        } catch (const Error& e) {
            generation_error = e.what();
        }
        for (Method method : config.methods) {
            ReplicateRecord rec;
            rec.method = method_name(method);
            rec.s0 = spec.s0;
            rec.replicate = static_cast<Index>(task % reps);
            rec.stream = spec.replicate;
            rec.master_seed = spec.master_seed;
            const auto start = std::chrono::steady_clock::now();
            if (!instance) {
                rec.error = generation_error;
            } else {
                rec.true_support = instance->true_support;
                try {
                    const PathResult path = run_method(method, instance->problem, options, instance->d_matrix);
                    rec.grid_points = path.size();
                    rec.skipped_points = path.skipped_points;
                    rec.success = exact_recovery(path, instance->true_support);
                    if (auto best = closest_fit(path, instance->true_support)) {
                        rec.closest_support = path.fits[*best].support;
                        rec.closest_point = path.grid[*best];
                    }
                } catch (const Error& e) {
                    rec.error = e.what();
                }
            }
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            records.push_back(std::move(rec));
        }

        std::lock_guard lock(flush_mutex);
        results[task] = std::move(records);
        done[task] = true;
        while (flushed < tasks && done[flushed]) {
            if (sink)
                sink(results[flushed]);
            ++flushed;
        }
    });

    ExperimentReport report;
    for (auto& batch : results)
        for (auto& rec : batch)
            report.records.push_back(std::move(rec));
    report.summary = summarize(report.records, config.methods);
    return report;
}

std::vector<SummaryRow> summarize(const std::vector<ReplicateRecord>& records,
                                  const std::vector<Method>& methods)
{
    std::map<std::pair<std::string, Index>, SummaryRow> rows;
    for (const auto& rec : records) {
        auto& row = rows[{rec.method, rec.s0}];
        row.method = rec.method;
        row.s0 = rec.s0;
        row.replicates += 1;
        row.successes += rec.success;
        row.failures += rec.error.has_value();
    }
    std::vector<SummaryRow> out;
    for (Method m : methods) {
        const std::string name = method_name(m);
        for (const auto& [key, row] : rows)
            if (key.first == name)
                out.push_back(row);
    }
    return out;
}

Json to_json(const ReplicateRecord& record)
{
    Json j{
        {"method", record.method},
        {"s0", record.s0},
        {"replicate", record.replicate},
        {"stream", record.stream},
        {"master_seed", record.master_seed},
        {"success", record.success},
        {"true_support", record.true_support},
        {"closest_support", record.closest_support},
        {"grid_points", record.grid_points},
        {"skipped_points", record.skipped_points},
        {"seconds", record.seconds},
    };
    if (record.closest_point)
        j["closest_point"] = {{"lambda", record.closest_point->lambda},
                              {"capital_lambda", record.closest_point->capital_lambda}};
    if (record.error)
        j["error"] = *record.error;
    return j;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary)
{
    out << "method,s0,successes,replicates\n";
    for (const auto& row : summary)
        out << row.method << ',' << row.s0 << ',' << row.successes << ',' << row.replicates << '\n';
}

} // namespace lmmselect
