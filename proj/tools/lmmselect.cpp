#include "lmmselect/diagnostics.hpp"
#include "lmmselect/error.hpp"
#include "lmmselect/experiment.hpp"
#include "lmmselect/io.hpp"
#include "lmmselect/methods.hpp"
#include "lmmselect/reduction.hpp"
#include "lmmselect/simgen.hpp"
#include "lmmselect/solver.hpp"
#include "lmmselect/weights.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

using namespace lmmselect;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

int exit_code_for(ErrorCategory category)
{
    switch (category) {
    case ErrorCategory::Validation: return kExitValidation;
    case ErrorCategory::Numerical: return kExitNumerical;
    case ErrorCategory::Io: return kExitIo;
    }
    return kExitValidation;
}

std::optional<std::uint64_t> env_seed()
{
    const char* text = std::getenv("LMM_SELECT_SEED");
    if (!text || !*text)
        return std::nullopt;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text, &end, 10);
    if (*end != '\0' || text[0] == '-')
        throw Error(ErrorCode::InvalidArgument, "LMM_SELECT_SEED must be a nonnegative integer");
    return v;
}

// Writes to `path`, or stdout for "" / "-".
void emit(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    out << text;
    if (!out)
        throw Error(ErrorCode::Io, "failed writing '" + path + "'");
}

Json sparse_beta(const VectorXd& beta)
{
    Json out = Json::array();
    for (Index j = 0; j < beta.size(); ++j)
        if (beta[j] != 0.0)
            out.push_back({{"index", j}, {"value", beta[j]}});
    return out;
}

Json fit_json(const FitResult& fit)
{
    return Json{
        {"lambda", fit.lambda},
        {"capital_lambda", fit.capital_lambda},
        {"beta", sparse_beta(fit.beta)},
        {"p", fit.beta.size()},
        {"u", std::vector<double>(fit.u.data(), fit.u.data() + fit.u.size())},
        {"support", fit.support},
        {"objective", fit.objective},
        {"kkt_residual", fit.kkt_residual},
        {"iterations", fit.iterations},
        {"converged", fit.converged},
    };
}

std::optional<MatrixXd> covariance_of(const StoredInstance& inst)
{
    return inst.covariance;
}

// ---------------------------------------------------------------------------
// Scenario options shared by generate / consistency-curve.

struct ScenarioFlags {
    std::string config;
    std::string name = "fig1";
    int covariance_case = 1;
    std::optional<Index> n, p, s0, groups;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> replicate;
    std::optional<double> noise, effect;
    std::string scaling;

    void add(CLI::App* app)
    {
        app->add_option("--config", config, "JSON file with a scenario object (flags override it)");
        app->add_option("--scenario", name, "fig1, fig2, figD2, fig3, fig4 or fig5");
        app->add_option("--case", covariance_case, "figD2 covariance case (1..5)");
        app->add_option("--n", n, "observations");
        app->add_option("--p", p, "fixed-effect columns");
        app->add_option("--s0", s0, "true support size");
        app->add_option("--groups", groups, "observation groups of block designs");
        app->add_option("--noise", noise, "noise variance");
        app->add_option("--effect", effect, "true coefficient value");
        app->add_option("--scaling", scaling, "standardize or unit_norm");
        app->add_option("--seed", seed, "master seed (overrides LMM_SELECT_SEED)");
        app->add_option("--replicate", replicate, "replicate index");
    }

    ScenarioSpec resolve(CLI::App* app) const
    {
        ScenarioSpec spec;
        if (!config.empty()) {
            const Json j = read_json_file(config);
            Json scenario = j.contains("scenario") ? j["scenario"] : j;
            if (app->count("--scenario"))
                scenario["name"] = name;
            if (app->count("--case"))
                scenario["covariance_case"] = covariance_case;
            spec = scenario_from_json(scenario);
        } else {
            spec = default_spec(parse_scenario(name), covariance_case);
        }
        if (n) spec.n = *n;
        if (p) spec.p = *p;
        if (s0) spec.s0 = *s0;
        if (groups) spec.observation_groups = *groups;
        if (noise) spec.noise_variance = *noise;
        if (effect) spec.effect = *effect;
        if (!scaling.empty()) {
            if (scaling == "standardize")
                spec.scaling = DesignScaling::Standardize;
            else if (scaling == "unit_norm")
                spec.scaling = DesignScaling::UnitNorm;
            else
                throw Error(ErrorCode::InvalidArgument, "--scaling must be standardize or unit_norm");
        }
        if (auto e = env_seed())
            spec.master_seed = *e;
        if (seed)
            spec.master_seed = *seed;
        if (replicate)
            spec.replicate = *replicate;
        validate(spec);
        return spec;
    }
};

// ---------------------------------------------------------------------------
// Grid / solver options shared by path / experiment / consistency-curve.

struct GridFlags {
    std::optional<std::size_t> lambda_count;
    std::optional<double> min_ratio;
    std::vector<double> lambdas;
    std::vector<double> capital_lambdas;
    std::vector<double> per_group;
    std::optional<Index> max_support;
    bool no_cap = false;
    std::optional<double> tol, kkt_tol, pca_threshold;

    void add(CLI::App* app, bool cap_flags)
    {
        app->add_option("--lambda-count", lambda_count, "lambda grid size");
        app->add_option("--min-ratio", min_ratio, "smallest lambda as a fraction of lambda_max");
        app->add_option("--lambdas", lambdas, "explicit descending lambda grid")->delimiter(',');
        app->add_option("--capital-lambdas", capital_lambdas, "ridge multipliers")->delimiter(',');
        app->add_option("--per-group", per_group, "per-group ridge values (lmm_convex_2)")->delimiter(',');
        app->add_option("--max-support", max_support, "stop a lambda column once the support exceeds this");
        if (cap_flags)
            app->add_flag("--no-support-cap", no_cap, "solve the full grid");
        app->add_option("--tol", tol, "coordinate-descent tolerance");
        app->add_option("--kkt-tol", kkt_tol, "KKT tolerance");
        app->add_option("--pca-threshold", pca_threshold, "explained-variance threshold (dr_two_step)");
    }

    void apply(MethodOptions& options) const
    {
        if (lambda_count) options.grid.lambda_count = *lambda_count;
        if (min_ratio) options.grid.lambda_min_ratio = *min_ratio;
        if (!lambdas.empty()) options.grid.lambdas = lambdas;
        if (!capital_lambdas.empty()) options.grid.capital_lambdas = capital_lambdas;
        if (!per_group.empty()) options.per_group_values = per_group;
        if (max_support) options.grid.max_support = *max_support;
        if (tol) options.solver.tol = *tol;
        if (kkt_tol) options.solver.kkt_tol = *kkt_tol;
        if (pca_threshold) options.pca_threshold = *pca_threshold;
    }
};

// ---------------------------------------------------------------------------

int cmd_generate(const ScenarioSpec& spec, const std::string& out_dir)
{
    const GeneratedInstance inst = generate(spec);
    const fs::path manifest = write_instance(stored_from(inst, spec), out_dir);
    std::cout << manifest.string() << '\n';
    return kExitOk;
}

int cmd_fit(const std::string& manifest, const std::string& method_text, double lambda,
            double capital_lambda, const MethodOptions& options, const std::string& out)
{
    const StoredInstance inst = load_instance(manifest);
    const Method method = parse_method(method_text);
    const FitResult fit = fit_method(method, inst.problem, lambda, capital_lambda, options, covariance_of(inst));
    Json j = fit_json(fit);
    j["method"] = method_name(method);
    emit(out, j.dump(2) + "\n");
    return fit.converged ? kExitOk : kExitNumerical;
}

int cmd_path(const std::string& manifest, const std::string& method_text, const MethodOptions& options,
             const std::string& out)
{
    const StoredInstance inst = load_instance(manifest);
    const Method method = parse_method(method_text);
    const PathResult path = run_method(method, inst.problem, options, covariance_of(inst));

    std::ostringstream csv;
    csv << "lambda,capital_lambda,support_size,objective,kkt_residual,converged,support,error\n";
    bool all_converged = true;
    for (std::size_t i = 0; i < path.size(); ++i) {
        csv << format_double(path.grid[i].lambda) << ',' << format_double(path.grid[i].capital_lambda) << ',';
        if (!path.ok(i)) {
            csv << ",,,,," << '"' << *path.errors[i] << '"' << '\n';
            continue;
        }
        const FitResult& fit = path.fits[i];
        all_converged = all_converged && fit.converged;
        csv << fit.support.size() << ',' << format_double(fit.objective) << ','
            << format_double(fit.kkt_residual) << ',' << (fit.converged ? 1 : 0) << ',';
        for (std::size_t k = 0; k < fit.support.size(); ++k)
            csv << (k ? " " : "") << fit.support[k];
        csv << ",\n";
    }
    emit(out, csv.str());
    if (!inst.true_support.empty())
        std::cerr << "exact recovery: " << (exact_recovery(path, inst.true_support) ? "yes" : "no") << '\n';
    if (path.skipped_points)
        std::cerr << "grid points skipped by the support cap: " << path.skipped_points << '\n';
    return all_converged ? kExitOk : kExitNumerical;
}

int cmd_weights(const std::string& manifest, const std::string& kind, const std::string& out)
{
    const StoredInstance inst = load_instance(manifest);
    Json j;
    j["kind"] = kind;
    if (kind == "correlation") {
        const CorrelationSummary summary = correlation_summary(inst.problem);
        j["theta"] = summary.theta_per_group;
        j["weights"] = correlation_weights(inst.problem).weights;
        j["group_sizes"] = inst.problem.groups.sizes();
    } else if (kind == "covariance") {
        if (!inst.covariance)
            throw Error(ErrorCode::InvalidArgument, "manifest has no covariance matrix");
        const FullMatrixWeight w = weights_from_covariance(*inst.covariance);
        Json rows = Json::array();
        for (Index i = 0; i < w.w.rows(); ++i) {
            const VectorXd r = w.w.row(i);
            rows.push_back(std::vector<double>(r.data(), r.data() + r.size()));
        }
        j["w"] = rows;
    } else {
        throw Error(ErrorCode::InvalidArgument, "--kind must be correlation or covariance");
    }
    emit(out, j.dump(2) + "\n");
    return kExitOk;
}

int cmd_ircon(const std::string& manifest, const std::vector<Index>& support_flag, double capital_lambda,
              const std::string& out)
{
    const StoredInstance inst = load_instance(manifest);
    const std::vector<Index> support = support_flag.empty() ? inst.true_support : support_flag;
    std::optional<VectorXd> signs;
    if (support_flag.empty() && inst.effect < 0.0)
        signs = VectorXd::Constant(static_cast<Index>(support.size()), -1.0);
    const ConsistencyBlocks blocks = assemble_blocks(inst.problem, support, capital_lambda, signs);
    const double value = irrepresentable_value(blocks);
    Json j{
        {"value", value},
        {"margin", 1.0 - value},
        {"holds", value < 1.0},
        {"psi_condition", blocks.psi_condition},
        {"support", blocks.support},
        {"capital_lambda", capital_lambda},
    };
    emit(out, j.dump(2) + "\n");
    return kExitOk;
}

int cmd_kkt(const std::string& manifest, const std::string& method_text, const std::string& beta_file,
            const std::string& u_file, double lambda, double capital_lambda, const MethodOptions& options,
            const std::string& out)
{
    const StoredInstance inst = load_instance(manifest);
    const Method method = parse_method(method_text);
    const MatrixXd beta = read_csv_matrix(beta_file);
    if (beta.cols() != 1)
        throw Error(ErrorCode::Parse, beta_file + ": expected one column");
    VectorXd u(inst.problem.q());
    u.setZero();
    if (!u_file.empty()) {
        const MatrixXd um = read_csv_matrix(u_file);
        if (um.cols() != 1)
            throw Error(ErrorCode::Parse, u_file + ": expected one column");
        u = um.col(0);
    }
    const WeightSpec weights = method_weights(method, inst.problem, options, covariance_of(inst));
    const double residual = kkt_residual(inst.problem, weights, lambda, capital_lambda, beta.col(0), u);
    Json j{
        {"kkt_residual", residual},
        {"within_tolerance", residual <= options.solver.kkt_tol},
        {"kkt_tol", options.solver.kkt_tol},
    };
    emit(out, j.dump(2) + "\n");
    return residual <= options.solver.kkt_tol ? kExitOk : kExitNumerical;
}

int cmd_reduce(const std::string& manifest, double threshold, const std::string& out_dir)
{
    const StoredInstance inst = load_instance(manifest);
    const PcaReduction red = pca_reduce(inst.problem, threshold);
    StoredInstance reduced;
    reduced.problem = red.problem;
    reduced.true_support = inst.true_support;
    reduced.effect = inst.effect;
    const fs::path path = write_instance(reduced, out_dir);
    for (std::size_t g = 0; g < red.design.loadings.size(); ++g)
        write_csv_matrix(fs::path(out_dir) / ("loadings_" + std::to_string(g) + ".csv"), red.design.loadings[g]);
    Json j{
        {"manifest", path.string()},
        {"threshold", threshold},
        {"original_group_sizes", inst.problem.groups.sizes()},
        {"new_group_sizes", red.design.new_group_sizes},
        {"explained", red.design.explained},
    };
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

struct ExperimentFlags {
    std::string config;
    std::string out_dir;
    std::vector<std::string> methods;
    std::optional<Index> s0_min, s0_max, replicates;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
};

int cmd_experiment(CLI::App* app, const ExperimentFlags& flags, const ScenarioFlags& scenario_flags,
                   const GridFlags& grid_flags)
{
    ExperimentConfig config;
    if (!flags.config.empty()) {
        config = experiment_from_json(read_json_file(flags.config));
        if (app->count("--scenario") || app->count("--n") || app->count("--p") || app->count("--case"))
            config.scenario = scenario_flags.resolve(app);
    } else {
        config.scenario = scenario_flags.resolve(app);
        config.methods = {Method::LmmConvex1, Method::LmmConvex3};
    }
    if (!flags.methods.empty()) {
        config.methods.clear();
        for (const auto& m : flags.methods)
            config.methods.push_back(parse_method(m));
    }
    if (flags.s0_min) config.s0_min = *flags.s0_min;
    if (flags.s0_max) config.s0_max = *flags.s0_max;
    if (flags.replicates) config.replicates = *flags.replicates;
    if (auto e = env_seed()) config.master_seed = *e;
    if (flags.seed) config.master_seed = *flags.seed;
    if (flags.jobs) config.jobs = *flags.jobs;
    grid_flags.apply(config.options);
    if (grid_flags.max_support) config.max_support = grid_flags.max_support;
    if (grid_flags.no_cap) config.cap_support = false;
    validate(config);

    std::error_code ec;
    fs::create_directories(flags.out_dir, ec);
    if (ec)
        throw Error(ErrorCode::Io, "cannot create '" + flags.out_dir + "': " + ec.message());
    const fs::path dir(flags.out_dir);
    std::ofstream records(dir / "records.jsonl", std::ios::binary);
    if (!records)
        throw Error(ErrorCode::Io, "cannot write records.jsonl");

    const ExperimentReport report = run_experiment(config, [&](const std::vector<ReplicateRecord>& batch) {
        for (const auto& rec : batch)
            records << to_json(rec).dump() << '\n';
        records.flush();
    });

    std::ostringstream summary;
    write_summary_csv(summary, report.summary);
    emit((dir / "summary.csv").string(), summary.str());

    Json meta{
        {"config", to_json(config)},
        {"records", report.records.size()},
        {"environment",
         {{"compiler", __VERSION__},
          {"cxx_standard", __cplusplus},
          {"hardware_threads", std::thread::hardware_concurrency()}}},
    };
    emit((dir / "report.json").string(), meta.dump(2) + "\n");
    std::cout << summary.str();

    bool failures = false;
    for (const auto& row : report.summary)
        failures = failures || row.failures > 0;
    return failures ? kExitNumerical : kExitOk;
}

int cmd_curve(CLI::App* app, const ScenarioFlags& scenario_flags, const GridFlags& grid_flags,
              const std::vector<Index>& n_list, Index replicates, const std::string& method_text,
              unsigned jobs, const std::string& out)
{
    const ScenarioSpec spec = scenario_flags.resolve(app);
    CurveOptions options;
    options.method = parse_method(method_text);
    options.jobs = jobs;
    grid_flags.apply(options.method_options);
    const std::vector<CurvePoint> curve = sign_consistency_curve(spec, n_list, replicates, options);
    std::ostringstream csv;
    write_curve_csv(csv, curve);
    emit(out, csv.str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Variable selection in linear mixed models"};
    app.require_subcommand(1);

    ScenarioFlags gen_scenario;
    std::string gen_out;
    auto* gen = app.add_subcommand("generate", "Simulate a scenario instance to CSV + manifest.json");
    gen_scenario.add(gen);
    gen->add_option("--out", gen_out, "output directory")->required();

    std::string manifest, method = "lmm_convex_1", out;
    double lambda = 1.0, capital_lambda = 1.0;

    GridFlags fit_grid;
    auto* fit = app.add_subcommand("fit", "Fit one (lambda, capital lambda) point");
    fit->add_option("--manifest", manifest, "instance manifest")->required();
    fit->add_option("--method", method, "method name");
    fit->add_option("--lambda", lambda, "l1 penalty")->required();
    fit->add_option("--capital-lambda", capital_lambda, "ridge multiplier");
    fit->add_option("--out", out, "output file (default stdout)");
    fit_grid.add(fit, false);

    GridFlags path_grid;
    auto* path = app.add_subcommand("path", "Regularization path as CSV");
    path->add_option("--manifest", manifest, "instance manifest")->required();
    path->add_option("--method", method, "method name");
    path->add_option("--out", out, "output file (default stdout)");
    path_grid.add(path, false);

    std::string kind = "correlation";
    auto* weights = app.add_subcommand("weights", "Per-group correlation weights or D^{-1}");
    weights->add_option("--manifest", manifest, "instance manifest")->required();
    weights->add_option("--kind", kind, "correlation or covariance");
    weights->add_option("--out", out, "output file (default stdout)");

    auto* diagnose = app.add_subcommand("diagnose", "Irrepresentable value or KKT check");
    diagnose->require_subcommand(1);
    std::vector<Index> support;
    auto* ircon = diagnose->add_subcommand("ircon", "||Delta Psi^-1 sign||_inf for a support");
    ircon->add_option("--manifest", manifest, "instance manifest")->required();
    ircon->add_option("--support", support, "support indices (default: the manifest's)")->delimiter(',');
    ircon->add_option("--capital-lambda", capital_lambda, "ridge multiplier");
    ircon->add_option("--out", out, "output file (default stdout)");
    std::string beta_file, u_file;
    GridFlags kkt_grid;
    auto* kkt = diagnose->add_subcommand("kkt", "Stationarity residual of a given (beta, u)");
    kkt->add_option("--manifest", manifest, "instance manifest")->required();
    kkt->add_option("--method", method, "lmm_convex_1, lmm_convex_2, lmm_convex_3 or lmm_convex_W");
    kkt->add_option("--beta", beta_file, "one-column CSV")->required();
    kkt->add_option("--u", u_file, "one-column CSV (default zeros)");
    kkt->add_option("--lambda", lambda, "l1 penalty")->required();
    kkt->add_option("--capital-lambda", capital_lambda, "ridge multiplier");
    kkt->add_option("--out", out, "output file (default stdout)");
    kkt_grid.add(kkt, false);

    double threshold = 0.95;
    std::string reduce_out;
    auto* reduce = app.add_subcommand("reduce", "Per-group PCA of Z");
    reduce->add_option("--manifest", manifest, "instance manifest")->required();
    reduce->add_option("--threshold", threshold, "explained-variance threshold");
    reduce->add_option("--out", reduce_out, "output directory")->required();

    ExperimentFlags exp_flags;
    ScenarioFlags exp_scenario;
    GridFlags exp_grid;
    auto* experiment = app.add_subcommand("experiment", "Monte-Carlo success counts per method and s0");
    experiment->add_option("--config", exp_flags.config, "experiment JSON config");
    experiment->add_option("--scenario", exp_scenario.name, "scenario name");
    experiment->add_option("--case", exp_scenario.covariance_case, "figD2 covariance case");
    experiment->add_option("--n", exp_scenario.n, "observations");
    experiment->add_option("--p", exp_scenario.p, "fixed-effect columns");
    experiment->add_option("--methods", exp_flags.methods, "method names")->delimiter(',');
    experiment->add_option("--s0-min", exp_flags.s0_min, "smallest support size");
    experiment->add_option("--s0-max", exp_flags.s0_max, "largest support size");
    experiment->add_option("--replicates", exp_flags.replicates, "replicates per s0");
    experiment->add_option("--seed", exp_flags.seed, "master seed (overrides LMM_SELECT_SEED)");
    experiment->add_option("--jobs", exp_flags.jobs, "worker threads");
    experiment->add_option("--out", exp_flags.out_dir, "output directory")->required();
    exp_grid.add(experiment, true);

    ScenarioFlags curve_scenario;
    GridFlags curve_grid;
    std::vector<Index> n_list{100, 200, 400};
    Index replicates = 30;
    unsigned jobs = 1;
    auto* curve = app.add_subcommand("consistency-curve", "Exact sign-recovery rate as n grows");
    curve_scenario.add(curve);
    curve->add_option("--n-list", n_list, "sample sizes")->delimiter(',');
    curve->add_option("--replicates", replicates, "replicates per n");
    curve->add_option("--method", method, "method name");
    curve->add_option("--jobs", jobs, "worker threads");
    curve->add_option("--out", out, "output CSV (default stdout)");
    curve_grid.add(curve, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*gen)
            return cmd_generate(gen_scenario.resolve(gen), gen_out);
        if (*fit) {
            MethodOptions options;
            fit_grid.apply(options);
            return cmd_fit(manifest, method, lambda, capital_lambda, options, out);
        }
        if (*path) {
            MethodOptions options;
            path_grid.apply(options);
            return cmd_path(manifest, method, options, out);
        }
        if (*weights)
            return cmd_weights(manifest, kind, out);
        if (*ircon)
            return cmd_ircon(manifest, support, capital_lambda, out);
        if (*kkt) {
            MethodOptions options;
            kkt_grid.apply(options);
            return cmd_kkt(manifest, method, beta_file, u_file, lambda, capital_lambda, options, out);
        }
        if (*reduce)
            return cmd_reduce(manifest, threshold, reduce_out);
        if (*experiment)
            return cmd_experiment(experiment, exp_flags, exp_scenario, exp_grid);
        if (*curve)
            return cmd_curve(curve, curve_scenario, curve_grid, n_list, replicates, method, jobs, out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(category_of(e.code()));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitOk;
}
