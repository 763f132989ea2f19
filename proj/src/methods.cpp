#include "lmmselect/methods.hpp"

#include "lmmselect/error.hpp"
#include "lmmselect/reduction.hpp"
#include "lmmselect/transforms.hpp"
#include "lmmselect/weights.hpp"

#include <algorithm>
#include <iterator>

namespace lmmselect {

namespace {

struct NamedMethod {
    Method method;
    const char* name;
};

constexpr NamedMethod kMethodNames[] = {
    {Method::Lasso, "lasso"},
    {Method::HdlmmNaive, "hdlmm_naive"},
    {Method::LmmConvex1, "lmm_convex_1"},
    {Method::LmmConvex2, "lmm_convex_2"},
    {Method::LmmConvex3, "lmm_convex_3"},
    {Method::LmmConvexW, "lmm_convex_W"},
    {Method::LmmLassoRotation, "lmm_lasso_rotation"},
    {Method::DrTwoStep, "dr_two_step"},
};

LmmProblem without_z(MatrixXd x, VectorXd y)
{
    LmmProblem out;
    out.z = MatrixXd(x.rows(), 0);
    out.x = std::move(x);
    out.y = std::move(y);
    return out;
}

// Z is absent, so one capital lambda is enough.
PathResult plain_lasso_path(const LmmProblem& problem, const MethodOptions& options)
{
    GridSpec grid = options.grid;
    grid.capital_lambdas = {1.0};
    return solve_path(problem, IdentityWeight{}, grid, options.solver);
}

void append(PathResult& into, PathResult&& part)
{
    auto move_all = [](auto& dst, auto& src) {
        dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
    };
    move_all(into.grid, part.grid);
    move_all(into.fits, part.fits);
    move_all(into.errors, part.errors);
    move_all(into.lambda_max_per_capital_lambda, part.lambda_max_per_capital_lambda);
    into.skipped_points += part.skipped_points;
}

PathResult per_group_search(const LmmProblem& problem, const MethodOptions& options)
{
    const std::size_t groups = problem.groups.count();
    const std::size_t values = options.per_group_values.size();
    if (values == 0)
        throw Error(ErrorCode::InvalidArgument, "per-group search needs at least one value");
    GridSpec grid = options.grid;
    grid.capital_lambdas = {1.0};

    PathResult out;
    std::vector<std::size_t> digit(groups, 0);
    while (true) {
        PerGroupParams params;
        for (std::size_t g = 0; g < groups; ++g)
            params.lambdas.push_back(options.per_group_values[digit[g]]);
        append(out, solve_path(problem, params, grid, options.solver));

        std::size_t g = 0;
        while (g < groups && ++digit[g] == values)
            digit[g++] = 0;
        if (g == groups)
            break;
    }
    return out;
}

FullMatrixWeight covariance_weight(const MatrixXd& d)
{
    try {
        return weights_from_covariance(d);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotPositiveDefinite)
            throw;
    }
    const MatrixXd inv = pseudoinverse(0.5 * (d + d.transpose()));
    return FullMatrixWeight{0.5 * (inv + inv.transpose())};
}

} // namespace

std::string method_name(Method method)
{
    for (const auto& entry : kMethodNames)
        if (entry.method == method)
            return entry.name;
    return "unknown";
}

Method parse_method(const std::string& name)
{
    for (const auto& entry : kMethodNames)
        if (name == entry.name)
            return entry.method;
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
}

const std::vector<Method>& all_methods()
{
    static const std::vector<Method> methods = [] {
        std::vector<Method> out;
        for (const auto& entry : kMethodNames)
            out.push_back(entry.method);
        return out;
    }();
    return methods;
}

PathResult run_method(Method method, const LmmProblem& problem, const MethodOptions& options,
                      const std::optional<MatrixXd>& covariance)
{
    switch (method) {
    case Method::Lasso:
        return plain_lasso_path(without_z(problem.x, problem.y), options);
    case Method::HdlmmNaive:
        return plain_lasso_path(as_plain_problem(project_out(problem)), options);
    case Method::LmmConvex1:
        return solve_path(problem, IdentityWeight{}, options.grid, options.solver);
    case Method::LmmConvex2:
        return per_group_search(problem, options);
    case Method::LmmConvex3:
    case Method::LmmConvexW:
        return solve_path(problem, method_weights(method, problem, options, covariance), options.grid,
                          options.solver);
    case Method::LmmLassoRotation:
        return plain_lasso_path(as_plain_problem(rotate_lmm_lasso(problem)), options);
    case Method::DrTwoStep:
        return select_with_reduction(problem, options.pca_threshold, options.grid, options.solver);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown method");
}

WeightSpec method_weights(Method method, const LmmProblem& problem, const MethodOptions& options,
                          const std::optional<MatrixXd>& covariance)
{
    switch (method) {
    case Method::LmmConvex1: return IdentityWeight{};
    case Method::LmmConvex2: return PerGroupParams{options.per_group_values};
    case Method::LmmConvex3: return correlation_weights(problem);
    case Method::LmmConvexW:
        if (!covariance)
            throw Error(ErrorCode::InvalidArgument, "lmm_convex_W needs the random-effect covariance");
        return covariance_weight(*covariance);
    default: break;
    }
    throw Error(ErrorCode::InvalidArgument, method_name(method) + " has no ridge weight");
}

FitResult fit_method(Method method, const LmmProblem& problem, double lambda, double capital_lambda,
                     const MethodOptions& options, const std::optional<MatrixXd>& covariance)
{
    switch (method) {
    case Method::Lasso:
        return solve(without_z(problem.x, problem.y), IdentityWeight{}, lambda, 1.0, options.solver);
    case Method::HdlmmNaive:
        return solve(as_plain_problem(project_out(problem)), IdentityWeight{}, lambda, 1.0, options.solver);
    case Method::LmmLassoRotation:
        return solve(as_plain_problem(rotate_lmm_lasso(problem)), IdentityWeight{}, lambda, 1.0,
                     options.solver);
    case Method::DrTwoStep: {
        const PcaReduction reduced = pca_reduce(problem, options.pca_threshold);
        return solve(reduced.problem, correlation_weights(reduced.problem), lambda, capital_lambda,
                     options.solver);
    }
    default: break;
    }
    return solve(problem, method_weights(method, problem, options, covariance), lambda, capital_lambda,
                 options.solver);
}

std::optional<std::size_t> closest_fit(const PathResult& path, const std::vector<Index>& true_support)
{
    std::optional<std::size_t> best;
    std::size_t best_distance = 0;
    std::vector<Index> diff;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (!path.ok(i))
            continue;
        diff.clear();
        const auto& s = path.fits[i].support;
        std::set_symmetric_difference(s.begin(), s.end(), true_support.begin(), true_support.end(),
                                      std::back_inserter(diff));
        if (!best || diff.size() < best_distance) {
            best = i;
            best_distance = diff.size();
        }
    }
    return best;
}

} // namespace lmmselect
