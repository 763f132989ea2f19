#pragma once

#include "lmmselect/simgen.hpp"
#include "lmmselect/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lmmselect {

enum class Method {
    Lasso,            // ignore Z
    HdlmmNaive,       // project Z out, then LASSO
    LmmConvex1,       // one ridge parameter
    LmmConvex2,       // one ridge parameter per group, searched on a coarse grid
    LmmConvex3,       // correlation weights scaled by one parameter
    LmmConvexW,       // W = D^{-1} from the generating covariance
    LmmLassoRotation, // spectral rotation with a fitted variance ratio, then LASSO
    DrTwoStep,        // per-group PCA of Z, then correlation-weighted fit
};

std::string method_name(Method method);
Method parse_method(const std::string& name); // throws InvalidArgument
const std::vector<Method>& all_methods();

struct MethodOptions {
    GridSpec grid;
    SolverConfig solver;
    /// Per-group ridge values tried by LmmConvex2 (all combinations).
    std::vector<double> per_group_values{1e-2, 1.0, 1e2};
    double pca_threshold = 0.95;
};

/// Runs `method` over its grid. `covariance` is the random-effect covariance
/// D, needed only by LmmConvexW; a singular D is replaced by its pseudoinverse.
PathResult run_method(Method method, const LmmProblem& problem, const MethodOptions& options,
                      const std::optional<MatrixXd>& covariance = std::nullopt);

/// One fit of `method` at (lambda, capital_lambda). LmmConvex2 takes its
/// per-group ridge values from `options.per_group_values`, one per group. For
/// the methods that end in a plain LASSO, u is empty; for DrTwoStep it refers
/// to the reduced groups.
FitResult fit_method(Method method, const LmmProblem& problem, double lambda, double capital_lambda,
                     const MethodOptions& options,
                     const std::optional<MatrixXd>& covariance = std::nullopt);

/// The penalty matrix variant `method` uses on `problem` (LmmConvex1/2/3/W).
WeightSpec method_weights(Method method, const LmmProblem& problem, const MethodOptions& options,
                          const std::optional<MatrixXd>& covariance);

/// Index of the fit whose support is closest to `true_support` (symmetric
/// difference), first on ties; nullopt when no grid point succeeded.
std::optional<std::size_t> closest_fit(const PathResult& path, const std::vector<Index>& true_support);

} // namespace lmmselect
