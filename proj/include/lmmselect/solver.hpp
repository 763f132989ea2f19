#pragma once

#include "lmmselect/model.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lmmselect {

// ---------------------------------------------------------------------------
// Plain LASSO by coordinate descent: min ||y - X b||^2 + lambda ||b||_1
// ---------------------------------------------------------------------------

struct LassoResult {
    VectorXd beta;
    long sweeps = 0;
    bool converged = true;
    double kkt_residual = 0.0;
};

/// Coordinate descent over a fixed design, which the solver owns.
class LassoSolver {
public:
    LassoSolver(MatrixXd x, VectorXd y);

    Index p() const noexcept { return x_.cols(); }
    const MatrixXd& x() const noexcept { return x_; }
    const VectorXd& y() const noexcept { return y_; }

    /// x_j' y for every column, computed with the same arithmetic as the
    /// coordinate updates so that lambda_max() is an exact threshold.
    const VectorXd& correlations() const noexcept { return correlations_; }

    /// Smallest lambda with an all-zero solution: 2 max_j |x_j' y|.
    double lambda_max() const noexcept { return lambda_max_; }

    LassoResult fit(double lambda, const VectorXd& warm_start, const SolverConfig& config) const;
    LassoResult fit(double lambda, const SolverConfig& config) const;

    /// Max violation of the stationarity conditions of the LASSO objective.
    double kkt_residual(double lambda, const VectorXd& beta) const;

private:
    LassoResult fit_naive(double lambda, VectorXd beta, const SolverConfig& config) const;
    LassoResult fit_covariance(double lambda, VectorXd beta, const SolverConfig& config) const;
    struct FaceSolution {
        std::vector<Index> active;
        VectorXd values;
        bool is_direction = false;
    };
    bool face_solution(double lambda, const VectorXd& beta, FaceSolution& face) const;
    bool face_step(double lambda, VectorXd& beta) const;
    void polish(double lambda, VectorXd& beta, double& kkt, const SolverConfig& config) const;
    VectorXd gradient_terms(const VectorXd& beta) const; // x_j' (y - X beta)

    MatrixXd x_;
    VectorXd y_;
    VectorXd col_sq_norms_;
    VectorXd correlations_;
    double lambda_max_ = 0.0;
};

// ---------------------------------------------------------------------------
// Mixed-model problem with u eliminated analytically.
// ---------------------------------------------------------------------------

/// For fixed beta the optimal u is (Z'Z + c W)^{-1} Z' (y - X beta) and the
/// remaining objective is (y - X beta)' M (y - X beta) with
/// M = I - Z (Z'Z + c W)^{-1} Z'. With L'L = M this is a LASSO on (L X, L y).
///
/// Keeps a pointer to `problem`; the problem must outlive this object.
class ReducedProblem {
public:
    ReducedProblem(const LmmProblem& problem, MatrixXd w_eff, double capital_lambda);

    const MatrixXd& factor() const noexcept { return factor_; }
    const MatrixXd& x_tilde() const noexcept { return lasso_.x(); }
    const VectorXd& y_tilde() const noexcept { return lasso_.y(); }
    const MatrixXd& weight_matrix() const noexcept { return w_eff_; }
    double capital_lambda() const noexcept { return capital_lambda_; }
    const LmmProblem& problem() const noexcept { return *problem_; }

    /// M itself (identity when q = 0).
    MatrixXd m_matrix() const;

    /// argmin_u ||r - Z u||^2 + c u'Wu for r = y - X beta.
    VectorXd recover_u(const VectorXd& beta) const;

    const LassoSolver& lasso() const noexcept { return lasso_; }

private:
    const LmmProblem* problem_;
    MatrixXd w_eff_;
    double capital_lambda_;
    Eigen::LLT<MatrixXd> ridge_;
    MatrixXd factor_;
    LassoSolver lasso_;
};

FitResult solve(const LmmProblem& problem, const WeightSpec& weights, double lambda,
                double capital_lambda, const SolverConfig& config = {});

/// Solve on a prebuilt reduction, optionally warm-started from `warm_beta`.
FitResult solve(const ReducedProblem& reduced, double lambda, const SolverConfig& config,
                const VectorXd* warm_beta = nullptr);

double lambda_max(const LmmProblem& problem, const WeightSpec& weights, double capital_lambda);

/// Max stationarity violation of (beta, u) for the full mixed-model objective.
double kkt_residual(const LmmProblem& problem, const WeightSpec& weights, double lambda,
                    double capital_lambda, const VectorXd& beta, const VectorXd& u);

// ---------------------------------------------------------------------------
// Regularization paths
// ---------------------------------------------------------------------------

struct GridPoint {
    double lambda = 0.0;
    double capital_lambda = 0.0;
};

struct PathResult {
    std::vector<GridPoint> grid;
    std::vector<FitResult> fits;
    std::vector<std::optional<std::string>> errors; // aligned with grid; set when a point failed
    std::vector<std::pair<double, double>> lambda_max_per_capital_lambda;
    std::size_t skipped_points = 0; // grid points dropped by a support cap

    std::size_t size() const noexcept { return grid.size(); }
    bool ok(std::size_t i) const { return !errors.at(i).has_value(); }
};

/// Default grids: lambda log-spaced over [lambda_max * min_ratio, lambda_max]
/// (descending) for every capital lambda, unless `lambdas` is given.
struct GridSpec {
    std::size_t lambda_count = 50;
    double lambda_min_ratio = 1e-3;
    std::vector<double> lambdas;
    std::vector<double> capital_lambdas = default_capital_lambdas();
    /// When set, a lambda column stops after the first fit whose support is
    /// larger than this (the remaining, smaller lambdas are not solved).
    std::optional<Index> max_support;

    static std::vector<double> default_capital_lambdas();
};

/// `count` points from `hi` down to `lo`, equally spaced in log scale.
std::vector<double> log_space_descending(double hi, double lo, std::size_t count);

/// Explicit grids: every (lambda, capital lambda) pair; lambdas must be descending.
PathResult solve_path(const LmmProblem& problem, const WeightSpec& weights,
                      std::span<const double> lambdas, std::span<const double> capital_lambdas,
                      const SolverConfig& config = {},
                      std::optional<Index> max_support = std::nullopt);

PathResult solve_path(const LmmProblem& problem, const WeightSpec& weights, const GridSpec& grid,
                      const SolverConfig& config = {});

/// Appends the lambda path of one reduction to `path`, warm-starting down the grid.
void append_lambda_path(const ReducedProblem& reduced, std::span<const double> lambdas,
                        const SolverConfig& config, PathResult& path,
                        std::optional<Index> max_support = std::nullopt);

} // namespace lmmselect
