#include "lmmselect/solver.hpp"

#include "lmmselect/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lmmselect {

namespace {

// Active-set sweeps between attempts to jump to the exact face minimizer.
constexpr long kFaceStepInterval = 20;

inline double soft_threshold(double value, double threshold)
{
    if (value > threshold)
        return value - threshold;
    if (value < -threshold)
        return value + threshold;
    return 0.0;
}

bool has_nonzero(const VectorXd& v)
{
    return (v.array() != 0.0).any();
}

// Shared by the exact and the warm-started code paths; see LassoSolver::correlations().
inline double column_dot(const MatrixXd& x, Index j, const VectorXd& v)
{
    return x.col(j).dot(v);
}

double stationarity_violation(const VectorXd& grad_terms, const VectorXd& beta, double lambda)
{
    // grad_terms_j = x_j' r; the objective's derivative is -2 x_j' r + lambda sign(beta_j).
    double worst = 0.0;
    for (Index j = 0; j < beta.size(); ++j) {
        const double g = 2.0 * grad_terms[j];
        const double v = beta[j] != 0.0 ? std::abs(g - lambda * (beta[j] > 0.0 ? 1.0 : -1.0))
                                        : std::max(0.0, std::abs(g) - lambda);
        worst = std::max(worst, v);
    }
    return worst;
}

bool use_covariance_updates(const SolverConfig& config, Index p)
{
    switch (config.update_rule) {
    case SolverConfig::UpdateRule::Naive: return false;
    case SolverConfig::UpdateRule::Covariance: return true;
    case SolverConfig::UpdateRule::Automatic: break;
    }
    return p > config.covariance_threshold;
}

double kkt_residual_impl(const LmmProblem& problem, const MatrixXd& w_eff, double lambda,
                         double capital_lambda, const VectorXd& beta, const VectorXd& u)
{
    VectorXd r = problem.y - design_times(problem.x, beta);
    if (problem.q() > 0)
        r.noalias() -= problem.z * u;
    const VectorXd grad_terms = problem.x.transpose() * r;
    double worst = stationarity_violation(grad_terms, beta, lambda);
    if (problem.q() > 0) {
        const VectorXd g_u = 2.0 * (problem.z.transpose() * r) - 2.0 * capital_lambda * (w_eff * u);
        worst = std::max(worst, g_u.cwiseAbs().maxCoeff());
    }
    return worst;
}

void check_positive(double value, const char* what)
{
    if (!(value > 0.0) || !std::isfinite(value))
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be positive and finite");
}

} // namespace

// ---------------------------------------------------------------------------
// LassoSolver
// ---------------------------------------------------------------------------

LassoSolver::LassoSolver(MatrixXd x, VectorXd y) : x_(std::move(x)), y_(std::move(y))
{
    if (x_.rows() != y_.size())
        throw Error(ErrorCode::DimensionMismatch, "design rows must match response length");
    const Index p = x_.cols();
    col_sq_norms_ = x_.colwise().squaredNorm().transpose();
    correlations_.resize(p);
    for (Index j = 0; j < p; ++j)
        correlations_[j] = column_dot(x_, j, y_);
    lambda_max_ = p > 0 ? 2.0 * correlations_.cwiseAbs().maxCoeff() : 0.0;
}

VectorXd LassoSolver::gradient_terms(const VectorXd& beta) const
{
    const VectorXd r = y_ - design_times(x_, beta);
    return x_.transpose() * r;
}

double LassoSolver::kkt_residual(double lambda, const VectorXd& beta) const
{
    return stationarity_violation(gradient_terms(beta), beta, lambda);
}

LassoResult LassoSolver::fit(double lambda, const SolverConfig& config) const
{
    return fit(lambda, VectorXd::Zero(p()), config);
}

LassoResult LassoSolver::fit(double lambda, const VectorXd& warm_start,
                             const SolverConfig& config) const
{
    if (warm_start.size() != p())
        throw Error(ErrorCode::DimensionMismatch, "warm start has the wrong length");
    if (use_covariance_updates(config, p()))
        return fit_covariance(lambda, warm_start, config);
    return fit_naive(lambda, warm_start, config);
}

// With the signs of the nonzero coordinates fixed, the LASSO objective on
// that face is a quadratic minimized by X_A'X_A b = X_A'y - (lambda/2) s.
// When X_A is rank deficient there is no unique minimizer; `values` is then a
// null direction of X_A oriented so that the l1 term does not increase.
bool LassoSolver::face_solution(double lambda, const VectorXd& beta, FaceSolution& face) const
{
    face.active.clear();
    for (Index j = 0; j < beta.size(); ++j) {
        if (beta[j] != 0.0)
            face.active.push_back(j);
    }
    const Index k = static_cast<Index>(face.active.size());
    if (k == 0)
        return false;
    MatrixXd xa(x_.rows(), k);
    VectorXd sign(k);
    for (Index a = 0; a < k; ++a) {
        const Index j = face.active[a];
        xa.col(a) = x_.col(j);
        sign[a] = beta[j] > 0.0 ? 1.0 : -1.0;
    }
    MatrixXd gram(k, k);
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(xa.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

    if (k <= x_.rows()) {
        const Eigen::LDLT<MatrixXd> ldlt(gram);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-12) {
            VectorXd rhs(k);
            for (Index a = 0; a < k; ++a)
                rhs[a] = correlations_[face.active[a]] - 0.5 * lambda * sign[a];
            face.values = ldlt.solve(rhs);
            face.is_direction = false;
            return true;
        }
    }
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
    const VectorXd& ev = eig.eigenvalues();
    if (!(ev[0] <= 1e-10 * std::max(ev[k - 1], 1.0)))
        return false;
    face.values = eig.eigenvectors().col(0);
    if (sign.dot(face.values) > 0.0)
        face.values = -face.values;
    face.is_direction = true;
    return true;
}

// Moves from beta toward the face minimizer (or along a flat direction of a
// singular face), stopping where the first coordinate reaches zero.
bool LassoSolver::face_step(double lambda, VectorXd& beta) const
{
    FaceSolution face;
    if (!face_solution(lambda, beta, face))
        return false;
    const auto& active = face.active;
    const Index k = static_cast<Index>(active.size());

    VectorXd step(k);
    for (Index a = 0; a < k; ++a)
        step[a] = face.is_direction ? face.values[a] : face.values[a] - beta[active[a]];
    // Largest t <= limit keeping every active coordinate on its side of zero.
    double t = face.is_direction ? std::numeric_limits<double>::infinity() : 1.0;
    Index blocking = -1;
    for (Index a = 0; a < k; ++a) {
        const double b = beta[active[a]];
        if (b * step[a] < 0.0) {
            const double reach = -b / step[a];
            if (reach < t) {
                t = reach;
                blocking = a;
            }
        }
    }
    if (!(t > 0.0) || !std::isfinite(t))
        return false;

    VectorXd candidate = beta;
    for (Index a = 0; a < k; ++a)
        candidate[active[a]] = a == blocking ? 0.0 : beta[active[a]] + t * step[a];
    if (face.is_direction) {
        // The flat direction is flat only up to round-off; never accept an increase.
        auto objective = [&](const VectorXd& b) {
            return (y_ - x_ * b).squaredNorm() + lambda * b.lpNorm<1>();
        };
        if (objective(candidate) > objective(beta))
            return false;
    }
    beta = std::move(candidate);
    return true;
}

// Replaces a converged iterate by the exact face minimizer when that keeps
// every sign and still passes the KKT check.
void LassoSolver::polish(double lambda, VectorXd& beta, double& kkt,
                         const SolverConfig& config) const
{
    FaceSolution face;
    if (!face_solution(lambda, beta, face) || face.is_direction)
        return;
    VectorXd candidate = beta;
    for (std::size_t a = 0; a < face.active.size(); ++a) {
        const Index j = face.active[a];
        const double value = face.values[static_cast<Index>(a)];
        if ((value > 0.0) != (beta[j] > 0.0) || value == 0.0)
            return;
        candidate[j] = value;
    }
    const double candidate_kkt = kkt_residual(lambda, candidate);
    if (candidate_kkt <= std::max(kkt, config.kkt_tol)) {
        beta = std::move(candidate);
        kkt = candidate_kkt;
    }
}

// Residual-based updates: each coordinate costs O(n).
LassoResult LassoSolver::fit_naive(double lambda, VectorXd beta, const SolverConfig& config) const
{
    const Index p = x_.cols();
    const double half = 0.5 * lambda;

    VectorXd r = y_;
    if (has_nonzero(beta))
        r -= design_times(x_, beta);

    std::vector<Index> active;
    std::vector<char> in_active(static_cast<std::size_t>(p), 0);
    for (Index j = 0; j < p; ++j) {
        if (beta[j] != 0.0) {
            active.push_back(j);
            in_active[j] = 1;
        }
    }

    auto update = [&](Index j) {
        const double nrm = col_sq_norms_[j];
        if (nrm == 0.0)
            return 0.0;
        const double old = beta[j];
        const double rho = column_dot(x_, j, r) + nrm * old;
        const double fresh = soft_threshold(rho, half) / nrm;
        const double delta = fresh - old;
        if (delta != 0.0) {
            r.noalias() -= delta * x_.col(j);
            beta[j] = fresh;
            if (!in_active[j]) {
                in_active[j] = 1;
                active.push_back(j);
            }
        }
        return std::abs(delta);
    };

    LassoResult out;
    double inner_tol = config.tol;
    int kkt_failures = 0;
    while (out.sweeps < config.max_iter) {
        double max_change = 0.0;
        for (Index j = 0; j < p; ++j)
            max_change = std::max(max_change, update(j));
        ++out.sweeps;

        if (max_change < config.tol) {
            out.kkt_residual = kkt_residual(lambda, beta);
            if (out.kkt_residual <= config.kkt_tol) {
                polish(lambda, beta, out.kkt_residual, config);
                out.beta = std::move(beta);
                return out;
            }
            if ((max_change == 0.0 && inner_tol <= 1e-15) || ++kkt_failures > 50)
                break;
            // Round-off in the running residual or a slow active block; refresh and tighten.
            r = y_ - design_times(x_, beta);
            inner_tol = std::max(inner_tol * 0.1, 1e-16);
        }

        for (long inner = 1; out.sweeps < config.max_iter; ++inner) {
            double change = 0.0;
            for (Index j : active)
                change = std::max(change, update(j));
            ++out.sweeps;
            if (change < inner_tol)
                break;
            if (inner % kFaceStepInterval == 0 && face_step(lambda, beta))
                r = y_ - design_times(x_, beta);
        }
    }
    out.kkt_residual = kkt_residual(lambda, beta);
    out.converged = out.kkt_residual <= config.kkt_tol;
    out.beta = std::move(beta);
    return out;
}

// Gram-based updates: x_j' r = c_j - sum_k G_jk beta_k, with G columns cached
// for every coordinate that has ever been nonzero. Each coordinate costs O(|A|).
LassoResult LassoSolver::fit_covariance(double lambda, VectorXd beta,
                                        const SolverConfig& config) const
{
    const Index p = x_.cols();
    const double half = 0.5 * lambda;

    std::vector<Index> active;
    std::vector<VectorXd> gram; // gram[a] = X' x_{active[a]}
    std::vector<char> in_active(static_cast<std::size_t>(p), 0);
    auto activate = [&](Index j) {
        in_active[j] = 1;
        active.push_back(j);
        gram.emplace_back(x_.transpose() * x_.col(j));
    };
    for (Index j = 0; j < p; ++j) {
        if (beta[j] != 0.0)
            activate(j);
    }

    auto update = [&](Index j) {
        const double nrm = col_sq_norms_[j];
        if (nrm == 0.0)
            return 0.0;
        double fitted = 0.0;
        for (std::size_t a = 0; a < active.size(); ++a) {
            const double b = beta[active[a]];
            if (b != 0.0)
                fitted += gram[a][j] * b;
        }
        const double old = beta[j];
        const double rho = (correlations_[j] - fitted) + nrm * old;
        const double fresh = soft_threshold(rho, half) / nrm;
        const double delta = fresh - old;
        if (delta != 0.0) {
            beta[j] = fresh;
            if (!in_active[j])
                activate(j);
        }
        return std::abs(delta);
    };

    LassoResult out;
    double inner_tol = config.tol;
    int kkt_failures = 0;
    while (out.sweeps < config.max_iter) {
        double max_change = 0.0;
        for (Index j = 0; j < p; ++j)
            max_change = std::max(max_change, update(j));
        ++out.sweeps;

        if (max_change < config.tol) {
            out.kkt_residual = kkt_residual(lambda, beta);
            if (out.kkt_residual <= config.kkt_tol) {
                polish(lambda, beta, out.kkt_residual, config);
                out.beta = std::move(beta);
                return out;
            }
            if ((max_change == 0.0 && inner_tol <= 1e-15) || ++kkt_failures > 50)
                break;
            inner_tol = std::max(inner_tol * 0.1, 1e-16);
        }

        for (long inner = 1; out.sweeps < config.max_iter; ++inner) {
            double change = 0.0;
            for (std::size_t a = 0; a < active.size(); ++a)
                change = std::max(change, update(active[a]));
            ++out.sweeps;
            if (change < inner_tol)
                break;
            if (inner % kFaceStepInterval == 0)
                face_step(lambda, beta);
        }
    }
    out.kkt_residual = kkt_residual(lambda, beta);
    out.converged = out.kkt_residual <= config.kkt_tol;
    out.beta = std::move(beta);
    return out;
}

// ---------------------------------------------------------------------------
// ReducedProblem
// ---------------------------------------------------------------------------

namespace {

struct Reduction {
    Eigen::LLT<MatrixXd> ridge;
    MatrixXd factor;
    MatrixXd x_tilde;
    VectorXd y_tilde;
};

// With Z = U S V' (thin, rank r), M = I - U C U' where C = S V' A^{-1} V S and
// A = Z'Z + c W. M is the identity off range(U), so its symmetric square root
// is L = I + U (sqrt(I - C) - I) U', applied without forming n x n products
// with X.
Reduction build_reduction(const LmmProblem& problem, const MatrixXd& w_eff, double capital_lambda)
{
    const Index n = problem.n();
    Reduction out;
    if (problem.q() == 0) {
        out.factor = MatrixXd::Identity(n, n);
        out.x_tilde = problem.x;
        out.y_tilde = problem.y;
        return out;
    }
    MatrixXd a = problem.z.transpose() * problem.z;
    a.noalias() += capital_lambda * w_eff;
    a = 0.5 * (a + a.transpose()).eval();
    out.ridge.compute(a);
    if (out.ridge.info() != Eigen::Success || !(out.ridge.rcond() > 1e-13)) {
        std::ostringstream msg;
        msg << "Z'Z + " << capital_lambda << " W is numerically singular";
        throw Error(ErrorCode::SingularRidge, msg.str());
    }

    const Eigen::JacobiSVD<MatrixXd> svd(problem.z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& sv = svd.singularValues();
    const double cutoff = static_cast<double>(std::max(n, problem.q())) * sv.maxCoeff() *
                          std::numeric_limits<double>::epsilon();
    const Index r = (sv.array() > cutoff).count();
    const MatrixXd u = svd.matrixU().leftCols(r);
    const MatrixXd vs = svd.matrixV().leftCols(r) * sv.head(r).asDiagonal();

    MatrixXd c = vs.transpose() * out.ridge.solve(vs);
    MatrixXd m_range = -0.5 * (c + c.transpose());
    m_range.diagonal().array() += 1.0;
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m_range);
    const VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    MatrixXd g = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
    g.diagonal().array() -= 1.0;

    const MatrixXd ug = u * g;
    out.factor = ug * u.transpose();
    out.factor.diagonal().array() += 1.0;
    out.x_tilde = problem.x;
    out.x_tilde.noalias() += ug * (u.transpose() * problem.x);
    out.y_tilde = problem.y + ug * (u.transpose() * problem.y);
    return out;
}

} // namespace

ReducedProblem::ReducedProblem(const LmmProblem& problem, MatrixXd w_eff, double capital_lambda)
    : problem_(&problem),
      w_eff_(std::move(w_eff)),
      capital_lambda_(capital_lambda),
      lasso_(MatrixXd(), VectorXd())
{
    Reduction r = build_reduction(problem, w_eff_, capital_lambda_);
    ridge_ = std::move(r.ridge);
    factor_ = std::move(r.factor);
    lasso_ = LassoSolver(std::move(r.x_tilde), std::move(r.y_tilde));
}

MatrixXd ReducedProblem::m_matrix() const
{
    return factor_.transpose() * factor_;
}

VectorXd ReducedProblem::recover_u(const VectorXd& beta) const
{
    const LmmProblem& pr = *problem_;
    if (pr.q() == 0)
        return VectorXd();
    const VectorXd r = pr.y - design_times(pr.x, beta);
    return ridge_.solve(pr.z.transpose() * r);
}

// ---------------------------------------------------------------------------
// Solves
// ---------------------------------------------------------------------------

FitResult solve(const ReducedProblem& reduced, double lambda, const SolverConfig& config,
                const VectorXd* warm_beta)
{
    check_positive(lambda, "lambda");
    const LassoSolver& lasso = reduced.lasso();
    LassoResult fit = warm_beta ? lasso.fit(lambda, *warm_beta, config) : lasso.fit(lambda, config);

    const LmmProblem& problem = reduced.problem();
    FitResult out;
    out.beta = std::move(fit.beta);
    out.u = reduced.recover_u(out.beta);
    out.support = support_of(out.beta);
    out.lambda = lambda;
    out.capital_lambda = reduced.capital_lambda();
    out.objective = objective_value(problem, reduced.weight_matrix(), lambda,
                                    reduced.capital_lambda(), out.beta, out.u);
    out.kkt_residual = kkt_residual_impl(problem, reduced.weight_matrix(), lambda,
                                         reduced.capital_lambda(), out.beta, out.u);
    out.iterations = fit.sweeps;
    out.converged = fit.converged;
    return out;
}

FitResult solve(const LmmProblem& problem, const WeightSpec& weights, double lambda,
                double capital_lambda, const SolverConfig& config)
{
    validate(problem, weights);
    validate(config);
    check_positive(lambda, "lambda");
    check_positive(capital_lambda, "capital lambda");
    const double c = effective_capital_lambda(weights, capital_lambda);
    ReducedProblem reduced(problem, effective_weight_matrix(weights, problem.groups), c);
    return solve(reduced, lambda, config);
}

double lambda_max(const LmmProblem& problem, const WeightSpec& weights, double capital_lambda)
{
    validate(problem, weights);
    check_positive(capital_lambda, "capital lambda");
    const double c = effective_capital_lambda(weights, capital_lambda);
    ReducedProblem reduced(problem, effective_weight_matrix(weights, problem.groups), c);
    return reduced.lasso().lambda_max();
}

double kkt_residual(const LmmProblem& problem, const WeightSpec& weights, double lambda,
                    double capital_lambda, const VectorXd& beta, const VectorXd& u)
{
    validate(problem, weights);
    if (beta.size() != problem.p() || u.size() != problem.q())
        throw Error(ErrorCode::DimensionMismatch, "beta/u lengths must be p and q");
    const double c = effective_capital_lambda(weights, capital_lambda);
    return kkt_residual_impl(problem, effective_weight_matrix(weights, problem.groups), lambda, c,
                             beta, u);
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

std::vector<double> GridSpec::default_capital_lambdas()
{
    std::vector<double> grid = log_space_descending(1e2, 1e-2, 10);
    std::reverse(grid.begin(), grid.end());
    return grid;
}

std::vector<double> log_space_descending(double hi, double lo, std::size_t count)
{
    std::vector<double> out;
    if (count == 0)
        return out;
    out.reserve(count);
    if (count == 1) {
        out.push_back(hi);
        return out;
    }
    const double log_hi = std::log(hi);
    const double step = (std::log(lo) - log_hi) / static_cast<double>(count - 1);
    out.push_back(hi);
    for (std::size_t k = 1; k + 1 < count; ++k)
        out.push_back(std::exp(log_hi + step * static_cast<double>(k)));
    out.push_back(lo);
    return out;
}

void append_lambda_path(const ReducedProblem& reduced, std::span<const double> lambdas,
                        const SolverConfig& config, PathResult& path,
                        std::optional<Index> max_support)
{
    VectorXd warm = VectorXd::Zero(reduced.problem().p());
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const double lambda = lambdas[k];
        path.grid.push_back({lambda, reduced.capital_lambda()});
        try {
            FitResult fit = solve(reduced, lambda, config, &warm);
            warm = fit.beta;
            const bool saturated =
                max_support && static_cast<Index>(fit.support.size()) > *max_support;
            path.fits.push_back(std::move(fit));
            path.errors.emplace_back();
            if (saturated) {
                path.skipped_points += lambdas.size() - k - 1;
                return;
            }
        } catch (const Error& e) {
            FitResult failed;
            failed.lambda = lambda;
            failed.capital_lambda = reduced.capital_lambda();
            failed.converged = false;
            path.fits.push_back(std::move(failed));
            path.errors.emplace_back(e.what());
        }
    }
}

namespace {

void check_grids(std::span<const double> lambdas, std::span<const double> capital_lambdas)
{
    if (lambdas.empty() || capital_lambdas.empty())
        throw Error(ErrorCode::InvalidArgument, "grids must be nonempty");
    for (double v : lambdas)
        check_positive(v, "grid lambda");
    for (double v : capital_lambdas)
        check_positive(v, "grid capital lambda");
    if (!std::is_sorted(lambdas.begin(), lambdas.end(), std::greater<>()))
        throw Error(ErrorCode::InvalidArgument, "lambda grid must be sorted descending");
}

std::vector<double> effective_capital_grid(const WeightSpec& weights,
                                           std::span<const double> capital_lambdas)
{
    // Per-group parameters carry their own scale; the global multiplier is fixed at 1.
    if (std::holds_alternative<PerGroupParams>(weights))
        return {1.0};
    return {capital_lambdas.begin(), capital_lambdas.end()};
}

template <class LambdasFor>
PathResult sweep(const LmmProblem& problem, const WeightSpec& weights,
                 std::span<const double> capital_lambdas, const SolverConfig& config,
                 std::optional<Index> max_support, LambdasFor&& lambdas_for)
{
    const MatrixXd w_eff = effective_weight_matrix(weights, problem.groups);
    PathResult path;
    for (double c : effective_capital_grid(weights, capital_lambdas)) {
        std::optional<ReducedProblem> reduced;
        std::string failure;
        try {
            reduced.emplace(problem, w_eff, c);
        } catch (const Error& e) {
            failure = e.what();
        }
        const std::vector<double> lambdas =
            lambdas_for(reduced ? reduced->lasso().lambda_max() : 0.0);
        if (!reduced) {
            for (double lambda : lambdas) {
                path.grid.push_back({lambda, c});
                FitResult failed;
                failed.lambda = lambda;
                failed.capital_lambda = c;
                failed.converged = false;
                path.fits.push_back(std::move(failed));
                path.errors.emplace_back(failure);
            }
            continue;
        }
        path.lambda_max_per_capital_lambda.emplace_back(c, reduced->lasso().lambda_max());
        append_lambda_path(*reduced, lambdas, config, path, max_support);
    }
    return path;
}

} // namespace

PathResult solve_path(const LmmProblem& problem, const WeightSpec& weights,
                      std::span<const double> lambdas, std::span<const double> capital_lambdas,
                      const SolverConfig& config, std::optional<Index> max_support)
{
    validate(problem, weights);
    validate(config);
    check_grids(lambdas, capital_lambdas);
    const std::vector<double> fixed(lambdas.begin(), lambdas.end());
    return sweep(problem, weights, capital_lambdas, config, max_support,
                 [&](double) { return fixed; });
}

PathResult solve_path(const LmmProblem& problem, const WeightSpec& weights, const GridSpec& grid,
                      const SolverConfig& config)
{
    if (!grid.lambdas.empty())
        return solve_path(problem, weights, grid.lambdas, grid.capital_lambdas, config,
                          grid.max_support);
    validate(problem, weights);
    validate(config);
    if (grid.lambda_count == 0 || !(grid.lambda_min_ratio > 0.0) || grid.lambda_min_ratio > 1.0)
        throw Error(ErrorCode::InvalidArgument, "lambda grid needs count >= 1 and ratio in (0, 1]");
    check_grids(std::vector<double>{1.0}, grid.capital_lambdas);
    return sweep(problem, weights, grid.capital_lambdas, config, grid.max_support, [&](double lmax) {
        // All-zero data: every positive lambda gives the zero solution.
        const double top = lmax > 0.0 ? lmax : 1.0;
        return log_space_descending(top, top * grid.lambda_min_ratio, grid.lambda_count);
    });
}

} // namespace lmmselect
