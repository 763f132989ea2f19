#include "lmmselect/error.hpp"
#include "lmmselect/solver.hpp"

#include "support/qp_oracle.hpp"
#include "support/random_data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lmmselect;

namespace {

MatrixXd dense_m(const LmmProblem& problem, const MatrixXd& w, double c)
{
    const MatrixXd a = problem.z.transpose() * problem.z + c * w;
    return MatrixXd::Identity(problem.n(), problem.n()) -
           problem.z * a.inverse() * problem.z.transpose();
}

} // namespace

TEST(Lasso, OrthonormalDesignIsSoftThresholding)
{
    const LmmProblem problem =
        testdata::plain_problem(MatrixXd::Identity(2, 2), VectorXd(Eigen::Vector2d(3.0, 0.5)));
    const FitResult fit = solve(problem, IdentityWeight{}, 2.0, 1.0);
    EXPECT_NEAR(fit.beta[0], 2.0, 1e-12);
    EXPECT_EQ(fit.beta[1], 0.0);
    EXPECT_EQ(fit.support, std::vector<Index>{0});
    EXPECT_EQ(fit.u.size(), 0);
}

TEST(Lasso, ScalarRidgeRecoversU)
{
    LmmProblem problem;
    problem.y = VectorXd::Constant(1, 4.0);
    problem.x = MatrixXd::Zero(1, 1);
    problem.z = MatrixXd::Ones(1, 1);
    problem.groups = GroupStructure({1});
    for (double lambda : {0.1, 1.0, 50.0}) {
        const FitResult fit = solve(problem, IdentityWeight{}, lambda, 3.0);
        EXPECT_EQ(fit.beta[0], 0.0);
        EXPECT_NEAR(fit.u[0], 1.0, 1e-14);
        EXPECT_NEAR(fit.objective, 12.0, 1e-13); // (4 - 1)^2 + 3
    }
}

TEST(LambdaMax, PlainLassoValue)
{
    const LmmProblem problem =
        testdata::plain_problem(MatrixXd(Eigen::Vector2d(1.0, 2.0)), VectorXd(Eigen::Vector2d(1.0, 2.0)));
    EXPECT_DOUBLE_EQ(lambda_max(problem, IdentityWeight{}, 1.0), 10.0);
}

TEST(LambdaMax, ZeroResponseGivesZero)
{
    std::mt19937_64 rng(3);
    LmmProblem problem = testdata::random_problem(3, 10, 6, {2});
    problem.y.setZero();
    EXPECT_EQ(lambda_max(problem, IdentityWeight{}, 1.0), 0.0);
    const FitResult fit = solve(problem, IdentityWeight{}, 0.5, 1.0);
    EXPECT_TRUE(fit.support.empty());
}

TEST(LambdaMax, MatchesDenseFormula)
{
    const LmmProblem problem = testdata::random_problem(5, 25, 40, {3, 2});
    const MatrixXd w = effective_weight_matrix(PerGroupWeights{{0.5, 3.0}}, problem.groups);
    const MatrixXd m = dense_m(problem, w, 2.5);
    const double expected = 2.0 * (problem.x.transpose() * m * problem.y).cwiseAbs().maxCoeff();
    EXPECT_NEAR(lambda_max(problem, PerGroupWeights{{0.5, 3.0}}, 2.5), expected, 1e-10 * expected);
}

TEST(LambdaMax, IsAnExactThreshold)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const LmmProblem problem = testdata::random_problem(100 + seed, 30, 50, {4, 3});
        const double lmax = lambda_max(problem, IdentityWeight{}, 1.0);
        EXPECT_TRUE(solve(problem, IdentityWeight{}, lmax, 1.0).support.empty());
        EXPECT_FALSE(solve(problem, IdentityWeight{}, lmax * (1.0 - 1e-6), 1.0).support.empty());
    }
}

TEST(Solver, MatchesIndependentQpOracle)
{
    std::mt19937_64 rng(21);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const LmmProblem problem = testdata::random_problem(200 + seed, 20, 30, {3, 2});
        const MatrixXd b = testdata::gaussian_matrix(rng, 5, 5);
        const MatrixXd w = b * b.transpose() / 5.0 + 0.1 * MatrixXd::Identity(5, 5);
        const double lambda = 0.3 * lambda_max(problem, FullMatrixWeight{w}, 1.5);
        const FitResult fit = solve(problem, FullMatrixWeight{w}, lambda, 1.5);
        const auto oracle = testdata::qp_oracle(problem.x, problem.z, problem.y, w, lambda, 1.5);
        EXPECT_LE((fit.beta - oracle.beta).cwiseAbs().maxCoeff(), 1e-6) << "seed " << seed;
        EXPECT_LE((fit.u - oracle.u).cwiseAbs().maxCoeff(), 1e-6) << "seed " << seed;
        EXPECT_LE(fit.objective, oracle.objective + 1e-9 * std::abs(oracle.objective));
    }
}

TEST(Solver, KktResidualWithinTolerance)
{
    const LmmProblem problem = testdata::random_problem(31, 40, 80, {5, 5});
    for (double frac : {0.9, 0.5, 0.1, 0.01}) {
        const double lambda = frac * lambda_max(problem, IdentityWeight{}, 0.7);
        const FitResult fit = solve(problem, IdentityWeight{}, lambda, 0.7);
        EXPECT_TRUE(fit.converged);
        EXPECT_LE(fit.kkt_residual, 1e-6);
        EXPECT_LE(kkt_residual(problem, IdentityWeight{}, lambda, 0.7, fit.beta, fit.u), 1e-6);
    }
}

TEST(Solver, KktResidualGrowsWithPerturbation)
{
    const LmmProblem problem = testdata::random_problem(32, 30, 20, {3});
    const double lambda = 0.2 * lambda_max(problem, IdentityWeight{}, 1.0);
    const FitResult fit = solve(problem, IdentityWeight{}, lambda, 1.0);
    ASSERT_FALSE(fit.support.empty());
    const Index j = fit.support.front();
    double last = fit.kkt_residual;
    for (double eps : {1e-5, 1e-4, 1e-3, 1e-2}) {
        VectorXd beta = fit.beta;
        beta[j] += eps;
        const double r = kkt_residual(problem, IdentityWeight{}, lambda, 1.0, beta, fit.u);
        EXPECT_GT(r, last);
        last = r;
    }
}

TEST(Solver, UEliminationIdentity)
{
    const LmmProblem problem = testdata::random_problem(41, 25, 10, {2, 3});
    const MatrixXd w = effective_weight_matrix(PerGroupWeights{{2.0, 0.3}}, problem.groups);
    const ReducedProblem reduced(problem, w, 1.7);
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const VectorXd beta = testdata::gaussian_vector(rng, problem.p());
        const VectorXd u = reduced.recover_u(beta);
        const VectorXd r = problem.y - problem.x * beta;
        const double full = (r - problem.z * u).squaredNorm() + 1.7 * u.dot(w * u);
        const double eliminated = (reduced.factor() * r).squaredNorm();
        EXPECT_NEAR(full, eliminated, 1e-8 * std::max(1.0, full));
        EXPECT_NEAR(full, r.dot(dense_m(problem, w, 1.7) * r), 1e-8 * std::max(1.0, full));
    }
    EXPECT_LE((reduced.m_matrix() - dense_m(problem, w, 1.7)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Solver, ScalingWeightsIsScalingCapitalLambda)
{
    const LmmProblem problem = testdata::random_problem(51, 20, 15, {2, 2});
    const double lambda = 0.3 * lambda_max(problem, IdentityWeight{}, 2.0);
    const FitResult a = solve(problem, IdentityWeight{}, lambda, 2.0);
    const FitResult b = solve(problem, PerGroupWeights{{2.0, 2.0}}, lambda, 1.0);
    EXPECT_LE((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((a.u - b.u).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Solver, ScalingResponseAndLambdaScalesSolution)
{
    const LmmProblem problem = testdata::random_problem(54, 20, 15, {2, 2});
    const double lambda = 0.3 * lambda_max(problem, IdentityWeight{}, 0.6);
    const FitResult base = solve(problem, IdentityWeight{}, lambda, 0.6);
    for (double c : {2.0, 0.25, 8.0}) {
        LmmProblem scaled = problem;
        scaled.y *= c;
        const FitResult fit = solve(scaled, IdentityWeight{}, c * lambda, 0.6);
        EXPECT_EQ(fit.support, base.support);
        EXPECT_LE((fit.beta - c * base.beta).cwiseAbs().maxCoeff(), 1e-8 * c);
        EXPECT_LE((fit.u - c * base.u).cwiseAbs().maxCoeff(), 1e-8 * c);
    }
}

TEST(Solver, PerGroupParamsIgnoreGlobalMultiplier)
{
    const LmmProblem problem = testdata::random_problem(52, 20, 15, {2, 2});
    const FitResult a = solve(problem, PerGroupParams{{0.5, 4.0}}, 1.0, 10.0);
    const FitResult b = solve(problem, PerGroupWeights{{0.5, 4.0}}, 1.0, 1.0);
    EXPECT_EQ(a.capital_lambda, 1.0);
    EXPECT_EQ(a.beta, b.beta);
}

TEST(Solver, UnitWeightsMatchIdentityBitForBit)
{
    const LmmProblem problem = testdata::random_problem(53, 20, 15, {2, 3});
    const FitResult a = solve(problem, IdentityWeight{}, 2.0, 0.8);
    const FitResult b = solve(problem, PerGroupWeights{{1.0, 1.0}}, 2.0, 0.8);
    EXPECT_EQ(a.beta, b.beta);
    EXPECT_EQ(a.u, b.u);
}

TEST(Solver, NaiveAndCovarianceUpdatesAgree)
{
    const LmmProblem problem = testdata::random_problem(61, 30, 60, {4});
    SolverConfig naive;
    naive.update_rule = SolverConfig::UpdateRule::Naive;
    SolverConfig cov;
    cov.update_rule = SolverConfig::UpdateRule::Covariance;
    for (double frac : {0.5, 0.1, 0.02}) {
        const double lambda = frac * lambda_max(problem, IdentityWeight{}, 1.0);
        const FitResult a = solve(problem, IdentityWeight{}, lambda, 1.0, naive);
        const FitResult b = solve(problem, IdentityWeight{}, lambda, 1.0, cov);
        EXPECT_LE((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_LE(b.kkt_residual, 1e-6);
    }
}

TEST(Solver, SingularRidge)
{
    LmmProblem problem = testdata::random_problem(71, 10, 5, {3});
    problem.z.col(2) = problem.z.col(1); // Z'Z singular; W = 0 adds nothing
    const MatrixXd w = MatrixXd::Zero(3, 3);
    try {
        solve(problem, FullMatrixWeight{w}, 1.0, 1.0);
        FAIL() << "expected SingularRidge";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SingularRidge);
    }
}

TEST(Solver, IterationCapReportsNonConvergence)
{
    const LmmProblem problem = testdata::random_problem(72, 30, 40, {3});
    SolverConfig config;
    config.max_iter = 1;
    const FitResult fit =
        solve(problem, IdentityWeight{}, 0.05 * lambda_max(problem, IdentityWeight{}, 1.0), 1.0, config);
    EXPECT_FALSE(fit.converged);
    EXPECT_EQ(fit.iterations, 1);
}

TEST(Solver, RejectsNonpositiveLambda)
{
    const LmmProblem problem = testdata::random_problem(73, 10, 5, {2});
    EXPECT_THROW(solve(problem, IdentityWeight{}, 0.0, 1.0), Error);
    EXPECT_THROW(solve(problem, IdentityWeight{}, 1.0, -1.0), Error);
}

TEST(Path, SinglePointEqualsDirectSolve)
{
    const LmmProblem problem = testdata::random_problem(81, 25, 30, {2, 2});
    const std::vector<double> lambdas{4.0};
    const std::vector<double> caps{0.5};
    const PathResult path = solve_path(problem, IdentityWeight{}, lambdas, caps);
    ASSERT_EQ(path.size(), 1u);
    ASSERT_TRUE(path.ok(0));
    const FitResult direct = solve(problem, IdentityWeight{}, 4.0, 0.5);
    EXPECT_EQ(path.fits[0].beta, direct.beta);
    EXPECT_EQ(path.fits[0].u, direct.u);
}

TEST(Path, WarmStartsMatchColdStarts)
{
    const LmmProblem problem = testdata::random_problem(82, 30, 50, {3, 2});
    GridSpec grid;
    grid.lambda_count = 15;
    grid.capital_lambdas = {0.1, 10.0};
    const SolverConfig config;
    const PathResult path = solve_path(problem, IdentityWeight{}, grid, config);
    ASSERT_EQ(path.size(), 30u);
    for (std::size_t i = 0; i < path.size(); ++i) {
        ASSERT_TRUE(path.ok(i));
        const FitResult cold =
            solve(problem, IdentityWeight{}, path.grid[i].lambda, path.grid[i].capital_lambda, config);
        EXPECT_LE((path.fits[i].beta - cold.beta).cwiseAbs().maxCoeff(), 10.0 * config.tol) << "grid point " << i;
        EXPECT_LE(path.fits[i].kkt_residual, 1e-6);
    }
}

TEST(Path, DefaultGridShapes)
{
    const LmmProblem problem = testdata::random_problem(83, 20, 10, {2});
    const PathResult path = solve_path(problem, IdentityWeight{}, GridSpec{});
    ASSERT_EQ(path.size(), 500u);
    ASSERT_EQ(path.lambda_max_per_capital_lambda.size(), 10u);
    EXPECT_DOUBLE_EQ(path.lambda_max_per_capital_lambda.front().first, 1e-2);
    EXPECT_DOUBLE_EQ(path.lambda_max_per_capital_lambda.back().first, 1e2);
    for (std::size_t k = 0; k < 10; ++k) {
        const double lmax = path.lambda_max_per_capital_lambda[k].second;
        EXPECT_EQ(path.grid[50 * k].lambda, lmax);
        EXPECT_EQ(path.grid[50 * k + 49].lambda, lmax * 1e-3);
        EXPECT_TRUE(path.fits[50 * k].support.empty());
    }
}

TEST(Path, PerGroupParamsCollapseCapitalGrid)
{
    const LmmProblem problem = testdata::random_problem(84, 20, 10, {2, 1});
    GridSpec grid;
    grid.lambda_count = 5;
    const PathResult path = solve_path(problem, PerGroupParams{{1.0, 2.0}}, grid);
    EXPECT_EQ(path.size(), 5u);
    EXPECT_EQ(path.grid[0].capital_lambda, 1.0);
}

TEST(Path, SingularColumnIsRecordedNotThrown)
{
    LmmProblem problem = testdata::random_problem(85, 10, 5, {3});
    problem.z.col(2) = problem.z.col(1);
    MatrixXd w = MatrixXd::Identity(3, 3);
    w(2, 2) = 0.0;
    w(1, 1) = 0.0;
    const std::vector<double> lambdas{2.0, 1.0};
    const std::vector<double> caps{1.0};
    const PathResult path = solve_path(problem, FullMatrixWeight{w}, lambdas, caps);
    ASSERT_EQ(path.size(), 2u);
    EXPECT_FALSE(path.ok(0));
    EXPECT_FALSE(path.ok(1));
}

TEST(Path, RejectsAscendingLambdas)
{
    const LmmProblem problem = testdata::random_problem(86, 10, 5, {2});
    const std::vector<double> lambdas{1.0, 2.0};
    const std::vector<double> caps{1.0};
    EXPECT_THROW(solve_path(problem, IdentityWeight{}, lambdas, caps), Error);
}

TEST(LogSpace, EndpointsAreExact)
{
    const auto g = log_space_descending(7.3, 7.3e-3, 50);
    ASSERT_EQ(g.size(), 50u);
    EXPECT_EQ(g.front(), 7.3);
    EXPECT_EQ(g.back(), 7.3e-3);
    for (std::size_t k = 1; k < g.size(); ++k)
        EXPECT_LT(g[k], g[k - 1]);
}
