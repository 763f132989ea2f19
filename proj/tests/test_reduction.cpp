#include "lmmselect/error.hpp"
#include "lmmselect/reduction.hpp"
#include "lmmselect/simgen.hpp"

#include "support/random_data.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lmmselect;
using namespace lmmselect::testdata;

TEST(PcaReduce, RankOneGroupKeepsOneComponent)
{
    LmmProblem problem = random_problem(1, 20, 3, {4, 3});
    for (Index c = 1; c < 4; ++c)
        problem.z.col(c) = problem.z.col(0);
    const PcaReduction red = pca_reduce(problem);
    EXPECT_EQ(red.design.new_group_sizes[0], 1);
    EXPECT_NEAR(red.design.explained[0], 1.0, 1e-12);
    EXPECT_EQ(red.problem.groups.sizes()[0], 1);
    EXPECT_EQ(red.problem.q(), 1 + red.design.new_group_sizes[1]);
}

TEST(PcaReduce, FullRetentionKeepsEveryComponent)
{
    const LmmProblem problem = random_problem(2, 30, 3, {5, 7});
    const PcaReduction red = pca_reduce(problem, 1.0);
    EXPECT_EQ(red.design.new_group_sizes, (std::vector<Index>{5, 7}));
}

TEST(PcaReduce, ReconstructionAndOrthogonality)
{
    ScenarioSpec spec = default_spec(Scenario::Fig5);
    spec.p = 10;
    const GeneratedInstance inst = generate(spec);
    for (double threshold : {0.5, 0.8, 0.95}) {
        const PcaReduction red = pca_reduce(inst.problem, threshold);
        const auto& d = red.design;
        Index offset = 0, total = 0;
        for (std::size_t g = 0; g < 2; ++g) {
            const MatrixXd block = inst.problem.z.middleCols(inst.problem.groups.offset(g), inst.problem.groups.size(g));
            const MatrixXd centered = block.rowwise() - d.column_means[g].transpose();
            const MatrixXd scores = d.z_reduced.middleCols(offset, d.new_group_sizes[g]);
            const double lost = (centered - scores * d.loadings[g].transpose()).squaredNorm() / centered.squaredNorm();
            EXPECT_LE(lost, 1.0 - threshold + 1e-10);
            EXPECT_GE(d.explained[g], threshold * (1 - 1e-12));

            MatrixXd gram = scores.transpose() * scores;
            const double scale = gram.diagonal().maxCoeff();
            gram.diagonal().setZero();
            EXPECT_LT(gram.cwiseAbs().maxCoeff(), 1e-8 * scale);
            offset += d.new_group_sizes[g];
            total += d.new_group_sizes[g];
        }
        EXPECT_EQ(total, red.problem.q());
        EXPECT_LT(red.problem.q(), inst.problem.q());
        EXPECT_EQ(red.problem.x, inst.problem.x);
        EXPECT_EQ(red.problem.y, inst.problem.y);
    }
}

TEST(PcaReduce, Validation)
{
    const LmmProblem problem = random_problem(3, 10, 2, {3});
    EXPECT_THROW(pca_reduce(problem, 0.0), Error);
    EXPECT_THROW(pca_reduce(problem, 1.5), Error);
    EXPECT_THROW(pca_reduce(plain_problem(problem.x, problem.y)), Error);
}

// Reduced effects are linear in Gaussian u, so their moments stay Gaussian.
TEST(PcaReduce, ReducedEffectsLookGaussian)
{
    ScenarioSpec spec = default_spec(Scenario::Fig5);
    spec.p = 10;
    const GeneratedInstance inst = generate(spec);
    const PcaReduction red = pca_reduce(inst.problem);
    const VectorXd direction = red.design.loadings[1].col(0);
    std::mt19937_64 rng(9);
    const int reps = 5000;
    std::vector<double> v(reps);
    for (int r = 0; r < reps; ++r)
        v[r] = direction.dot(gaussian_vector(rng, direction.size()));
    double mean = 0, m2 = 0, m3 = 0, m4 = 0;
    for (double x : v)
        mean += x / reps;
    for (double x : v) {
        const double d = x - mean;
        m2 += d * d / reps;
        m3 += d * d * d / reps;
        m4 += d * d * d * d / reps;
    }
    EXPECT_LT(std::abs(m3 / std::pow(m2, 1.5)), 0.3);
    EXPECT_LT(std::abs(m4 / (m2 * m2) - 3.0), 0.3);
}

// With centered Z, identity weights and every component kept, the reduction is
// an orthogonal change of variables for u and selection is unchanged.
TEST(SelectWithReduction, FullRetentionMatchesDirectFit)
{
    ScenarioSpec spec = default_spec(Scenario::Fig1);
    spec.s0 = 3;
    GeneratedInstance inst = generate(spec);
    LmmProblem& problem = inst.problem;
    problem.z = problem.z.rowwise() - problem.z.colwise().mean();
    GridSpec grid;
    grid.lambda_count = 15;
    grid.capital_lambdas = {0.1, 1.0, 10.0};
    const PathResult direct = solve_path(problem, IdentityWeight{}, grid);
    const PathResult reduced = select_with_reduction(problem, 1.0, grid, {}, ReducedWeights::Identity);
    ASSERT_EQ(direct.size(), reduced.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
        EXPECT_EQ(direct.fits[i].support, reduced.fits[i].support) << i;
        EXPECT_LT((direct.fits[i].beta - reduced.fits[i].beta).cwiseAbs().maxCoeff(), 1e-6) << i;
    }
}

TEST(SelectWithReduction, ReducedDimensionBelowObservations)
{
    ScenarioSpec spec = default_spec(Scenario::Fig5);
    spec.p = 10;
    for (std::uint32_t r = 0; r < 3; ++r) {
        spec.replicate = r;
        const PcaReduction red = pca_reduce(generate(spec).problem);
        EXPECT_LT(red.problem.q(), spec.n);
    }
}
