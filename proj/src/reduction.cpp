#include "lmmselect/reduction.hpp"

#include "lmmselect/error.hpp"
#include "lmmselect/weights.hpp"

#include <Eigen/SVD>

namespace lmmselect {

namespace {

struct GroupPca {
    MatrixXd scores;
    MatrixXd loadings;
    VectorXd means;
    double explained = 1.0;
};

GroupPca reduce_group(const MatrixXd& block, double threshold)
{
    GroupPca out;
    out.means = block.colwise().mean().transpose();
    const MatrixXd centered = block.rowwise() - out.means.transpose();
    Eigen::JacobiSVD<MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd power = svd.singularValues().array().square();
    const double total = power.sum();

    Index keep = 1;
    if (total > 0.0) {
        // Tiny slack so that threshold = 1 is not defeated by rounding in the sums.
        const double target = threshold * total * (1.0 - 1e-12);
        double running = power[0];
        while (keep < power.size() && running < target)
            running += power[keep++];
        out.explained = std::min(1.0, running / total);
    }
    out.loadings = svd.matrixV().leftCols(keep);
    out.scores = svd.matrixU().leftCols(keep) * svd.singularValues().head(keep).asDiagonal();
    return out;
}

} // namespace

PcaReduction pca_reduce(const LmmProblem& problem, double threshold)
{
    validate(problem);
    if (problem.q() == 0)
        throw Error(ErrorCode::InvalidArgument, "PCA reduction needs q >= 1");
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "PCA threshold must be in (0, 1]");

    const auto& groups = problem.groups;
    std::vector<GroupPca> parts;
    Index total = 0;
    for (std::size_t g = 0; g < groups.count(); ++g) {
        parts.push_back(reduce_group(problem.z.middleCols(groups.offset(g), groups.size(g)), threshold));
        if (parts.back().scores.cols() == 0)
            throw Error(ErrorCode::EmptyGroupAfterReduction, "group kept no components");
        total += parts.back().scores.cols();
    }

    PcaReduction out;
    auto& design = out.design;
    design.z_reduced.resize(problem.n(), total);
    Index offset = 0;
    for (auto& part : parts) {
        const Index k = part.scores.cols();
        design.z_reduced.middleCols(offset, k) = part.scores;
        offset += k;
        design.new_group_sizes.push_back(k);
        design.explained.push_back(part.explained);
        design.loadings.push_back(std::move(part.loadings));
        design.column_means.push_back(std::move(part.means));
    }
    out.problem.y = problem.y;
    out.problem.x = problem.x;
    out.problem.z = design.z_reduced;
    out.problem.groups = GroupStructure(design.new_group_sizes);
    return out;
}

PathResult select_with_reduction(const LmmProblem& problem, double threshold,
                                 const GridSpec& grid, const SolverConfig& config,
                                 ReducedWeights weights)
{
    const PcaReduction reduced = pca_reduce(problem, threshold);
    if (weights == ReducedWeights::Identity)
        return solve_path(reduced.problem, IdentityWeight{}, grid, config);
    return solve_path(reduced.problem, correlation_weights(reduced.problem), grid, config);
}

} // namespace lmmselect
