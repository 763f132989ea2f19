#pragma once

#include "lmmselect/model.hpp"
#include "lmmselect/solver.hpp"

#include <vector>

namespace lmmselect {

/// Per-group principal-component compression of Z.
struct ReducedRandomDesign {
    MatrixXd z_reduced;               // n x q', per-group score blocks side by side
    std::vector<MatrixXd> loadings;   // group i: q_i x k_i principal directions
    std::vector<VectorXd> column_means;
    std::vector<double> explained;    // cumulative explained fraction actually kept
    std::vector<Index> new_group_sizes;
};

struct PcaReduction {
    LmmProblem problem; // X and Y unchanged, Z replaced by the scores
    ReducedRandomDesign design;
};

/// Centers each group's columns and keeps the fewest leading components whose
/// cumulative share of the block's squared Frobenius norm reaches `threshold`.
PcaReduction pca_reduce(const LmmProblem& problem, double threshold = 0.95);

enum class ReducedWeights {
    Correlation, // per-group correlation weights on the reduced groups
    Identity,
};

/// pca_reduce, then a regularization path on the reduced problem. Beta indices
/// refer to the original X.
PathResult select_with_reduction(const LmmProblem& problem, double threshold,
                                 const GridSpec& grid, const SolverConfig& config = {},
                                 ReducedWeights weights = ReducedWeights::Correlation);

} // namespace lmmselect
