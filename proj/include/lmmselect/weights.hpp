#pragma once

#include "lmmselect/model.hpp"

#include <vector>

namespace lmmselect {

/// Mean |Pearson correlation| between each group's Z columns and Y.
struct CorrelationSummary {
    std::vector<double> theta_per_group;
};

CorrelationSummary correlation_summary(const LmmProblem& problem);

/// w_i = max((1 - theta_i) / q_i, floor): groups whose columns track Y closely
/// get a lighter ridge penalty.
PerGroupWeights correlation_weights(const LmmProblem& problem, double floor = 1e-6);

/// W = D^{-1}, symmetrized. D must be positive definite.
FullMatrixWeight weights_from_covariance(const MatrixXd& d);

} // namespace lmmselect
