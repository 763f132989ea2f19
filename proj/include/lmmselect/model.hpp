#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace lmmselect {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Partition of the random-design columns into variance-component groups.
/// Group i owns the contiguous column block [offset(i), offset(i) + size(i)).
class GroupStructure {
public:
    GroupStructure() = default;
    explicit GroupStructure(std::vector<Index> sizes);

    std::size_t count() const noexcept { return sizes_.size(); }
    Index size(std::size_t group) const { return sizes_.at(group); }
    Index offset(std::size_t group) const { return offsets_.at(group); }
    Index total() const noexcept { return total_; }
    const std::vector<Index>& sizes() const noexcept { return sizes_; }

    // Group owning column `column`; columns outside [0, total) are a precondition violation.
    std::size_t group_of(Index column) const;

    bool operator==(const GroupStructure&) const = default;

private:
    std::vector<Index> sizes_;
    std::vector<Index> offsets_;
    Index total_ = 0;
};

/// Y = X beta + Z u + eps. q = 0 (empty z) is allowed and means plain LASSO.
struct LmmProblem {
    VectorXd y;
    MatrixXd x;
    MatrixXd z;
    GroupStructure groups;

    Index n() const noexcept { return y.size(); }
    Index p() const noexcept { return x.cols(); }
    Index q() const noexcept { return z.cols(); }
};

// Penalty variants on u. All map to a q x q matrix via effective_weight_matrix().
struct IdentityWeight {};

/// Separate ridge parameter per group; the global multiplier is pinned to 1.
struct PerGroupParams {
    std::vector<double> lambdas;
};

/// Preselected per-group weights scaled by the global multiplier.
struct PerGroupWeights {
    std::vector<double> weights;
};

struct FullMatrixWeight {
    MatrixXd w;
};

using WeightSpec = std::variant<IdentityWeight, PerGroupParams, PerGroupWeights, FullMatrixWeight>;

std::string weight_kind_name(const WeightSpec& weights);

struct SolverConfig {
    enum class UpdateRule { Automatic, Naive, Covariance };

    double tol = 1e-8;          // max absolute coordinate change over a sweep
    long max_iter = 100000;     // sweeps
    double kkt_tol = 1e-6;
    UpdateRule update_rule = UpdateRule::Automatic;
    Index covariance_threshold = 5000; // Automatic switches to covariance updates when p exceeds this
};

struct FitResult {
    VectorXd beta;
    VectorXd u;
    std::vector<Index> support;
    double objective = 0.0;
    double kkt_residual = 0.0;
    long iterations = 0;
    double lambda = 0.0;
    double capital_lambda = 0.0;
    bool converged = true;
};

void validate(const LmmProblem& problem);
void validate(const LmmProblem& problem, const WeightSpec& weights);
void validate(const SolverConfig& config);

/// q x q matrix W such that the u-penalty is capital_lambda * u' W u.
MatrixXd effective_weight_matrix(const WeightSpec& weights, const GroupStructure& groups);

/// The multiplier actually applied to W: 1 for PerGroupParams, the argument otherwise.
double effective_capital_lambda(const WeightSpec& weights, double capital_lambda) noexcept;

/// ||y - X beta - Z u||^2 + lambda ||beta||_1 + capital_lambda u' W u
double objective_value(const LmmProblem& problem, const MatrixXd& w_eff, double lambda,
                       double capital_lambda, const VectorXd& beta, const VectorXd& u);

std::vector<Index> support_of(const VectorXd& beta);

/// X * beta, touching only the columns with nonzero beta when beta is sparse.
VectorXd design_times(const MatrixXd& x, const VectorXd& beta);

} // namespace lmmselect
