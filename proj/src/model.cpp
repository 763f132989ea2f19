#include "lmmselect/model.hpp"

#include "lmmselect/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lmmselect {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_group_list(const std::vector<double>& values, const GroupStructure& groups,
                      const char* what)
{
    if (values.size() != groups.count()) {
        std::ostringstream msg;
        msg << what << " has " << values.size() << " entries but there are " << groups.count()
            << " groups";
        throw Error(ErrorCode::GroupSumMismatch, msg.str());
    }
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw Error(ErrorCode::InvalidArgument, std::string(what) + " entries must be positive");
    }
}

void check_full_matrix(const MatrixXd& w, Index q)
{
    if (w.rows() != q || w.cols() != q) {
        std::ostringstream msg;
        msg << "weight matrix is " << w.rows() << "x" << w.cols() << ", expected " << q << "x" << q;
        throw Error(ErrorCode::DimensionMismatch, msg.str());
    }
    if (q == 0)
        return;
    if (!w.allFinite())
        throw Error(ErrorCode::NonPsdWeight, "weight matrix has non-finite entries");
    const double scale = w.cwiseAbs().maxCoeff();
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0))
        throw Error(ErrorCode::NonPsdWeight, "weight matrix is not symmetric");
    const MatrixXd sym = 0.5 * (w + w.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    const double smallest = eig.eigenvalues().minCoeff();
    const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (smallest < -1e-10 * norm) {
        std::ostringstream msg;
        msg << "weight matrix has eigenvalue " << smallest;
        throw Error(ErrorCode::NonPsdWeight, msg.str());
    }
}

} // namespace

GroupStructure::GroupStructure(std::vector<Index> sizes) : sizes_(std::move(sizes))
{
    offsets_.reserve(sizes_.size());
    for (Index s : sizes_) {
        if (s <= 0)
            throw Error(ErrorCode::InvalidArgument, "group sizes must be positive");
        offsets_.push_back(total_);
        total_ += s;
    }
}

std::size_t GroupStructure::group_of(Index column) const
{
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), column);
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

std::string weight_kind_name(const WeightSpec& weights)
{
    return std::visit(Overloaded{
                          [](const IdentityWeight&) { return std::string("identity"); },
                          [](const PerGroupParams&) { return std::string("per_group_params"); },
                          [](const PerGroupWeights&) { return std::string("per_group_weights"); },
                          [](const FullMatrixWeight&) { return std::string("full_matrix"); },
                      },
                      weights);
}

void validate(const LmmProblem& problem)
{
    const Index n = problem.y.size();
    if (problem.x.rows() != n || problem.z.rows() != n) {
        std::ostringstream msg;
        msg << "y has " << n << " rows, x has " << problem.x.rows() << ", z has "
            << problem.z.rows();
        throw Error(ErrorCode::DimensionMismatch, msg.str());
    }
    if (n == 0)
        throw Error(ErrorCode::DimensionMismatch, "problem has no observations");
    if (problem.x.cols() < 1)
        throw Error(ErrorCode::DimensionMismatch, "x must have at least one column");
    if (problem.groups.total() != problem.z.cols()) {
        std::ostringstream msg;
        msg << "group sizes sum to " << problem.groups.total() << " but z has "
            << problem.z.cols() << " columns";
        throw Error(ErrorCode::GroupSumMismatch, msg.str());
    }
    if (!problem.y.allFinite() || !problem.x.allFinite() || !problem.z.allFinite())
        throw Error(ErrorCode::InvalidArgument, "problem data contains non-finite values");
}

void validate(const LmmProblem& problem, const WeightSpec& weights)
{
    validate(problem);
    std::visit(Overloaded{
                   [](const IdentityWeight&) {},
                   [&](const PerGroupParams& w) {
                       check_group_list(w.lambdas, problem.groups, "per-group parameter list");
                   },
                   [&](const PerGroupWeights& w) {
                       check_group_list(w.weights, problem.groups, "per-group weight list");
                   },
                   [&](const FullMatrixWeight& w) { check_full_matrix(w.w, problem.q()); },
               },
               weights);
}

void validate(const SolverConfig& config)
{
    if (!(config.tol > 0.0) || !(config.kkt_tol > 0.0) || config.max_iter < 1)
        throw Error(ErrorCode::InvalidArgument, "solver config needs tol > 0, kkt_tol > 0, max_iter >= 1");
}

MatrixXd effective_weight_matrix(const WeightSpec& weights, const GroupStructure& groups)
{
    const Index q = groups.total();
    auto block_diagonal = [&](const std::vector<double>& values, const char* what) {
        check_group_list(values, groups, what);
        MatrixXd w = MatrixXd::Zero(q, q);
        for (std::size_t g = 0; g < groups.count(); ++g)
            w.diagonal().segment(groups.offset(g), groups.size(g)).setConstant(values[g]);
        return w;
    };
    return std::visit(Overloaded{
                          [&](const IdentityWeight&) -> MatrixXd { return MatrixXd::Identity(q, q); },
                          [&](const PerGroupParams& w) -> MatrixXd {
                              return block_diagonal(w.lambdas, "per-group parameter list");
                          },
                          [&](const PerGroupWeights& w) -> MatrixXd {
                              return block_diagonal(w.weights, "per-group weight list");
                          },
                          [&](const FullMatrixWeight& w) -> MatrixXd {
                              if (w.w.rows() != q || w.w.cols() != q)
                                  throw Error(ErrorCode::GroupSumMismatch,
                                              "weight matrix size does not match the group total");
                              return w.w;
                          },
                      },
                      weights);
}

double effective_capital_lambda(const WeightSpec& weights, double capital_lambda) noexcept
{
    return std::holds_alternative<PerGroupParams>(weights) ? 1.0 : capital_lambda;
}

double objective_value(const LmmProblem& problem, const MatrixXd& w_eff, double lambda,
                       double capital_lambda, const VectorXd& beta, const VectorXd& u)
{
    VectorXd r = problem.y - design_times(problem.x, beta);
    double penalty_u = 0.0;
    if (problem.q() > 0) {
        r.noalias() -= problem.z * u;
        penalty_u = capital_lambda * u.dot(w_eff * u);
    }
    return r.squaredNorm() + lambda * beta.lpNorm<1>() + penalty_u;
}

std::vector<Index> support_of(const VectorXd& beta)
{
    std::vector<Index> support;
    for (Index j = 0; j < beta.size(); ++j) {
        if (beta[j] != 0.0)
            support.push_back(j);
    }
    return support;
}


VectorXd design_times(const MatrixXd& x, const VectorXd& beta)
{
    const Index nonzero = (beta.array() != 0.0).count();
    if (4 * nonzero > beta.size())
        return x * beta;
    VectorXd out = VectorXd::Zero(x.rows());
    for (Index j = 0; j < beta.size(); ++j) {
        if (beta[j] != 0.0)
            out.noalias() += beta[j] * x.col(j);
    }
    return out;
}

} // namespace lmmselect
