#include "lmmselect/weights.hpp"

#include "lmmselect/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace lmmselect {

namespace {

// Centered copy and its sum of squares; throws when the vector is constant.
VectorXd centered(const Eigen::Ref<const VectorXd>& v, const std::string& what, double& sum_sq)
{
    VectorXd c = v.array() - v.mean();
    sum_sq = c.squaredNorm();
    const double scale = v.cwiseAbs().maxCoeff();
    if (!(sum_sq > 0.0) || std::sqrt(sum_sq) <= 1e-14 * scale * std::sqrt(double(v.size())))
        throw Error(ErrorCode::ZeroVarianceColumn, what + " has zero variance");
    return c;
}

} // namespace

CorrelationSummary correlation_summary(const LmmProblem& problem)
{
    validate(problem);
    if (problem.q() == 0)
        throw Error(ErrorCode::InvalidArgument, "correlation weights need q >= 1");
    if (problem.n() < 2)
        throw Error(ErrorCode::ZeroVarianceColumn, "correlation needs at least two observations");

    double y_ss = 0.0;
    const VectorXd yc = centered(problem.y, "response", y_ss);
    CorrelationSummary out;
    const auto& groups = problem.groups;
    for (std::size_t g = 0; g < groups.count(); ++g) {
        double total = 0.0;
        for (Index k = 0; k < groups.size(g); ++k) {
            const Index col = groups.offset(g) + k;
            double z_ss = 0.0;
            std::ostringstream name;
            name << "Z column " << col;
            const VectorXd zc = centered(problem.z.col(col), name.str(), z_ss);
            const double rho = zc.dot(yc) / std::sqrt(z_ss * y_ss);
            total += std::min(1.0, std::abs(rho));
        }
        out.theta_per_group.push_back(total / static_cast<double>(groups.size(g)));
    }
    return out;
}

PerGroupWeights correlation_weights(const LmmProblem& problem, double floor)
{
    if (!(floor > 0.0))
        throw Error(ErrorCode::InvalidArgument, "weight floor must be positive");
    const CorrelationSummary summary = correlation_summary(problem);
    PerGroupWeights out;
    for (std::size_t g = 0; g < summary.theta_per_group.size(); ++g) {
        const double size = static_cast<double>(problem.groups.size(g));
        out.weights.push_back(std::max((1.0 - summary.theta_per_group[g]) / size, floor));
    }
    return out;
}

FullMatrixWeight weights_from_covariance(const MatrixXd& d)
{
    if (d.rows() != d.cols() || d.rows() == 0)
        throw Error(ErrorCode::DimensionMismatch, "covariance matrix must be square and nonempty");
    const MatrixXd sym = 0.5 * (d + d.transpose());
    const VectorXd eig = Eigen::SelfAdjointEigenSolver<MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues();
    const double norm = eig.cwiseAbs().maxCoeff();
    if (!(eig.minCoeff() > 1e-12 * norm)) {
        std::ostringstream msg;
        msg << "covariance matrix is not positive definite (smallest eigenvalue " << eig.minCoeff()
            << ")";
        throw Error(ErrorCode::NotPositiveDefinite, msg.str());
    }
    const MatrixXd inv = d.partialPivLu().inverse();
    return FullMatrixWeight{0.5 * (inv + inv.transpose())};
}

} // namespace lmmselect
