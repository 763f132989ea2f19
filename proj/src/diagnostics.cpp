#include "lmmselect/diagnostics.hpp"

#include "lmmselect/error.hpp"
#include "lmmselect/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <ostream>
#include <sstream>

namespace lmmselect {

namespace {

std::vector<Index> checked_support(const std::vector<Index>& support, Index p)
{
    if (support.empty())
        throw Error(ErrorCode::InvalidArgument, "true support must be nonempty");
    std::vector<Index> sorted = support;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() < 0 || sorted.back() >= p)
        throw Error(ErrorCode::InvalidArgument, "true support index out of range");
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw Error(ErrorCode::InvalidArgument, "true support has repeated indices");
    return sorted;
}

MatrixXd columns(const MatrixXd& x, const std::vector<Index>& idx)
{
    MatrixXd out(x.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k)
        out.col(static_cast<Index>(k)) = x.col(idx[k]);
    return out;
}

double sign_of(double v)
{
    return (v > 0.0) - (v < 0.0);
}

} // namespace

MatrixXd gram_matrix(const LmmProblem& problem)
{
    validate(problem);
    MatrixXd xz(problem.n(), problem.p() + problem.q());
    xz << problem.x, problem.z;
    MatrixXd g = MatrixXd::Zero(xz.cols(), xz.cols());
    g.selfadjointView<Eigen::Lower>().rankUpdate(xz.transpose(), 1.0 / double(problem.n()));
    return g.selfadjointView<Eigen::Lower>();
}

ConsistencyBlocks assemble_blocks(const LmmProblem& problem, const std::vector<Index>& true_support,
                                  double capital_lambda, const std::optional<VectorXd>& signs)
{
    validate(problem);
    if (!(capital_lambda >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "capital lambda must be nonnegative");
    ConsistencyBlocks out;
    out.support = checked_support(true_support, problem.p());
    const Index k = static_cast<Index>(out.support.size());
    const Index q = problem.q();
    const double n = static_cast<double>(problem.n());
    for (Index j = 0, s = 0; j < problem.p(); ++j) {
        if (s < k && out.support[s] == j)
            ++s;
        else
            out.complement.push_back(j);
    }
    if (signs && signs->size() != k)
        throw Error(ErrorCode::DimensionMismatch, "one sign per support index is required");

    out.phi.resize(k + q, problem.n());
    out.phi.topRows(k) = columns(problem.x, out.support).transpose();
    out.phi.bottomRows(q) = problem.z.transpose();

    out.psi = out.phi * out.phi.transpose() / n;
    out.psi.bottomRightCorner(q, q).diagonal().array() += capital_lambda / n;
    out.delta = columns(problem.x, out.complement).transpose() * out.phi.transpose() / n;

    out.theta_sign = VectorXd::Zero(k + q);
    for (Index s = 0; s < k; ++s)
        out.theta_sign[s] = signs ? sign_of((*signs)[s]) : 1.0;

    const VectorXd sv = Eigen::JacobiSVD<MatrixXd>(out.psi).singularValues();
    const double smallest = sv.size() ? sv[sv.size() - 1] : 0.0;
    out.psi_condition = smallest > 0.0 ? sv[0] / smallest : std::numeric_limits<double>::infinity();
    if (!(out.psi_condition <= 1e12)) {
        std::ostringstream msg;
        msg << "psi is singular (condition number " << out.psi_condition << ")";
        throw Error(ErrorCode::SingularPsi, msg.str());
    }
    return out;
}

double irrepresentable_value(const ConsistencyBlocks& blocks)
{
    if (blocks.delta.rows() == 0)
        return 0.0;
    if (!(blocks.psi_condition <= 1e12))
        throw Error(ErrorCode::SingularPsi, "psi is singular");
    const VectorXd a = blocks.psi.ldlt().solve(blocks.theta_sign);
    return (blocks.delta * a).cwiseAbs().maxCoeff();
}

bool sign_recovery(const PathResult& path, const VectorXd& true_beta)
{
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (!path.ok(i))
            continue;
        const VectorXd& b = path.fits[i].beta;
        bool match = b.size() == true_beta.size();
        for (Index j = 0; match && j < b.size(); ++j)
            match = sign_of(b[j]) == sign_of(true_beta[j]);
        if (match)
            return true;
    }
    return false;
}

std::vector<CurvePoint> sign_consistency_curve(const ScenarioSpec& scenario,
                                               std::span<const Index> n_list, Index replicates,
                                               const CurveOptions& options)
{
    if (replicates < 1)
        throw Error(ErrorCode::InvalidArgument, "replicates must be at least 1");
    for (Index n : n_list) {
        ScenarioSpec spec = scenario;
        spec.n = n;
        validate(spec);
    }

    enum class Outcome : char { Miss, Hit, Failed };
    const std::size_t total = n_list.size() * static_cast<std::size_t>(replicates);
    std::vector<Outcome> outcome(total, Outcome::Failed);
    parallel_for(total, options.jobs, [&](std::size_t task) {
        const std::size_t i = task / static_cast<std::size_t>(replicates);
        ScenarioSpec spec = scenario;
        spec.n = n_list[i];
        spec.replicate = static_cast<std::uint32_t>(task);
        try {
            const GeneratedInstance inst = generate(spec);
            const PathResult path = run_method(options.method, inst.problem, options.method_options,
                                               inst.d_matrix);
            outcome[task] = sign_recovery(path, inst.true_beta) ? Outcome::Hit : Outcome::Miss;
        } catch (const Error&) {
            outcome[task] = Outcome::Failed;
        }
    });

    std::vector<CurvePoint> curve;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        CurvePoint point;
        point.n = n_list[i];
        point.replicates = replicates;
        for (Index r = 0; r < replicates; ++r) {
            const Outcome o = outcome[i * static_cast<std::size_t>(replicates) + r];
            point.successes += o == Outcome::Hit;
            point.failures += o == Outcome::Failed;
        }
        point.rate = double(point.successes) / double(replicates);
        curve.push_back(point);
    }
    return curve;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve)
{
    out << "n,replicates,successes,rate\n";
    for (const auto& point : curve)
        out << point.n << ',' << point.replicates << ',' << point.successes << ',' << point.rate << '\n';
}

} // namespace lmmselect
