#include "lmmselect/transforms.hpp"

#include "lmmselect/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numbers>

namespace lmmselect {

namespace {

double svd_cutoff(const MatrixXd& z, const VectorXd& singular)
{
    const double sigma_max = singular.size() > 0 ? singular.maxCoeff() : 0.0;
    return static_cast<double>(std::max(z.rows(), z.cols())) * sigma_max *
           std::numeric_limits<double>::epsilon();
}

Eigen::JacobiSVD<MatrixXd> thin_svd(const MatrixXd& z)
{
    return Eigen::JacobiSVD<MatrixXd>(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

Index rank_above(const VectorXd& singular, double cutoff)
{
    return (singular.array() > cutoff).count();
}

void require_random_part(const LmmProblem& problem)
{
    validate(problem);
    if (problem.q() == 0)
        throw Error(ErrorCode::InvalidArgument, "transform needs a random design with q >= 1");
}

LmmProblem plain(MatrixXd x, VectorXd y)
{
    LmmProblem out;
    out.z = MatrixXd(x.rows(), 0);
    out.x = std::move(x);
    out.y = std::move(y);
    return out;
}

} // namespace

MatrixXd pseudoinverse(const MatrixXd& z)
{
    if (z.size() == 0)
        return MatrixXd::Zero(z.cols(), z.rows());
    const auto svd = thin_svd(z);
    const VectorXd& s = svd.singularValues();
    const double cutoff = svd_cutoff(z, s);
    VectorXd inv = VectorXd::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        if (s[i] > cutoff)
            inv[i] = 1.0 / s[i];
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Index numerical_rank(const MatrixXd& z)
{
    if (z.size() == 0)
        return 0;
    const auto svd = Eigen::JacobiSVD<MatrixXd>(z);
    return rank_above(svd.singularValues(), svd_cutoff(z, svd.singularValues()));
}

ProjectedProblem project_out(const LmmProblem& problem)
{
    require_random_part(problem);
    const Index n = problem.n();
    const auto svd = thin_svd(problem.z);
    const VectorXd& s = svd.singularValues();
    const Index rank = rank_above(s, svd_cutoff(problem.z, s));
    if (rank >= n)
        throw Error(ErrorCode::DegenerateProjection,
                    "Z has full row rank; projecting it out leaves no data");

    // Z Z^+ is the orthogonal projector onto the leading left singular vectors.
    const MatrixXd basis = svd.matrixU().leftCols(rank);
    ProjectedProblem out;
    out.projector = -basis * basis.transpose();
    out.projector.diagonal().array() += 1.0;
    out.projector_rank = n - rank;
    out.x_tilde = out.projector * problem.x;
    out.y_tilde = out.projector * problem.y;
    return out;
}

LmmProblem as_plain_problem(const ProjectedProblem& projected)
{
    return plain(projected.x_tilde, projected.y_tilde);
}

double null_log_likelihood(const VectorXd& eigenvalues, const VectorXd& rotated_y, double gamma)
{
    const Index n = rotated_y.size();
    const VectorXd h = (gamma * eigenvalues.array() + 1.0).matrix();
    const double sigma2 = (rotated_y.array().square() / h.array()).sum() / static_cast<double>(n);
    const double nd = static_cast<double>(n);
    return -0.5 * (nd * std::log(2.0 * std::numbers::pi * sigma2) + h.array().log().sum() + nd);
}

namespace {

struct Spectrum {
    MatrixXd u;
    VectorXd eigenvalues;
};

Spectrum kinship_spectrum(const LmmProblem& problem)
{
    MatrixXd k = problem.z * problem.z.transpose() / static_cast<double>(problem.q());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(k);
    return {eig.eigenvectors(), eig.eigenvalues().cwiseMax(0.0)};
}

RotatedProblem rotate(const LmmProblem& problem, Spectrum spectrum, double gamma)
{
    RotatedProblem out;
    const VectorXd rotated_y = spectrum.u.transpose() * problem.y;
    const VectorXd h = (gamma * spectrum.eigenvalues.array() + 1.0).matrix();
    const VectorXd scale = h.cwiseSqrt().cwiseInverse();
    out.gamma_hat = gamma;
    out.sigma2_hat = (rotated_y.array().square() / h.array()).sum() / static_cast<double>(problem.n());
    out.x_tilde = scale.asDiagonal() * (spectrum.u.transpose() * problem.x);
    out.y_tilde = scale.asDiagonal() * rotated_y;
    out.eigenvectors = std::move(spectrum.u);
    out.eigenvalues = std::move(spectrum.eigenvalues);
    return out;
}

} // namespace

RotatedProblem rotate_lmm_lasso(const LmmProblem& problem, const GammaSearch& search)
{
    require_random_part(problem);
    if (problem.n() < 2)
        throw Error(ErrorCode::InvalidArgument, "rotation needs at least two observations");
    if (!(search.lower > 0.0) || !(search.upper > search.lower) || search.iterations < 1)
        throw Error(ErrorCode::InvalidArgument, "gamma search needs 0 < lower < upper");

    Spectrum spectrum = kinship_spectrum(problem);
    const VectorXd rotated_y = spectrum.u.transpose() * problem.y;
    auto loglik = [&](double t) {
        return null_log_likelihood(spectrum.eigenvalues, rotated_y, std::exp(t));
    };

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(search.lower);
    double b = std::log(search.upper);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = loglik(c);
    double fd = loglik(d);
    for (int it = 0; it < search.iterations; ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = loglik(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = loglik(d);
        }
    }
    double best_t = fc >= fd ? c : d;
    double best = std::max(fc, fd);

    // The interior search cannot land exactly on an end point; check them directly.
    const double lo = std::log(search.lower);
    const double hi = std::log(search.upper);
    bool boundary = false;
    for (double t : {lo, hi}) {
        const double v = loglik(t);
        if (v > best) {
            best = v;
            best_t = t;
            boundary = true;
        }
    }
    const double width = hi - lo;
    if (best_t - lo < 1e-6 * width || hi - best_t < 1e-6 * width)
        boundary = true;

    RotatedProblem out = rotate(problem, std::move(spectrum), std::exp(best_t));
    out.gamma_at_boundary = boundary;
    return out;
}

RotatedProblem rotate_with_gamma(const LmmProblem& problem, double gamma)
{
    require_random_part(problem);
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw Error(ErrorCode::InvalidArgument, "gamma must be finite and nonnegative");
    return rotate(problem, kinship_spectrum(problem), gamma);
}

LmmProblem as_plain_problem(const RotatedProblem& rotated)
{
    return plain(rotated.x_tilde, rotated.y_tilde);
}

} // namespace lmmselect
