#pragma once

#include "lmmselect/model.hpp"

namespace lmmselect {

/// Moore-Penrose inverse by SVD; singular values at or below
/// max(rows, cols) * sigma_max * eps are treated as zero.
MatrixXd pseudoinverse(const MatrixXd& z);

/// Numerical rank with the same cutoff as pseudoinverse().
Index numerical_rank(const MatrixXd& z);

/// Data with the column space of Z projected out: P = I - Z Z^+.
struct ProjectedProblem {
    MatrixXd x_tilde;
    VectorXd y_tilde;
    MatrixXd projector;
    Index projector_rank = 0;
};

ProjectedProblem project_out(const LmmProblem& problem);

/// Plain LASSO problem (q = 0) on the projected data.
LmmProblem as_plain_problem(const ProjectedProblem& projected);

/// Spectral rotation under the one-component null model
/// Y ~ N(0, sigma2 (gamma K + I)) with K = Z Z' / q.
struct RotatedProblem {
    MatrixXd x_tilde;
    VectorXd y_tilde;
    double gamma_hat = 0.0;
    double sigma2_hat = 0.0;
    bool gamma_at_boundary = false;
    MatrixXd eigenvectors;  // U
    VectorXd eigenvalues;   // of K, ascending, clamped at 0
};

struct GammaSearch {
    double lower = 1e-5;
    double upper = 1e5;
    int iterations = 60;
};

/// Profiled null-model log-likelihood in gamma. `rotated_y` is U'Y and
/// `eigenvalues` the spectrum of K.
double null_log_likelihood(const VectorXd& eigenvalues, const VectorXd& rotated_y, double gamma);

/// Golden-section search on log gamma, then rotation by (gamma K_diag + I)^{-1/2} U'.
RotatedProblem rotate_lmm_lasso(const LmmProblem& problem, const GammaSearch& search = {});

/// Rotation for a fixed gamma (no likelihood fit; sigma2_hat is still profiled).
RotatedProblem rotate_with_gamma(const LmmProblem& problem, double gamma);

LmmProblem as_plain_problem(const RotatedProblem& rotated);

} // namespace lmmselect
