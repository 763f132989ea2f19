#pragma once

#include "lmmselect/methods.hpp"
#include "lmmselect/simgen.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace lmmselect {

/// (1/n) [X, Z]' [X, Z]. Dense (p + q)^2; meant for small problems and checks.
MatrixXd gram_matrix(const LmmProblem& problem);

/// Blocks of the Gram matrix partitioned by (support, non-support, Z).
/// The non-support/non-support block is never formed.
struct ConsistencyBlocks {
    std::vector<Index> support;
    std::vector<Index> complement;
    MatrixXd psi;        // [[S11, S13], [S31, S33 + (capital_lambda / n) I]]
    MatrixXd delta;      // [S21, S23]
    MatrixXd phi;        // [X(1)'; Z'], (k + q) x n
    VectorXd theta_sign; // (sign(beta0 on support), 0_q)
    double psi_condition = 0.0;
};

/// `signs` defaults to all +1. Throws SingularPsi when cond(psi) > 1e12.
ConsistencyBlocks assemble_blocks(const LmmProblem& problem, const std::vector<Index>& true_support,
                                  double capital_lambda,
                                  const std::optional<VectorXd>& signs = std::nullopt);

/// ||Delta Psi^{-1} theta_sign||_inf; the condition holds with margin eta
/// when this is below 1 - eta. Zero when the complement is empty.
double irrepresentable_value(const ConsistencyBlocks& blocks);

struct CurvePoint {
    Index n = 0;
    Index replicates = 0;
    Index successes = 0;
    Index failures = 0; // replicates whose generation or solve threw
    double rate = 0.0;  // successes / replicates
};

struct CurveOptions {
    Method method = Method::LmmConvex1;
    MethodOptions method_options;
    unsigned jobs = 1;
};

/// For each n, the fraction of replicates where some grid point has
/// sign(beta_hat) == sign(beta0), zeros included. Replicate r at the i-th n
/// uses replicate index i * replicates + r of the scenario's master seed.
std::vector<CurvePoint> sign_consistency_curve(const ScenarioSpec& scenario,
                                               std::span<const Index> n_list, Index replicates,
                                               const CurveOptions& options = {});

bool sign_recovery(const PathResult& path, const VectorXd& true_beta);

/// Columns n, replicates, successes, rate.
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

} // namespace lmmselect
