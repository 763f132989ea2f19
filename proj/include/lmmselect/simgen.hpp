#pragma once

#include "lmmselect/model.hpp"
#include "lmmselect/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lmmselect {

enum class Scenario { Fig1, Fig2, FigD2, Fig3, Fig4, Fig5 };

std::string scenario_name(Scenario scenario);
/// Accepts the names produced by scenario_name(); throws UnknownScenario otherwise.
Scenario parse_scenario(const std::string& name);

enum class DesignScaling {
    Standardize, // center, then scale to ||x_j||^2 = n
    UnitNorm,    // scale to ||x_j|| = 1 without centering
};

struct ScenarioSpec {
    Scenario scenario = Scenario::Fig1;
    int covariance_case = 1; // FigD2 only: 1..5
    Index n = 120;
    Index p = 150;
    Index s0 = 1;
    double effect = 1.0;
    double noise_variance = 1.0;
    DesignScaling scaling = DesignScaling::Standardize;

    // Block designs (all but Fig2/Fig5): observations split evenly into
    // `observation_groups`; each variance component contributes one column
    // per observation group.
    Index observation_groups = 20;
    std::vector<double> component_variances{2.0, 2.0};

    // Fig5 design.
    Index soil_types = 50;
    Index substances = 200;
    Index weather_types = 20;
    Index days = 200;

    std::uint64_t master_seed = 0;
    std::uint32_t replicate = 0;

    /// Column counts of the variance-component groups in Z.
    std::vector<Index> group_sizes() const;
    Index q() const;
};

/// Defaults for a named scenario (n, p, variance components, noise, ...).
ScenarioSpec default_spec(Scenario scenario, int covariance_case = 1);

/// Throws InvalidArgument on inconsistent parameters.
void validate(const ScenarioSpec& spec);

struct GeneratedInstance {
    LmmProblem problem;
    VectorXd true_beta;
    std::vector<Index> true_support;
    VectorXd true_u;
    VectorXd noise;
    MatrixXd d_matrix;      // covariance actually used to draw u
    bool d_clamped = false; // negative eigenvalues of the nominal D were set to zero
    // Fig5 only: the type each observation was assigned.
    std::vector<Index> soil_of;
    std::vector<Index> weather_of;
};

/// The nominal random-effect covariance of `spec` before any PSD repair.
MatrixXd nominal_covariance(const ScenarioSpec& spec);

/// Deterministic in (spec, master_seed, replicate).
GeneratedInstance generate(const ScenarioSpec& spec);

/// True iff some fit on the path has support exactly equal to `true_support`.
bool exact_recovery(const PathResult& path, const std::vector<Index>& true_support);

/// Indices [0, p) sampled uniformly without replacement, sorted ascending.
std::vector<Index> sample_support(std::uint64_t master_seed, std::uint32_t replicate, Index p,
                                  Index s0);

} // namespace lmmselect
