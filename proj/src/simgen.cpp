#include "lmmselect/simgen.hpp"

#include "lmmselect/error.hpp"
#include "lmmselect/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace lmmselect {

namespace {

struct NamedScenario {
    Scenario scenario;
    const char* name;
};

constexpr NamedScenario kScenarioNames[] = {
    {Scenario::Fig1, "fig1"}, {Scenario::Fig2, "fig2"}, {Scenario::FigD2, "figD2"},
    {Scenario::Fig3, "fig3"}, {Scenario::Fig4, "fig4"}, {Scenario::Fig5, "fig5"},
};

Index observation_group(Index i, Index n, Index groups)
{
    return i * groups / n;
}

void fill_uniform(MatrixXd& m, RandomStream& rng)
{
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            m(i, j) = rng.uniform();
}

void scale_columns(MatrixXd& x, DesignScaling scaling)
{
    const double n = static_cast<double>(x.rows());
    for (Index j = 0; j < x.cols(); ++j) {
        auto col = x.col(j);
        if (scaling == DesignScaling::Standardize)
            col.array() -= col.mean();
        const double norm = col.norm();
        if (norm == 0.0)
            continue;
        col /= scaling == DesignScaling::Standardize ? norm / std::sqrt(n) : norm;
    }
}

MatrixXd covariance_case(int which, Index half)
{
    const Index q = 2 * half;
    MatrixXd d = MatrixXd::Zero(q, q);
    if (which == 1) {
        d.setIdentity();
        return d;
    }
    d.diagonal().head(half).setConstant(2.0);
    d.diagonal().tail(half).setConstant(0.8);
    auto band = [&](Index offset, double value) {
        for (Index i = 0; i + offset < q; ++i)
            d(i, i + offset) = d(i + offset, i) = value;
    };
    switch (which) {
    case 2: break;
    case 3: band(1, 0.9); break;
    case 4:
        band(1, 0.9);
        band(2, 0.8);
        band(3, 0.7);
        break;
    case 5:
        for (Index b = 0; b < 2; ++b)
            for (Index i = 0; i < half; ++i)
                for (Index j = 0; j < half; ++j)
                    if (i != j)
                        d(b * half + i, b * half + j) = 0.8;
        break;
    default: throw Error(ErrorCode::InvalidArgument, "covariance case must be in 1..5");
    }
    return d;
}

MatrixXd block_random_design(const ScenarioSpec& spec, RandomStream& rng)
{
    const Index groups = spec.observation_groups;
    const Index components = static_cast<Index>(spec.component_variances.size());
    MatrixXd z = MatrixXd::Zero(spec.n, components * groups);
    for (Index i = 0; i < spec.n; ++i) {
        const Index g = observation_group(i, spec.n, groups);
        for (Index c = 0; c < components; ++c)
            z(i, c * groups + g) = rng.uniform();
    }
    return z;
}

MatrixXd membership_design(const ScenarioSpec& spec)
{
    MatrixXd z = MatrixXd::Zero(spec.n, spec.observation_groups);
    for (Index i = 0; i < spec.n; ++i)
        z(i, observation_group(i, spec.n, spec.observation_groups)) = 1.0;
    return z;
}

// Daily sunshine fraction: a seasonal cycle plus AR(1) weather noise, clipped to [0, 1].
MatrixXd weather_profiles(Index types, Index days, RandomStream& rng)
{
    constexpr double phi = 0.5;
    constexpr double innovation_sd = 0.15;
    MatrixXd profiles(types, days);
    for (Index w = 0; w < types; ++w) {
        double e = rng.normal() * innovation_sd / std::sqrt(1.0 - phi * phi);
        for (Index t = 0; t < days; ++t) {
            const double season = 0.5 + 0.3 * std::sin(2.0 * std::numbers::pi * double(t) / 365.0);
            profiles(w, t) = std::clamp(season + e, 0.0, 1.0);
            e = phi * e + innovation_sd * rng.normal();
        }
    }
    return profiles;
}

MatrixXd soil_profiles(Index types, Index substances, RandomStream& rng)
{
    MatrixXd profiles(types, substances);
    for (Index s = 0; s < types; ++s)
        for (Index k = 0; k < substances; ++k)
            profiles(s, k) = rng.uniform();
    return profiles;
}

bool is_diagonal(const MatrixXd& d)
{
    for (Index j = 0; j < d.cols(); ++j)
        for (Index i = 0; i < d.rows(); ++i)
            if (i != j && d(i, j) != 0.0)
                return false;
    return true;
}

} // namespace

std::string scenario_name(Scenario scenario)
{
    for (const auto& entry : kScenarioNames)
        if (entry.scenario == scenario)
            return entry.name;
    return "unknown";
}

Scenario parse_scenario(const std::string& name)
{
    for (const auto& entry : kScenarioNames)
        if (name == entry.name)
            return entry.scenario;
    throw Error(ErrorCode::UnknownScenario, "unknown scenario '" + name + "'");
}

std::vector<Index> ScenarioSpec::group_sizes() const
{
    switch (scenario) {
    case Scenario::Fig2: return {observation_groups};
    case Scenario::Fig5: return {days, substances};
    default: break;
    }
    return std::vector<Index>(component_variances.size(), observation_groups);
}

Index ScenarioSpec::q() const
{
    const auto sizes = group_sizes();
    return std::accumulate(sizes.begin(), sizes.end(), Index{0});
}

ScenarioSpec default_spec(Scenario scenario, int covariance_case)
{
    ScenarioSpec spec;
    spec.scenario = scenario;
    switch (scenario) {
    case Scenario::Fig1:
        break;
    case Scenario::Fig2:
        spec.n = 200;
        spec.p = 5000;
        spec.component_variances = {1.0};
        spec.noise_variance = 0.2;
        break;
    case Scenario::FigD2:
        spec.n = 200;
        spec.p = 5000;
        spec.s0 = 10;
        spec.component_variances = {1.0, 1.0};
        spec.noise_variance = 0.2;
        spec.covariance_case = covariance_case;
        break;
    case Scenario::Fig3:
        spec.n = 200;
        spec.p = 10000;
        spec.component_variances = {1.0, 1.2, 0.8};
        spec.noise_variance = 0.1;
        break;
    case Scenario::Fig4:
        spec.n = 200;
        spec.p = 10000;
        spec.component_variances = {2.0, 4.0, 0.5};
        spec.noise_variance = 0.1;
        break;
    case Scenario::Fig5:
        spec.n = 200;
        spec.p = 2000;
        spec.component_variances = {1.0, 1.0};
        spec.noise_variance = 0.2;
        break;
    }
    return spec;
}

void validate(const ScenarioSpec& spec)
{
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
    if (spec.n < 1 || spec.p < 1)
        fail("scenario needs n >= 1 and p >= 1");
    if (spec.s0 < 0 || spec.s0 > spec.p)
        fail("scenario needs 0 <= s0 <= p");
    if (!(spec.noise_variance >= 0.0) || !std::isfinite(spec.effect))
        fail("noise variance must be nonnegative and the effect finite");
    if (spec.observation_groups < 1 || spec.observation_groups > spec.n)
        fail("observation groups must be in [1, n]");
    for (double v : spec.component_variances)
        if (!(v >= 0.0))
            fail("component variances must be nonnegative");
    if (spec.scenario == Scenario::Fig5) {
        if (spec.component_variances.size() != 2)
            fail("fig5 has exactly two variance components (weather, soil)");
        if (spec.soil_types < 1 || spec.substances < 1 || spec.weather_types < 1 || spec.days < 1)
            fail("fig5 type and profile counts must be positive");
    } else if (spec.scenario == Scenario::Fig2) {
        if (spec.component_variances.size() != 1)
            fail("fig2 has exactly one variance component");
    } else if (spec.component_variances.empty()) {
        fail("block designs need at least one variance component");
    }
    if (spec.scenario == Scenario::FigD2) {
        if (spec.component_variances.size() != 2)
            fail("figD2 has exactly two variance components");
        if (spec.covariance_case < 1 || spec.covariance_case > 5)
            fail("figD2 covariance case must be in 1..5");
    }
}

MatrixXd nominal_covariance(const ScenarioSpec& spec)
{
    validate(spec);
    if (spec.scenario == Scenario::FigD2)
        return covariance_case(spec.covariance_case, spec.observation_groups);
    const auto sizes = spec.group_sizes();
    VectorXd diag(spec.q());
    Index offset = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        diag.segment(offset, sizes[g]).setConstant(spec.component_variances[g]);
        offset += sizes[g];
    }
    return diag.asDiagonal();
}

std::vector<Index> sample_support(std::uint64_t master_seed, std::uint32_t replicate, Index p,
                                  Index s0)
{
    if (s0 < 0 || s0 > p || p > Index{0xffffffff})
        throw Error(ErrorCode::InvalidArgument, "support size must be in [0, p]");
    RandomStream rng(master_seed, replicate, StreamTag::Support);
    std::vector<Index> pool(static_cast<std::size_t>(p));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index k = 0; k < s0; ++k) {
        const auto j = k + static_cast<Index>(rng.below(static_cast<std::uint32_t>(p - k)));
        std::swap(pool[k], pool[j]);
    }
    std::vector<Index> support(pool.begin(), pool.begin() + s0);
    std::sort(support.begin(), support.end());
    return support;
}

GeneratedInstance generate(const ScenarioSpec& spec)
{
    validate(spec);
    const Index n = spec.n;
    const Index p = spec.p;
    GeneratedInstance out;

    RandomStream x_rng(spec.master_seed, spec.replicate, StreamTag::FixedDesign);
    MatrixXd x(n, p);
    fill_uniform(x, x_rng);
    scale_columns(x, spec.scaling);

    MatrixXd z;
    if (spec.scenario == Scenario::Fig2) {
        z = membership_design(spec);
    } else if (spec.scenario == Scenario::Fig5) {
        RandomStream profile_rng(spec.master_seed, spec.replicate, StreamTag::Profiles);
        const MatrixXd weather = weather_profiles(spec.weather_types, spec.days, profile_rng);
        const MatrixXd soil = soil_profiles(spec.soil_types, spec.substances, profile_rng);
        RandomStream member_rng(spec.master_seed, spec.replicate, StreamTag::Membership);
        z.resize(n, spec.days + spec.substances);
        for (Index i = 0; i < n; ++i) {
            const auto s = static_cast<Index>(member_rng.below(static_cast<std::uint32_t>(spec.soil_types)));
            const auto w = static_cast<Index>(member_rng.below(static_cast<std::uint32_t>(spec.weather_types)));
            out.soil_of.push_back(s);
            out.weather_of.push_back(w);
            z.row(i).head(spec.days) = weather.row(w);
            z.row(i).tail(spec.substances) = soil.row(s);
        }
    } else {
        RandomStream z_rng(spec.master_seed, spec.replicate, StreamTag::RandomDesign);
        z = block_random_design(spec, z_rng);
    }

    out.true_support = sample_support(spec.master_seed, spec.replicate, p, spec.s0);
    out.true_beta = VectorXd::Zero(p);
    for (Index j : out.true_support)
        out.true_beta[j] = spec.effect;

    const MatrixXd d = nominal_covariance(spec);
    RandomStream u_rng(spec.master_seed, spec.replicate, StreamTag::RandomEffects);
    VectorXd standard(d.rows());
    for (Index k = 0; k < standard.size(); ++k)
        standard[k] = u_rng.normal();
    if (is_diagonal(d)) {
        out.d_matrix = d;
        out.true_u = d.diagonal().cwiseSqrt().cwiseProduct(standard);
    } else {
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(d);
        const VectorXd values = eig.eigenvalues();
        out.d_clamped = values.minCoeff() < -1e-12 * values.cwiseAbs().maxCoeff();
        const VectorXd kept = values.cwiseMax(0.0);
        const MatrixXd& v = eig.eigenvectors();
        out.d_matrix = v * kept.asDiagonal() * v.transpose();
        out.true_u = v * kept.cwiseSqrt().asDiagonal() * (v.transpose() * standard);
    }

    RandomStream noise_rng(spec.master_seed, spec.replicate, StreamTag::Noise);
    out.noise.resize(n);
    const double sd = std::sqrt(spec.noise_variance);
    for (Index i = 0; i < n; ++i)
        out.noise[i] = sd * noise_rng.normal();

    out.problem.y = x * out.true_beta + z * out.true_u + out.noise;
    out.problem.x = std::move(x);
    out.problem.z = std::move(z);
    out.problem.groups = GroupStructure(spec.group_sizes());
    return out;
}

bool exact_recovery(const PathResult& path, const std::vector<Index>& true_support)
{
    for (std::size_t i = 0; i < path.size(); ++i)
        if (path.ok(i) && path.fits[i].support == true_support)
            return true;
    return false;
}

} // namespace lmmselect
