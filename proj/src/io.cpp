#include "lmmselect/io.hpp"

#include "lmmselect/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace lmmselect {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestFormat = "lmmselect-instance";
constexpr int kManifestVersion = 1;

[[noreturn]] void schema_error(const std::string& field, const std::string& what)
{
    throw Error(ErrorCode::Schema, "field '" + field + "': " + what);
}

template <class T>
T get_as(const Json& j, const std::string& field)
{
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        schema_error(field, "wrong type (" + std::string(j.type_name()) + ")");
    }
}

Index get_count(const Json& j, const std::string& field)
{
    if (!j.is_number_integer())
        schema_error(field, "expected an integer");
    const auto v = j.get<long long>();
    if (v < 0)
        schema_error(field, "must be nonnegative");
    return static_cast<Index>(v);
}

std::ifstream open_in(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    return out;
}

std::string scaling_name(DesignScaling s)
{
    return s == DesignScaling::Standardize ? "standardize" : "unit_norm";
}

} // namespace

std::string format_double(double value)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

MatrixXd parse_csv_matrix(std::istream& in, const std::string& source)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<double> row;
        std::size_t start = 0;
        for (std::size_t col = 1;; ++col) {
            const std::size_t end = std::min(line.find(',', start), line.size());
            std::size_t a = start, b = end;
            while (a < b && line[a] == ' ')
                ++a;
            while (b > a && line[b - 1] == ' ')
                --b;
            double v = 0.0;
            const auto res = std::from_chars(line.data() + a, line.data() + b, v);
            if (a == b || res.ec != std::errc() || res.ptr != line.data() + b) {
                std::ostringstream msg;
                msg << source << ":" << line_no << ":" << col << ": not a number: '"
                    << line.substr(a, b - a) << "'";
                throw Error(ErrorCode::Parse, msg.str());
            }
            row.push_back(v);
            if (end == line.size())
                break;
            start = end + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            std::ostringstream msg;
            msg << source << ":" << line_no << ":" << row.size() << ": expected "
                << rows.front().size() << " columns";
            throw Error(ErrorCode::Parse, msg.str());
        }
        rows.push_back(std::move(row));
    }
    const Index cols = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
    MatrixXd m(static_cast<Index>(rows.size()), cols);
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < cols; ++j)
            m(i, j) = rows[i][j];
    return m;
}

MatrixXd read_csv_matrix(const fs::path& path)
{
    auto in = open_in(path);
    return parse_csv_matrix(in, path.string());
}

void write_csv_matrix(std::ostream& out, const MatrixXd& m)
{
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j)
                out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

void write_csv_matrix(const fs::path& path, const MatrixXd& m)
{
    auto out = open_out(path);
    write_csv_matrix(out, m);
    if (!out)
        throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

Json to_json(const ScenarioSpec& spec)
{
    return Json{
        {"name", scenario_name(spec.scenario)},
        {"covariance_case", spec.covariance_case},
        {"n", spec.n},
        {"p", spec.p},
        {"s0", spec.s0},
        {"effect", spec.effect},
        {"noise_variance", spec.noise_variance},
        {"scaling", scaling_name(spec.scaling)},
        {"observation_groups", spec.observation_groups},
        {"component_variances", spec.component_variances},
        {"soil_types", spec.soil_types},
        {"substances", spec.substances},
        {"weather_types", spec.weather_types},
        {"days", spec.days},
        {"master_seed", spec.master_seed},
        {"replicate", spec.replicate},
    };
}

ScenarioSpec scenario_from_json(const Json& j)
{
    if (!j.is_object())
        schema_error("scenario", "expected an object");
    const std::string name = get_as<std::string>(require_field(j, "name", "scenario"), "scenario.name");
    int covariance_case = 1;
    if (j.contains("covariance_case"))
        covariance_case = static_cast<int>(get_count(j["covariance_case"], "scenario.covariance_case"));
    ScenarioSpec spec = default_spec(parse_scenario(name), covariance_case);

    for (const auto& [key, value] : j.items()) {
        const std::string field = "scenario." + key;
        if (key == "name" || key == "covariance_case")
            continue;
        if (key == "n")
            spec.n = get_count(value, field);
        else if (key == "p")
            spec.p = get_count(value, field);
        else if (key == "s0")
            spec.s0 = get_count(value, field);
        else if (key == "effect")
            spec.effect = get_as<double>(value, field);
        else if (key == "noise_variance")
            spec.noise_variance = get_as<double>(value, field);
        else if (key == "scaling") {
            const auto s = get_as<std::string>(value, field);
            if (s == "standardize")
                spec.scaling = DesignScaling::Standardize;
            else if (s == "unit_norm")
                spec.scaling = DesignScaling::UnitNorm;
            else
                schema_error(field, "expected 'standardize' or 'unit_norm'");
        } else if (key == "observation_groups")
            spec.observation_groups = get_count(value, field);
        else if (key == "component_variances")
            spec.component_variances = get_as<std::vector<double>>(value, field);
        else if (key == "soil_types")
            spec.soil_types = get_count(value, field);
        else if (key == "substances")
            spec.substances = get_count(value, field);
        else if (key == "weather_types")
            spec.weather_types = get_count(value, field);
        else if (key == "days")
            spec.days = get_count(value, field);
        else if (key == "master_seed")
            spec.master_seed = get_as<std::uint64_t>(value, field);
        else if (key == "replicate")
            spec.replicate = static_cast<std::uint32_t>(get_count(value, field));
        else
            schema_error(field, "unknown field");
    }
    try {
        validate(spec);
    } catch (const Error& e) {
        throw Error(ErrorCode::Schema, std::string("scenario: ") + e.what());
    }
    return spec;
}

VectorXd StoredInstance::true_beta() const
{
    VectorXd beta = VectorXd::Zero(problem.p());
    for (Index j : true_support)
        beta[j] = effect;
    return beta;
}

StoredInstance stored_from(const GeneratedInstance& instance, const ScenarioSpec& spec)
{
    StoredInstance out;
    out.problem = instance.problem;
    out.true_support = instance.true_support;
    out.effect = spec.effect;
    out.covariance = instance.d_matrix;
    out.covariance_clamped = instance.d_clamped;
    out.spec = spec;
    return out;
}

fs::path write_instance(const StoredInstance& instance, const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw Error(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());

    const auto& problem = instance.problem;
    Json files{{"x", "x.csv"}, {"z", "z.csv"}, {"y", "y.csv"}};
    write_csv_matrix(dir / "x.csv", problem.x);
    write_csv_matrix(dir / "z.csv", problem.z);
    write_csv_matrix(dir / "y.csv", problem.y);
    if (instance.covariance) {
        files["covariance"] = "d.csv";
        write_csv_matrix(dir / "d.csv", *instance.covariance);
    }

    Json manifest{
        {"format", kManifestFormat},
        {"version", kManifestVersion},
        {"n", problem.n()},
        {"p", problem.p()},
        {"q", problem.q()},
        {"group_sizes", problem.groups.sizes()},
        {"files", files},
        {"true_support", instance.true_support},
        {"effect", instance.effect},
        {"covariance_clamped", instance.covariance_clamped},
    };
    if (instance.spec)
        manifest["scenario"] = to_json(*instance.spec);

    const fs::path path = dir / "manifest.json";
    auto out = open_out(path);
    out << manifest.dump(2) << '\n';
    if (!out)
        throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
    return path;
}

const Json& require_field(const Json& j, const std::string& field, const std::string& context)
{
    const std::string name = context.empty() ? field : context + "." + field;
    if (!j.is_object() || !j.contains(field))
        schema_error(name, "missing");
    return j.at(field);
}

Json read_json_file(const fs::path& path)
{
    auto in = open_in(path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    }
}

StoredInstance load_instance(const fs::path& manifest_path)
{
    const Json m = read_json_file(manifest_path);
    if (!m.is_object())
        schema_error("manifest", "expected an object");
    if (get_as<std::string>(require_field(m, "format", ""), "format") != kManifestFormat)
        schema_error("format", "expected '" + std::string(kManifestFormat) + "'");
    if (get_count(require_field(m, "version", ""), "version") != kManifestVersion)
        schema_error("version", "unsupported version");

    const fs::path base = manifest_path.parent_path();
    const Json& files = require_field(m, "files", "");
    auto matrix = [&](const std::string& key) {
        return read_csv_matrix(base / get_as<std::string>(require_field(files, key, "files"), "files." + key));
    };

    StoredInstance out;
    auto& problem = out.problem;
    problem.x = matrix("x");
    problem.z = matrix("z");
    const MatrixXd y = matrix("y");
    if (y.cols() != 1 && y.rows() > 0)
        schema_error("files.y", "expected a single column");
    problem.y = y.rows() > 0 ? VectorXd(y.col(0)) : VectorXd();

    const Index n = get_count(require_field(m, "n", ""), "n");
    const Index p = get_count(require_field(m, "p", ""), "p");
    const Index q = get_count(require_field(m, "q", ""), "q");
    if (problem.y.size() != n || problem.x.rows() != n || problem.x.cols() != p)
        schema_error("n", "does not match the stored matrices");
    if (problem.z.rows() == 0 && q == 0)
        problem.z = MatrixXd(n, 0);
    if (problem.z.rows() != n || problem.z.cols() != q)
        schema_error("q", "does not match z");

    std::vector<Index> sizes;
    for (const auto& v : get_as<std::vector<Json>>(require_field(m, "group_sizes", ""), "group_sizes"))
        sizes.push_back(get_count(v, "group_sizes"));
    problem.groups = GroupStructure(sizes);

    if (m.contains("true_support")) {
        for (const auto& v : get_as<std::vector<Json>>(m["true_support"], "true_support")) {
            const Index j = get_count(v, "true_support");
            if (j >= p)
                schema_error("true_support", "index out of range");
            out.true_support.push_back(j);
        }
    }
    if (m.contains("effect"))
        out.effect = get_as<double>(m["effect"], "effect");
    if (m.contains("covariance_clamped"))
        out.covariance_clamped = get_as<bool>(m["covariance_clamped"], "covariance_clamped");
    if (files.contains("covariance"))
        out.covariance = matrix("covariance");
    if (m.contains("scenario"))
        out.spec = scenario_from_json(m["scenario"]);

    try {
        validate(problem);
    } catch (const Error& e) {
        throw Error(ErrorCode::Schema, std::string("manifest: ") + e.what());
    }
    return out;
}

} // namespace lmmselect
