#pragma once

#include "lmmselect/model.hpp"
#include "lmmselect/simgen.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lmmselect {

using Json = nlohmann::json;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Comma-separated numbers, one matrix row per line, no header. Errors carry
/// "source:row:column" (1-based).
MatrixXd parse_csv_matrix(std::istream& in, const std::string& source);
MatrixXd read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(std::ostream& out, const MatrixXd& m);
void write_csv_matrix(const std::filesystem::path& path, const MatrixXd& m);

Json to_json(const ScenarioSpec& spec);
/// Starts from default_spec() of the named scenario and overrides the fields
/// present. Unknown fields and wrong types throw Schema naming the field.
ScenarioSpec scenario_from_json(const Json& j);

/// Data as stored on disk: CSV matrices plus manifest.json.
struct StoredInstance {
    LmmProblem problem;
    std::vector<Index> true_support;
    double effect = 1.0;
    std::optional<MatrixXd> covariance;
    bool covariance_clamped = false;
    std::optional<ScenarioSpec> spec;

    VectorXd true_beta() const;
};

StoredInstance stored_from(const GeneratedInstance& instance, const ScenarioSpec& spec);

/// Writes x.csv, z.csv, y.csv, d.csv (when a covariance is known) and
/// manifest.json into `dir`, creating it. Returns the manifest path.
std::filesystem::path write_instance(const StoredInstance& instance, const std::filesystem::path& dir);

/// Matrix files are resolved relative to the manifest's directory.
StoredInstance load_instance(const std::filesystem::path& manifest);

/// Json helpers that throw Schema naming the offending field.
const Json& require_field(const Json& j, const std::string& field, const std::string& context);
Json read_json_file(const std::filesystem::path& path);

} // namespace lmmselect
