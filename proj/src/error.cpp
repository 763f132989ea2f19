#include "lmmselect/error.hpp"

namespace lmmselect {

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::GroupSumMismatch: return "GroupSumMismatch";
    case ErrorCode::NonPsdWeight: return "NonPsdWeight";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularRidge: return "SingularRidge";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::ZeroVarianceColumn: return "ZeroVarianceColumn";
    case ErrorCode::SingularPsi: return "SingularPsi";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::EmptyGroupAfterReduction: return "EmptyGroupAfterReduction";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Schema: return "Schema";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::SingularRidge:
    case ErrorCode::DegenerateProjection:
    case ErrorCode::ZeroVarianceColumn:
    case ErrorCode::SingularPsi:
    case ErrorCode::EmptyGroupAfterReduction:
        return ErrorCategory::Numerical;
    case ErrorCode::Io:
        return ErrorCategory::Io;
    default:
        return ErrorCategory::Validation;
    }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{
}

} // namespace lmmselect
