#pragma once

#include <stdexcept>
#include <string>

namespace lmmselect {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    GroupSumMismatch,
    NonPsdWeight,
    NotPositiveDefinite,
    SingularRidge,
    DegenerateProjection,
    ZeroVarianceColumn,
    SingularPsi,
    UnknownScenario,
    EmptyGroupAfterReduction,
    Parse,
    Schema,
    Io,
};

// Coarse classes used by the CLI to pick an exit code.
enum class ErrorCategory { Validation, Numerical, Io };

const char* to_string(ErrorCode code) noexcept;
ErrorCategory category_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    ErrorCode code_;
};

} // namespace lmmselect
