#pragma once

#include <stdexcept>
#include <string>

namespace acqsens {

enum class ErrorCode {
    MissingColumn,
    NonFiniteValue,
    DuplicateKey,
    EmptyTable,
    OutOfRange,
    MissingCovariate,
    ReferenceMethodAbsent,
    RankDeficientDesign,
    CompleteSeparation,
    UnknownCoefficient,
    ZeroVariance,
    SpecMismatch,
    DimensionMismatch,
    EmptyInput,
    NoConfigMeetsConstraints,
    EmptySubset,
    DegenerateGroups,
    AllZeroDiffs,
    InvalidSpec,
    InvalidConfig,
    IoError,
};

const char* error_code_name(ErrorCode code);

/// Library-wide exception type; `what()` starts with the error code name.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace acqsens
