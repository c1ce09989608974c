#pragma once

#include <stdexcept>
#include <string>

namespace impforecast {

enum class ErrorCode {
    // dataio
    EmptyFile,
    MissingColumn,
    BadNumber,
    NonPositive,
    WrongArity,
    InvalidCount,
    TooSmall,
    UnlabeledCohort,
    InvalidCohort,
    InvalidArgument,
    // regress
    EmptyMatrix,
    DimensionMismatch,
    DegenerateInput,
    NonFiniteLoss,
    InvalidHyperParam,
    // pipeline / report
    LengthMismatch,
    Empty,
    AllCandidatesFailed,
    IncompatibleBundle,
    UnsupportedFormat,
    ParseError,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable code. Row/column are filled in for
/// data errors that point into an input file (row is 1-based over data rows).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, long row = -1, std::string column = {})
        : std::runtime_error(message), code_(code), row_(row), column_(std::move(column)) {}

    ErrorCode code() const noexcept { return code_; }
    long row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    ErrorCode code_;
    long row_;
    std::string column_;
};

/// True for errors caused by user-supplied data rather than a program fault.
bool is_data_error(ErrorCode code) noexcept;

}  // namespace impforecast
