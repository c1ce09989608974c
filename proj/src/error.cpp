#include "impforecast/error.hpp"

namespace impforecast {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyFile: return "EmptyFile";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::BadNumber: return "BadNumber";
        case ErrorCode::NonPositive: return "NonPositive";
        case ErrorCode::WrongArity: return "WrongArity";
        case ErrorCode::InvalidCount: return "InvalidCount";
        case ErrorCode::TooSmall: return "TooSmall";
        case ErrorCode::UnlabeledCohort: return "UnlabeledCohort";
        case ErrorCode::InvalidCohort: return "InvalidCohort";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::InvalidHyperParam: return "InvalidHyperParam";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::Empty: return "Empty";
        case ErrorCode::AllCandidatesFailed: return "AllCandidatesFailed";
        case ErrorCode::IncompatibleBundle: return "IncompatibleBundle";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

bool is_data_error(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyFile:
        case ErrorCode::MissingColumn:
        case ErrorCode::BadNumber:
        case ErrorCode::NonPositive:
        case ErrorCode::WrongArity:
        case ErrorCode::InvalidCount:
        case ErrorCode::TooSmall:
        case ErrorCode::UnlabeledCohort:
        case ErrorCode::InvalidCohort:
        case ErrorCode::InvalidArgument:
        case ErrorCode::IncompatibleBundle:
        case ErrorCode::UnsupportedFormat:
        case ErrorCode::ParseError:
            return true;
        default:
            return false;
    }
}

}  // namespace impforecast
