#include "openasc/error.hpp"

namespace openasc {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::CorruptFile: return "CorruptFile";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::EmptyClass: return "EmptyClass";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::InvalidThreshold: return "InvalidThreshold";
        case ErrorCode::ShapeError: return "ShapeError";
        case ErrorCode::MissingConditioning: return "MissingConditioning";
        case ErrorCode::NoCache: return "NoCache";
        case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorCode::RegimeViolation: return "RegimeViolation";
        case ErrorCode::DegenerateVector: return "DegenerateVector";
        case ErrorCode::UnfittableClass: return "UnfittableClass";
        case ErrorCode::NotFitted: return "NotFitted";
        case ErrorCode::PipelineMismatch: return "PipelineMismatch";
        case ErrorCode::UndefinedMetric: return "UndefinedMetric";
    }
    return "UnknownError";
}

bool is_input_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnsupportedFormat:
        case ErrorCode::CorruptFile:
        case ErrorCode::IoError:
        case ErrorCode::EmptyClass:
        case ErrorCode::EmptyDataset:
        case ErrorCode::InvalidParameter:
        case ErrorCode::InvalidConfig:
        case ErrorCode::InvalidInput:
        case ErrorCode::InvalidThreshold:
        case ErrorCode::NoCache:
        case ErrorCode::RegimeViolation:
        case ErrorCode::PipelineMismatch:
            return true;
        default:
            return false;
    }
}

}  // namespace openasc
