#pragma once

#include <stdexcept>
#include <string>

namespace openasc {

// Failure identities surfaced by the toolkit. Codes marked as input errors
// map to process exit code 2; everything else is an internal error (exit 1).
enum class ErrorCode {
    UnsupportedFormat,
    CorruptFile,
    IoError,
    EmptyClass,
    EmptyDataset,
    InvalidParameter,
    InvalidConfig,
    InvalidInput,
    InvalidThreshold,
    ShapeError,
    MissingConditioning,
    NoCache,
    NonFiniteGradient,
    RegimeViolation,
    DegenerateVector,
    UnfittableClass,
    NotFitted,
    PipelineMismatch,
    UndefinedMetric,
};

const char* error_code_name(ErrorCode code);

// True for conditions caused by bad user input (files, config, arguments).
bool is_input_error(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }
    bool input_error() const { return is_input_error(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace openasc
