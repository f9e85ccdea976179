#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace facecloak {

enum class ErrorKind {
    Io,                  // file cannot be read/written
    Format,              // unrecognized magic / malformed container or model file
    CorruptPayload,      // digest mismatch, truncated payload
    InvariantViolation,  // a domain-type invariant does not hold
    ShapeMismatch,       // tensor/image shapes disagree
    OutOfRange,          // parameter outside its documented range
    Capability,          // backend cannot perform the requested operation
    DatasetTooSmall,     // not enough identities/images/pairs
    TrainingFailure,     // accuracy floor not reached, divergence
    GenerationFailure,   // variant generator / external service failure
    BackendFailure,      // non-finite activation, inference fault
    NumericFailure,      // non-finite loss or gradient
    DetectionFailure,    // landmark adapter found no face
    ConfigInvalid,       // run configuration rejected before any work
};

const char* to_string(ErrorKind kind);

// Single exception type; `kind` and `stage` feed the CLI's machine-readable
// error JSON and exit-code mapping.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string stage, const std::string& message)
        : std::runtime_error(message), kind_(kind), stage_(std::move(stage)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& stage() const noexcept { return stage_; }

private:
    ErrorKind kind_;
    std::string stage_;
};

[[noreturn]] inline void raise(ErrorKind kind, std::string_view stage, const std::string& message) {
    throw Error(kind, std::string(stage), message);
}

}  // namespace facecloak
