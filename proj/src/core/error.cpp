#include "facecloak/error.hpp"

namespace facecloak {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Io: return "io";
        case ErrorKind::Format: return "format";
        case ErrorKind::CorruptPayload: return "corrupt_payload";
        case ErrorKind::InvariantViolation: return "invariant_violation";
        case ErrorKind::ShapeMismatch: return "shape_mismatch";
        case ErrorKind::OutOfRange: return "out_of_range";
        case ErrorKind::Capability: return "capability";
        case ErrorKind::DatasetTooSmall: return "dataset_too_small";
        case ErrorKind::TrainingFailure: return "training_failure";
        case ErrorKind::GenerationFailure: return "generation_failure";
        case ErrorKind::BackendFailure: return "backend_failure";
        case ErrorKind::NumericFailure: return "numeric_failure";
        case ErrorKind::DetectionFailure: return "detection_failure";
        case ErrorKind::ConfigInvalid: return "config_invalid";
    }
    return "unknown";
}

}  // namespace facecloak
