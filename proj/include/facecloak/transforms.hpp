#pragma once

#include <cstdint>
#include <string>

#include "facecloak/image.hpp"

namespace facecloak {

enum class TransformKind { GaussianNoise, GaussianBlur, Jpeg, Brightness, Contrast };

const char* to_string(TransformKind kind);
TransformKind transform_kind_from_string(const std::string& name);

// Post-processing applied to published images. Strength ranges:
// noise σ ∈ [0, 0.1], blur σ ∈ [0, 3], jpeg quality ∈ [10, 100],
// brightness ∈ [−0.3, 0.3], contrast ∈ [0.5, 1.5].
struct TransformSpec {
    TransformKind kind = TransformKind::GaussianNoise;
    double strength = 0.0;
    std::uint64_t seed = 0;  // noise only

    std::string label() const;
    bool is_identity() const;  // bit-identical output (codec transforms never are)
};

void validate_transform_spec(const TransformSpec& spec);

ImagePlane apply_transform(const ImagePlane& image, const TransformSpec& spec);

}  // namespace facecloak
