#include "facecloak/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "facecloak/error.hpp"
#include "facecloak/focusing.hpp"
#include "facecloak/image_io.hpp"
#include "facecloak/rng.hpp"

namespace facecloak {

const char* to_string(TransformKind kind) {
    switch (kind) {
        case TransformKind::GaussianNoise: return "gaussian_noise";
        case TransformKind::GaussianBlur: return "gaussian_blur";
        case TransformKind::Jpeg: return "jpeg";
        case TransformKind::Brightness: return "brightness";
        case TransformKind::Contrast: return "contrast";
    }
    return "unknown";
}

TransformKind transform_kind_from_string(const std::string& name) {
    if (name == "gaussian_noise") return TransformKind::GaussianNoise;
    if (name == "gaussian_blur") return TransformKind::GaussianBlur;
    if (name == "jpeg") return TransformKind::Jpeg;
    if (name == "brightness") return TransformKind::Brightness;
    if (name == "contrast") return TransformKind::Contrast;
    raise(ErrorKind::ConfigInvalid, "eval", "unknown transform kind '" + name + "'");
}

std::string TransformSpec::label() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s:%g", to_string(kind), strength);
    return buf;
}

bool TransformSpec::is_identity() const {
    switch (kind) {
        case TransformKind::GaussianNoise: return strength == 0.0;
        case TransformKind::GaussianBlur: return strength == 0.0;
        case TransformKind::Brightness: return strength == 0.0;
        case TransformKind::Contrast: return strength == 1.0;
        case TransformKind::Jpeg: return false;  // real codec, never bit-identical
    }
    return false;
}

void validate_transform_spec(const TransformSpec& spec) {
    auto fail = [&] {
        raise(ErrorKind::OutOfRange, "eval",
              std::string("transform strength out of range for ") + to_string(spec.kind));
    };
    switch (spec.kind) {
        case TransformKind::GaussianNoise:
            if (spec.strength < 0.0 || spec.strength > 0.1) fail();
            break;
        case TransformKind::GaussianBlur:
            if (spec.strength < 0.0 || spec.strength > 3.0) fail();
            break;
        case TransformKind::Jpeg:
            if (spec.strength < 10.0 || spec.strength > 100.0) fail();
            break;
        case TransformKind::Brightness:
            if (spec.strength < -0.3 || spec.strength > 0.3) fail();
            break;
        case TransformKind::Contrast:
            if (spec.strength < 0.5 || spec.strength > 1.5) fail();
            break;
    }
}

ImagePlane apply_transform(const ImagePlane& image, const TransformSpec& spec) {
    validate_transform_spec(spec);
    if (spec.is_identity()) {
        return image;
    }
    switch (spec.kind) {
        case TransformKind::GaussianNoise: {
            Rng rng(spec.seed);
            std::vector<double> data = image.data();
            for (double& v : data) {
                v = std::clamp(v + rng.normal() * spec.strength, 0.0, 1.0);
            }
            return ImagePlane(image.height(), image.width(), std::move(data));
        }
        case TransformKind::GaussianBlur: {
            const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * spec.strength)));
            std::vector<double> data = gaussian_blur_plane(image.data(), image.height(),
                                                           image.width(), spec.strength, radius);
            for (double& v : data) v = std::clamp(v, 0.0, 1.0);
            return ImagePlane(image.height(), image.width(), std::move(data));
        }
        case TransformKind::Jpeg: {
            const int quality = static_cast<int>(std::lround(spec.strength));
            return decode_jpeg(encode_jpeg(image, quality));
        }
        case TransformKind::Brightness: {
            std::vector<double> data = image.data();
            for (double& v : data) v = std::clamp(v + spec.strength, 0.0, 1.0);
            return ImagePlane(image.height(), image.width(), std::move(data));
        }
        case TransformKind::Contrast: {
            std::vector<double> data = image.data();
            for (double& v : data) v = std::clamp(0.5 + (v - 0.5) * spec.strength, 0.0, 1.0);
            return ImagePlane(image.height(), image.width(), std::move(data));
        }
    }
    raise(ErrorKind::OutOfRange, "eval", "unhandled transform kind");
}

}  // namespace facecloak
