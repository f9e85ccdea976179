#include "facecloak/image.hpp"

#include <cmath>
#include <cstring>

#include "facecloak/error.hpp"

namespace facecloak {

std::size_t plane_size(int height, int width) {
    return static_cast<std::size_t>(height) * width * ImagePlane::kChannels;
}

ImagePlane::ImagePlane(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (height_ < kMinSide || width_ < kMinSide) {
        raise(ErrorKind::InvariantViolation, "core",
              "image dimensions must be at least " + std::to_string(kMinSide) + "×" +
                  std::to_string(kMinSide) + ", got " + std::to_string(height_) + "×" +
                  std::to_string(width_));
    }
    if (data_.size() != plane_size(height_, width_)) {
        raise(ErrorKind::ShapeMismatch, "core",
              "pixel buffer holds " + std::to_string(data_.size()) + " values, expected " +
                  std::to_string(plane_size(height_, width_)));
    }
    for (double v : data_) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            raise(ErrorKind::InvariantViolation, "core",
                  "pixel value " + std::to_string(v) + " outside [0, 1]");
        }
    }
}

ImagePlane ImagePlane::filled(int height, int width, double value) {
    return ImagePlane(height, width, std::vector<double>(plane_size(height, width), value));
}

std::vector<std::uint8_t> ImagePlane::payload_f32le() const {
    std::vector<std::uint8_t> out(data_.size() * 4);
    for (std::size_t i = 0; i < data_.size(); ++i) {
        const float f = static_cast<float>(data_[i]);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        out[4 * i + 0] = static_cast<std::uint8_t>(bits);
        out[4 * i + 1] = static_cast<std::uint8_t>(bits >> 8);
        out[4 * i + 2] = static_cast<std::uint8_t>(bits >> 16);
        out[4 * i + 3] = static_cast<std::uint8_t>(bits >> 24);
    }
    return out;
}

}  // namespace facecloak
