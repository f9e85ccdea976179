#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace facecloak {

// H×W×3 pixel tensor, row-major (y, x, c), values in [0, 1]. Immutable after
// construction; the constructor rejects out-of-range or non-finite data
// instead of clamping (clamping is an explicit optimizer operation).
class ImagePlane {
public:
    static constexpr int kChannels = 3;
    static constexpr int kMinSide = 16;

    ImagePlane(int height, int width, std::vector<double> data);

    static ImagePlane filled(int height, int width, double value);
    static ImagePlane zeros(int height, int width) { return filled(height, width, 0.0); }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return kChannels; }
    std::size_t size() const noexcept { return data_.size(); }

    double at(int y, int x, int c) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
    }

    const std::vector<double>& data() const noexcept { return data_; }

    bool same_shape(const ImagePlane& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    bool operator==(const ImagePlane& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && data_ == other.data_;
    }

    // Canonical float32-LE serialization of the pixel payload; feeds
    // seed_identity_hash so the hash is independent of the source codec.
    std::vector<std::uint8_t> payload_f32le() const;

private:
    int height_;
    int width_;
    std::vector<double> data_;
};

std::size_t plane_size(int height, int width);

}  // namespace facecloak
