#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "facecloak/image.hpp"

namespace facecloak {

// Codec boundary. Pixels are exchanged as 8-bit RGB; in-memory planes stay
// [0,1] real. Grayscale/palette/alpha inputs are expanded to RGB on decode.

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

ImagePlane decode_png(const std::vector<std::uint8_t>& bytes);
ImagePlane decode_jpeg(const std::vector<std::uint8_t>& bytes);
// Dispatches on content magic (PNG/JPEG).
ImagePlane decode_image_bytes(const std::vector<std::uint8_t>& bytes);
ImagePlane load_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const ImagePlane& image);
std::vector<std::uint8_t> encode_jpeg(const ImagePlane& image, int quality);
void save_png(const ImagePlane& image, const std::filesystem::path& path);

// Round-half-up quantization to 8-bit; k/255 inputs map back to k.
std::uint8_t quantize_u8(double v);

}  // namespace facecloak
