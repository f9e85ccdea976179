#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "facecloak/cloak.hpp"

#include "json.hpp"

namespace facecloak {

// Shared binary container layout (cloaks "FCLK1\n", toy weights "FCTW1\n"):
// magic, u64-LE header length, UTF-8 JSON header, raw payload bytes.
// The header's payload_sha256 field covers the full payload.
struct Container {
    nlohmann::ordered_json header;
    std::vector<std::uint8_t> payload;
};

void write_container(const std::filesystem::path& path, const std::string& magic,
                     nlohmann::ordered_json header, const std::vector<std::uint8_t>& payload);

Container read_container(const std::filesystem::path& path, const std::string& magic);

// Reads only magic + header; payload stays on disk (CLI `inspect`).
nlohmann::ordered_json read_container_header(const std::filesystem::path& path,
                                             const std::string& magic);

inline constexpr const char* kCloakMagic = "FCLK1\n";
inline constexpr const char* kToyWeightsMagic = "FCTW1\n";

void save_cloak(const CloakMask& cloak, const std::filesystem::path& path);
CloakMask load_cloak(const std::filesystem::path& path);

// float32/float64 little-endian packing used by every payload.
void append_f32le(std::vector<std::uint8_t>& out, const std::vector<float>& values);
void append_f64le(std::vector<std::uint8_t>& out, const std::vector<double>& values);
std::vector<float> read_f32le(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                              std::size_t count);
std::vector<double> read_f64le(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                               std::size_t count);

}  // namespace facecloak
