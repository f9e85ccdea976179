#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace facecloak {

// FIPS 180-4 SHA-256, streaming interface.
class Sha256 {
public:
    Sha256();

    void update(const void* data, std::size_t len);
    // Lowercase hex digest; finalizes the stream (no further updates).
    std::string hex_digest();

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint8_t buffer_[64];
    std::size_t buffered_ = 0;
    std::uint64_t total_bytes_ = 0;
    bool finalized_ = false;
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& data);
std::string sha256_hex(const std::vector<std::uint8_t>& data);

}  // namespace facecloak
