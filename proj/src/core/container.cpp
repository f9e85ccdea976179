#include "facecloak/container.hpp"

#include <cstring>
#include <fstream>

#include "facecloak/error.hpp"
#include "facecloak/image.hpp"
#include "facecloak/sha256.hpp"

namespace facecloak {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void append_f32le(std::vector<std::uint8_t>& out, const std::vector<float>& values) {
    out.reserve(out.size() + values.size() * 4);
    for (float v : values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
}

void append_f64le(std::vector<std::uint8_t>& out, const std::vector<double>& values) {
    out.reserve(out.size() + values.size() * 8);
    for (double v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
}

std::vector<float> read_f32le(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                              std::size_t count) {
    if (offset + count * 4 > bytes.size()) {
        raise(ErrorKind::CorruptPayload, "core", "payload truncated");
    }
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = 0;
        for (int b = 3; b >= 0; --b) bits = (bits << 8) | bytes[offset + 4 * i + b];
        std::memcpy(&out[i], &bits, 4);
    }
    return out;
}

std::vector<double> read_f64le(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                               std::size_t count) {
    if (offset + count * 8 > bytes.size()) {
        raise(ErrorKind::CorruptPayload, "core", "payload truncated");
    }
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[offset + 8 * i + b];
        std::memcpy(&out[i], &bits, 8);
    }
    return out;
}

void write_container(const fs::path& path, const std::string& magic, ordered_json header,
                     const std::vector<std::uint8_t>& payload) {
    header["payload_sha256"] = sha256_hex(payload);
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(ErrorKind::Io, "core", "cannot open for writing: " + path.string());
    }
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
    const std::uint64_t header_len = header_text.size();
    std::uint8_t len_le[8];
    for (int i = 0; i < 8; ++i) len_le[i] = static_cast<std::uint8_t>(header_len >> (8 * i));
    out.write(reinterpret_cast<const char*>(len_le), 8);
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    out.flush();
    if (!out) {
        raise(ErrorKind::Io, "core", "write failed: " + path.string());
    }
}

namespace {

ordered_json read_header_stream(std::ifstream& in, const fs::path& path, const std::string& magic) {
    std::string file_magic(magic.size(), '\0');
    in.read(file_magic.data(), static_cast<std::streamsize>(magic.size()));
    if (!in || file_magic != magic) {
        raise(ErrorKind::Format, "core",
              "not a " + magic.substr(0, magic.size() - 1) + " container: " + path.string());
    }
    std::uint8_t len_le[8];
    in.read(reinterpret_cast<char*>(len_le), 8);
    if (!in) {
        raise(ErrorKind::CorruptPayload, "core", "header length truncated: " + path.string());
    }
    std::uint64_t header_len = 0;
    for (int i = 7; i >= 0; --i) header_len = (header_len << 8) | len_le[i];
    if (header_len > (1u << 20)) {
        raise(ErrorKind::Format, "core", "implausible header length: " + path.string());
    }
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) {
        raise(ErrorKind::CorruptPayload, "core", "header truncated: " + path.string());
    }
    ordered_json header = ordered_json::parse(header_text, nullptr, false);
    if (header.is_discarded() || !header.is_object()) {
        raise(ErrorKind::Format, "core", "header is not valid JSON: " + path.string());
    }
    return header;
}

}  // namespace

Container read_container(const fs::path& path, const std::string& magic) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(ErrorKind::Io, "core", "cannot open: " + path.string());
    }
    Container c;
    c.header = read_header_stream(in, path, magic);

    std::vector<std::uint8_t> payload((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
    c.payload = std::move(payload);

    const std::string expected = c.header.value("payload_sha256", "");
    if (expected.empty() || sha256_hex(c.payload) != expected) {
        raise(ErrorKind::CorruptPayload, "core", "payload digest mismatch: " + path.string());
    }
    return c;
}

ordered_json read_container_header(const fs::path& path, const std::string& magic) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(ErrorKind::Io, "core", "cannot open: " + path.string());
    }
    return read_header_stream(in, path, magic);
}

void save_cloak(const CloakMask& cloak, const fs::path& path) {
    ordered_json header{
        {"height", cloak.height()},
        {"width", cloak.width()},
        {"channels", ImagePlane::kChannels},
        {"base_eps", static_cast<double>(cloak.budget().base_eps())},
        {"boosted_eps", static_cast<double>(cloak.budget().boosted_eps())},
        {"backend_id", cloak.backend_id()},
        {"seed_identity_hash", cloak.seed_identity_hash()},
        {"config_digest", cloak.config_digest()},
    };
    std::vector<std::uint8_t> payload;
    append_f32le(payload, cloak.delta());
    append_f32le(payload, cloak.attention());
    append_f32le(payload, cloak.budget().values());
    write_container(path, kCloakMagic, std::move(header), payload);
}

CloakMask load_cloak(const fs::path& path) {
    const Container c = read_container(path, kCloakMagic);
    const auto& h = c.header;
    for (const char* key : {"height", "width", "channels", "base_eps", "boosted_eps", "backend_id",
                            "seed_identity_hash", "config_digest"}) {
        if (!h.contains(key)) {
            raise(ErrorKind::Format, "core",
                  std::string("cloak header missing field '") + key + "': " + path.string());
        }
    }
    const int height = h["height"].get<int>();
    const int width = h["width"].get<int>();
    if (h["channels"].get<int>() != ImagePlane::kChannels) {
        raise(ErrorKind::InvariantViolation, "core", "cloak channel count must be 3");
    }
    const float base_eps = static_cast<float>(h["base_eps"].get<double>());
    const float boosted_eps = static_cast<float>(h["boosted_eps"].get<double>());
    if (boosted_eps < base_eps) {
        raise(ErrorKind::InvariantViolation, "core",
              "cloak header declares boosted_eps < base_eps: " + path.string());
    }
    if (height < ImagePlane::kMinSide || width < ImagePlane::kMinSide) {
        raise(ErrorKind::InvariantViolation, "core", "cloak shape below minimum: " + path.string());
    }

    const std::size_t n = plane_size(height, width);
    if (c.payload.size() != n * 4 * 3) {
        raise(ErrorKind::CorruptPayload, "core",
              "cloak payload holds " + std::to_string(c.payload.size()) + " bytes, expected " +
                  std::to_string(n * 12) + ": " + path.string());
    }
    std::vector<float> delta = read_f32le(c.payload, 0, n);
    std::vector<float> attention = read_f32le(c.payload, n * 4, n);
    std::vector<float> budget_values = read_f32le(c.payload, n * 8, n);

    // Constructors re-validate every invariant (budget bound, attention range).
    BudgetMap budget(height, width, std::move(budget_values), base_eps, boosted_eps);
    return CloakMask(height, width, std::move(delta), std::move(attention), std::move(budget),
                     h["backend_id"].get<std::string>(), h["seed_identity_hash"].get<std::string>(),
                     h["config_digest"].get<std::string>());
}

}  // namespace facecloak
