#include <chrono>
#include <cstdio>

#include "httplib.h"
#include "json.hpp"

#include "facecloak/error.hpp"
#include "facecloak/image_io.hpp"
#include "facecloak/ingestion.hpp"
#include "facecloak/synthgen.hpp"

namespace facecloak {

namespace {

constexpr char kBase64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        std::uint32_t chunk = std::uint32_t(bytes[i]) << 16;
        if (i + 1 < bytes.size()) chunk |= std::uint32_t(bytes[i + 1]) << 8;
        if (i + 2 < bytes.size()) chunk |= std::uint32_t(bytes[i + 2]);
        out.push_back(kBase64Chars[(chunk >> 18) & 0x3f]);
        out.push_back(kBase64Chars[(chunk >> 12) & 0x3f]);
        out.push_back(i + 1 < bytes.size() ? kBase64Chars[(chunk >> 6) & 0x3f] : '=');
        out.push_back(i + 2 < bytes.size() ? kBase64Chars[chunk & 0x3f] : '=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<std::uint8_t> out;
    int buffer = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = value_of(c);
        if (v < 0) {
            raise(ErrorKind::Format, "synthgen", "invalid base64 payload");
        }
        buffer = (buffer << 6) | v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((buffer >> bits) & 0xff));
        }
    }
    return out;
}

std::vector<ImagePlane> fetch_generated_variants(GeneratorClient& client, const ImagePlane& seed,
                                                 int n) {
    if (n < 1) {
        raise(ErrorKind::OutOfRange, "synthgen", "variant count must be at least 1");
    }
    const std::vector<std::uint8_t> seed_png = encode_png(seed);
    std::vector<std::vector<std::uint8_t>> payloads;
    try {
        payloads = client.request_variants(seed_png, n);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        raise(ErrorKind::GenerationFailure, "synthgen",
              "generator '" + client.generator_id() + "' failed: " + e.what());
    }
    if (static_cast<int>(payloads.size()) != n) {
        raise(ErrorKind::GenerationFailure, "synthgen",
              "generator '" + client.generator_id() + "' returned " +
                  std::to_string(payloads.size()) + " images, requested " + std::to_string(n));
    }
    std::vector<ImagePlane> variants;
    variants.reserve(payloads.size());
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        try {
            ImagePlane decoded = decode_image_bytes(payloads[i]);
            variants.push_back(decoded.same_shape(seed)
                                   ? std::move(decoded)
                                   : resize_and_center(decoded, seed.height(), seed.width()));
        } catch (const Error& e) {
            raise(ErrorKind::GenerationFailure, "synthgen",
                  "generator '" + client.generator_id() + "' image " + std::to_string(i) +
                      " failed validation: " + e.what());
        }
    }
    return variants;
}

namespace {

class HttpGeneratorClient : public GeneratorClient {
public:
    explicit HttpGeneratorClient(HttpGeneratorOptions options) : options_(std::move(options)) {}

    std::string generator_id() const override {
        return "http:" + options_.host + ":" + std::to_string(options_.port) + options_.path;
    }

    std::vector<std::vector<std::uint8_t>> request_variants(
        const std::vector<std::uint8_t>& seed_png, int n) override {
        nlohmann::json request{{"image", base64_encode(seed_png)}, {"count", n}};
        const std::string body = request.dump();

        std::string last_error = "no attempt made";
        for (int attempt = 0; attempt <= options_.retries; ++attempt) {
            httplib::Client http(options_.host, options_.port);
            http.set_connection_timeout(options_.timeout_seconds, 0);
            http.set_read_timeout(options_.timeout_seconds, 0);
            httplib::Headers headers;
            if (!options_.auth_token.empty()) {
                headers.emplace("Authorization", "Bearer " + options_.auth_token);
            }

            const auto start = std::chrono::steady_clock::now();
            auto res = http.Post(options_.path, headers, body, "application/json");
            const auto elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::steady_clock::now() - start)
                                        .count();
            if (!res) {
                last_error = "transport failure: " + httplib::to_string(res.error());
                std::fprintf(stderr, "[synthgen] POST %s attempt %d failed after %lldms: %s\n",
                             options_.path.c_str(), attempt + 1,
                             static_cast<long long>(elapsed_ms), last_error.c_str());
                continue;
            }
            std::fprintf(stderr, "[synthgen] POST %s -> %d (%zu bytes, %lldms)\n",
                         options_.path.c_str(), res->status, res->body.size(),
                         static_cast<long long>(elapsed_ms));
            if (res->status != 200) {
                last_error = "HTTP status " + std::to_string(res->status);
                continue;
            }
            nlohmann::json response = nlohmann::json::parse(res->body, nullptr, false);
            if (response.is_discarded() || !response.contains("images") ||
                !response["images"].is_array()) {
                raise(ErrorKind::GenerationFailure, "synthgen",
                      "malformed generator response payload");
            }
            std::vector<std::vector<std::uint8_t>> out;
            for (const auto& entry : response["images"]) {
                if (!entry.is_string()) {
                    raise(ErrorKind::GenerationFailure, "synthgen",
                          "generator response image is not a base64 string");
                }
                out.push_back(base64_decode(entry.get<std::string>()));
            }
            return out;
        }
        raise(ErrorKind::GenerationFailure, "synthgen",
              "generator '" + generator_id() + "' unreachable: " + last_error);
    }

private:
    HttpGeneratorOptions options_;
};

}  // namespace

std::unique_ptr<GeneratorClient> make_http_generator_client(const HttpGeneratorOptions& options) {
    return std::make_unique<HttpGeneratorClient>(options);
}

}  // namespace facecloak
