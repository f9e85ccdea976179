#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "facecloak/image.hpp"

namespace facecloak {

// One draw of the augmentation stand-in generator. Application order:
// flip → rotate+scale (one affine resample) → brightness → contrast →
// Gaussian jitter → clamp to [0,1].
struct AugmentParams {
    bool horizontal_flip = false;
    double rotation_deg = 0.0;   // [−10, +10]
    double scale = 1.0;          // [0.9, 1.1]
    double brightness = 0.0;     // [−0.1, +0.1]
    double contrast = 1.0;       // [0.85, 1.15]
    double noise_sigma = 0.0;    // [0, 0.02]
    std::uint64_t noise_seed = 0;
};

void validate_augment_params(const AugmentParams& params);

ImagePlane augment_once(const ImagePlane& seed, const AugmentParams& params);

// The n synthetic/augmented images one cloak is optimized over.
struct VariantSet {
    ImagePlane seed;
    std::vector<ImagePlane> variants;
    std::string generator_id;
    std::uint64_t seed_value = 0;

    int n() const { return static_cast<int>(variants.size()); }
    void validate() const;
};

enum class GeneratorKind {
    Identity,      // variants = [seed]; n must be 1
    Augmentation,  // deterministic augmentation draws
    External,      // generative service behind GeneratorClient
};

class GeneratorClient;

struct GeneratorConfig {
    GeneratorKind kind = GeneratorKind::Augmentation;
    GeneratorClient* client = nullptr;  // required for External
};

VariantSet generate_variants(const ImagePlane& seed, int n, const GeneratorConfig& generator,
                             std::uint64_t rng_seed);

// External generator protocol: POST {image: base64 PNG, count: n}, response
// {images: [base64 PNG]}. Implementations raise GenerationFailure on
// transport errors.
class GeneratorClient {
public:
    virtual ~GeneratorClient() = default;
    virtual std::string generator_id() const = 0;
    // Returns one encoded PNG per requested variant.
    virtual std::vector<std::vector<std::uint8_t>> request_variants(
        const std::vector<std::uint8_t>& seed_png, int n) = 0;
};

struct HttpGeneratorOptions {
    std::string host;        // e.g. "127.0.0.1"
    int port = 80;
    std::string path = "/generate";
    std::string auth_token;  // sent as a bearer token when non-empty
    int timeout_seconds = 30;
    int retries = 1;
};

std::unique_ptr<GeneratorClient> make_http_generator_client(const HttpGeneratorOptions& options);

// Decodes, validates and shape-checks the client's images against the seed.
std::vector<ImagePlane> fetch_generated_variants(GeneratorClient& client, const ImagePlane& seed,
                                                 int n);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace facecloak
