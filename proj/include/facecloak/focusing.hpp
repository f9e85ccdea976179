#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "facecloak/cloak.hpp"
#include "facecloak/image.hpp"

namespace facecloak {

struct Point {
    int x = 0;
    int y = 0;
    bool operator==(const Point&) const = default;
};

// Eye/nose/mouth landmarks on an aligned crop.
struct LandmarkSet {
    Point left_eye;
    Point right_eye;
    Point nose;
    Point mouth;
};

void validate_landmarks(const LandmarkSet& landmarks, int height, int width);

// Fixed fractional positions for aligned crops; serves as the fallback when
// no external detector is configured. Coordinates are round(frac · dim).
LandmarkSet canonical_landmarks(int height, int width);

// External detector protocol: PNG in, JSON {left_eye:[x,y], right_eye:[x,y],
// nose:[x,y], mouth:[x,y]} or {"face": false} out. nullopt means no face.
class LandmarkAdapter {
public:
    virtual ~LandmarkAdapter() = default;
    virtual std::optional<LandmarkSet> detect(const std::vector<std::uint8_t>& png_bytes) = 0;
};

struct HttpLandmarkOptions {
    std::string host;
    int port = 80;
    std::string path = "/landmarks";
    int timeout_seconds = 30;
};

std::unique_ptr<LandmarkAdapter> make_http_landmark_adapter(const HttpLandmarkOptions& options);

// With an adapter: runs external detection and validates the result; without
// one: canonical positions for aligned crops.
LandmarkSet detect_landmarks(const ImagePlane& image, LandmarkAdapter* adapter = nullptr);

// Per-landmark box extents as fractions of image width/height, all in (0, 0.6].
struct BoxFraction {
    double width_frac;
    double height_frac;
};

struct StickerSpec {
    BoxFraction eye{0.16, 0.10};
    BoxFraction nose{0.18, 0.22};
    BoxFraction mouth{0.30, 0.12};
};

void validate_sticker_spec(const StickerSpec& spec);

// H×W×C binary mask; sticker masks repeat across channels, high-pass masks
// can differ per channel.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;  // 0 or 1, layout (y, x, c)

    static BinaryMask zeros(int height, int width);
    std::size_t popcount() const;
    std::uint8_t at(int y, int x, int c) const {
        return values[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

// Union of the four landmark boxes, centered on the landmarks and clipped at
// the image edges.
BinaryMask build_sticker_mask(const LandmarkSet& landmarks, const StickerSpec& spec, int height,
                              int width);

struct HighPassConfig {
    double sigma = 2.0;    // Gaussian kernel std, pixels
    double mu = 1.0;       // threshold on the normalized response
    int kernel_radius = 6; // must be ≥ ceil(3·sigma)
};

void validate_highpass_config(const HighPassConfig& cfg);

// Truncated, sum-1 Gaussian taps; separable blur with reflect padding.
// Shared with the evaluation-time blur transform.
std::vector<double> gaussian_kernel_1d(double sigma, int radius);
std::vector<double> gaussian_blur_plane(const std::vector<double>& data, int height, int width,
                                        double sigma, int radius);

// Normalized residual (I − K_σ∗I), per channel zero mean and unit std;
// channels with residual std below 1e-8 come back identically zero.
std::vector<double> high_pass(const ImagePlane& image, const HighPassConfig& cfg);

// mask = 1 where the normalized response strictly exceeds mu.
BinaryMask build_highpass_mask(const ImagePlane& image, const HighPassConfig& cfg);

// ε_total: boosted inside the union of the focus masks, baseline elsewhere.
BudgetMap combine_budget(const BinaryMask& sticker, const BinaryMask& highpass, float eps,
                         float eps_boosted);

struct AttentionConfig {
    double z_alpha = 0.05;   // per-step cap on attention movement
    double init_low = 0.9;
    double init_high = 1.1;
    double clamp_low = 0.0;
    double clamp_high = 2.0;
};

void validate_attention_config(const AttentionConfig& cfg);

std::vector<double> init_attention(int height, int width, const AttentionConfig& cfg,
                                   std::uint64_t rng_seed);

// alpha' = clamp(alpha − z_α · g/max(‖g‖_∞, 1e-12)); no element moves by more
// than z_α per step.
std::vector<double> update_attention(const std::vector<double>& alpha,
                                     const std::vector<double>& grad_alpha,
                                     const AttentionConfig& cfg);

}  // namespace facecloak
