#include "facecloak/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "facecloak/error.hpp"
#include "facecloak/ingestion.hpp"
#include "facecloak/rng.hpp"

namespace facecloak {

void validate_augment_params(const AugmentParams& p) {
    auto in_range = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!in_range(p.rotation_deg, -10.0, 10.0) || !in_range(p.scale, 0.9, 1.1) ||
        !in_range(p.brightness, -0.1, 0.1) || !in_range(p.contrast, 0.85, 1.15) ||
        !in_range(p.noise_sigma, 0.0, 0.02)) {
        raise(ErrorKind::OutOfRange, "synthgen", "augmentation parameter outside documented range");
    }
}

namespace {

inline double sample_clamped(const std::vector<double>& data, int height, int width, double sy,
                             double sx, int c) {
    sx = std::clamp(sx, 0.0, static_cast<double>(width - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(height - 1));
    const int x0 = static_cast<int>(sx);
    const int y0 = static_cast<int>(sy);
    const int x1 = std::min(x0 + 1, width - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const double fx = sx - x0;
    const double fy = sy - y0;
    auto px = [&](int y, int x) {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    };
    return (1.0 - fy) * ((1.0 - fx) * px(y0, x0) + fx * px(y0, x1)) +
           fy * ((1.0 - fx) * px(y1, x0) + fx * px(y1, x1));
}

}  // namespace

ImagePlane augment_once(const ImagePlane& seed, const AugmentParams& p) {
    validate_augment_params(p);
    const int height = seed.height();
    const int width = seed.width();
    std::vector<double> data = seed.data();

    if (p.horizontal_flip) {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width / 2; ++x) {
                for (int c = 0; c < 3; ++c) {
                    std::swap(data[(static_cast<std::size_t>(y) * width + x) * 3 + c],
                              data[(static_cast<std::size_t>(y) * width + (width - 1 - x)) * 3 + c]);
                }
            }
        }
    }

    // Content point q maps to center + scale·R(θ)(q − center); implemented by
    // inverse bilinear sampling with clamp-to-edge.
    if (p.rotation_deg != 0.0 || p.scale != 1.0) {
        const double theta = p.rotation_deg * 3.14159265358979323846 / 180.0;
        const double cos_t = std::cos(theta);
        const double sin_t = std::sin(theta);
        const double cx = (width - 1) / 2.0;
        const double cy = (height - 1) / 2.0;
        std::vector<double> warped(data.size());
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const double dx = x - cx;
                const double dy = y - cy;
                const double sx = cx + (cos_t * dx + sin_t * dy) / p.scale;
                const double sy = cy + (-sin_t * dx + cos_t * dy) / p.scale;
                for (int c = 0; c < 3; ++c) {
                    warped[(static_cast<std::size_t>(y) * width + x) * 3 + c] =
                        sample_clamped(data, height, width, sy, sx, c);
                }
            }
        }
        data = std::move(warped);
    }

    if (p.brightness != 0.0) {
        for (double& v : data) v += p.brightness;
    }
    if (p.contrast != 1.0) {
        for (double& v : data) v = 0.5 + (v - 0.5) * p.contrast;
    }
    if (p.noise_sigma > 0.0) {
        Rng rng(p.noise_seed);
        for (double& v : data) v += rng.normal() * p.noise_sigma;
    }
    for (double& v : data) v = std::clamp(v, 0.0, 1.0);
    return ImagePlane(height, width, std::move(data));
}

void VariantSet::validate() const {
    if (variants.empty()) {
        raise(ErrorKind::InvariantViolation, "synthgen", "variant set must hold at least 1 image");
    }
    for (const ImagePlane& v : variants) {
        if (!v.same_shape(seed)) {
            raise(ErrorKind::ShapeMismatch, "synthgen", "variant shape differs from seed");
        }
    }
    if (variants.size() > 1 || generator_id != "identity") {
        for (std::size_t i = 0; i < variants.size(); ++i) {
            for (std::size_t j = i + 1; j < variants.size(); ++j) {
                if (variants[i] == variants[j]) {
                    raise(ErrorKind::InvariantViolation, "synthgen",
                          "variants " + std::to_string(i) + " and " + std::to_string(j) +
                              " are identical");
                }
            }
        }
    }
}

VariantSet generate_variants(const ImagePlane& seed, int n, const GeneratorConfig& generator,
                             std::uint64_t rng_seed) {
    if (n < 1) {
        raise(ErrorKind::OutOfRange, "synthgen", "variant count must be at least 1");
    }
    VariantSet set{seed, {}, "", rng_seed};
    switch (generator.kind) {
        case GeneratorKind::Identity: {
            if (n != 1) {
                raise(ErrorKind::GenerationFailure, "synthgen",
                      "identity generator produces exactly 1 variant");
            }
            set.generator_id = "identity";
            set.variants.push_back(seed);
            break;
        }
        case GeneratorKind::Augmentation: {
            set.generator_id = "augment";
            const Rng root(rng_seed);
            for (int i = 0; i < n; ++i) {
                Rng rng = root.fork(static_cast<std::uint64_t>(i));
                AugmentParams p;
                p.horizontal_flip = rng.uniform() < 0.5;
                p.rotation_deg = rng.uniform(-10.0, 10.0);
                p.scale = rng.uniform(0.9, 1.1);
                p.brightness = rng.uniform(-0.1, 0.1);
                p.contrast = rng.uniform(0.85, 1.15);
                p.noise_sigma = rng.uniform(0.005, 0.02);  // nonzero: keeps variants distinct
                p.noise_seed = rng.next_u64();
                set.variants.push_back(augment_once(seed, p));
            }
            break;
        }
        case GeneratorKind::External: {
            if (!generator.client) {
                raise(ErrorKind::GenerationFailure, "synthgen",
                      "external generator requires a configured client");
            }
            set.generator_id = generator.client->generator_id();
            set.variants = fetch_generated_variants(*generator.client, seed, n);
            break;
        }
    }
    set.validate();
    return set;
}

}  // namespace facecloak
