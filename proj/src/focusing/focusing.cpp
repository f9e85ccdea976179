#include "facecloak/focusing.hpp"

#include <algorithm>
#include <cmath>

#include "facecloak/error.hpp"
#include "facecloak/rng.hpp"

namespace facecloak {

namespace {

int round_frac(double frac, int dim) {
    return static_cast<int>(std::llround(frac * dim));
}

// Mirror about the edge pixel (…, 2, 1, 0 | 1, 2, …); loops until in range so
// kernels wider than the image stay valid.
int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

}  // namespace

void validate_landmarks(const LandmarkSet& landmarks, int height, int width) {
    const Point points[] = {landmarks.left_eye, landmarks.right_eye, landmarks.nose,
                            landmarks.mouth};
    for (const Point& p : points) {
        if (p.x < 0 || p.x >= width || p.y < 0 || p.y >= height) {
            raise(ErrorKind::OutOfRange, "focusing",
                  "landmark (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                      ") outside image bounds");
        }
    }
    if (!(landmarks.left_eye.x < landmarks.right_eye.x)) {
        raise(ErrorKind::InvariantViolation, "focusing",
              "left eye must lie left of the right eye");
    }
}

LandmarkSet canonical_landmarks(int height, int width) {
    LandmarkSet lm;
    lm.left_eye = {round_frac(0.30, width), round_frac(0.40, height)};
    lm.right_eye = {round_frac(0.70, width), round_frac(0.40, height)};
    lm.nose = {round_frac(0.50, width), round_frac(0.58, height)};
    lm.mouth = {round_frac(0.50, width), round_frac(0.78, height)};
    return lm;
}

void validate_sticker_spec(const StickerSpec& spec) {
    const BoxFraction fracs[] = {spec.eye, spec.nose, spec.mouth};
    for (const BoxFraction& f : fracs) {
        if (!(f.width_frac > 0.0 && f.width_frac <= 0.6) ||
            !(f.height_frac > 0.0 && f.height_frac <= 0.6)) {
            raise(ErrorKind::OutOfRange, "focusing",
                  "sticker box fractions must lie in (0, 0.6]");
        }
    }
}

BinaryMask BinaryMask::zeros(int height, int width) {
    BinaryMask m;
    m.height = height;
    m.width = width;
    m.values.assign(plane_size(height, width), 0);
    return m;
}

std::size_t BinaryMask::popcount() const {
    std::size_t n = 0;
    for (std::uint8_t v : values) n += v;
    return n;
}

BinaryMask build_sticker_mask(const LandmarkSet& landmarks, const StickerSpec& spec, int height,
                              int width) {
    validate_sticker_spec(spec);
    validate_landmarks(landmarks, height, width);

    BinaryMask mask = BinaryMask::zeros(height, width);
    struct Box {
        Point center;
        BoxFraction frac;
    };
    const Box boxes[] = {
        {landmarks.left_eye, spec.eye},
        {landmarks.right_eye, spec.eye},
        {landmarks.nose, spec.nose},
        {landmarks.mouth, spec.mouth},
    };
    for (const Box& box : boxes) {
        const int w_px = std::max(1, round_frac(box.frac.width_frac, width));
        const int h_px = std::max(1, round_frac(box.frac.height_frac, height));
        const int x0 = std::max(0, box.center.x - w_px / 2);
        const int y0 = std::max(0, box.center.y - h_px / 2);
        const int x1 = std::min(width - 1, box.center.x - w_px / 2 + w_px - 1);
        const int y1 = std::min(height - 1, box.center.y - h_px / 2 + h_px - 1);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                for (int c = 0; c < 3; ++c) {
                    mask.values[(static_cast<std::size_t>(y) * width + x) * 3 + c] = 1;
                }
            }
        }
    }
    return mask;
}

void validate_highpass_config(const HighPassConfig& cfg) {
    if (!(cfg.sigma > 0.0)) {
        raise(ErrorKind::OutOfRange, "focusing", "high-pass sigma must be positive");
    }
    if (cfg.kernel_radius < static_cast<int>(std::ceil(3.0 * cfg.sigma))) {
        raise(ErrorKind::OutOfRange, "focusing",
              "high-pass kernel radius must be at least ceil(3·sigma)");
    }
}

std::vector<double> gaussian_kernel_1d(double sigma, int radius) {
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable Gaussian blur with reflect padding, per channel.
std::vector<double> gaussian_blur_plane(const std::vector<double>& data, int height, int width,
                                        double sigma, int radius) {
    const std::vector<double> kernel = gaussian_kernel_1d(sigma, radius);
    std::vector<double> tmp(data.size());
    std::vector<double> out(data.size());

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    const int xs = reflect_index(x + k, width);
                    acc += kernel[k + radius] *
                           data[(static_cast<std::size_t>(y) * width + xs) * 3 + c];
                }
                tmp[(static_cast<std::size_t>(y) * width + x) * 3 + c] = acc;
            }
        }
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    const int ys = reflect_index(y + k, height);
                    acc += kernel[k + radius] *
                           tmp[(static_cast<std::size_t>(ys) * width + x) * 3 + c];
                }
                out[(static_cast<std::size_t>(y) * width + x) * 3 + c] = acc;
            }
        }
    }
    return out;
}

std::vector<double> high_pass(const ImagePlane& image, const HighPassConfig& cfg) {
    validate_highpass_config(cfg);
    const int height = image.height();
    const int width = image.width();
    const std::vector<double> blurred =
        gaussian_blur_plane(image.data(), height, width, cfg.sigma, cfg.kernel_radius);

    std::vector<double> residual(image.size());
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = image.data()[i] - blurred[i];

    // Per-channel normalization to zero mean, unit std; flat channels stay zero.
    const std::size_t pixels = static_cast<std::size_t>(height) * width;
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (std::size_t p = 0; p < pixels; ++p) mean += residual[p * 3 + c];
        mean /= static_cast<double>(pixels);
        double var = 0.0;
        for (std::size_t p = 0; p < pixels; ++p) {
            const double d = residual[p * 3 + c] - mean;
            var += d * d;
        }
        const double std_dev = std::sqrt(var / static_cast<double>(pixels));
        if (std_dev < 1e-8) {
            for (std::size_t p = 0; p < pixels; ++p) residual[p * 3 + c] = 0.0;
        } else {
            for (std::size_t p = 0; p < pixels; ++p) {
                residual[p * 3 + c] = (residual[p * 3 + c] - mean) / std_dev;
            }
        }
    }
    return residual;
}

BinaryMask build_highpass_mask(const ImagePlane& image, const HighPassConfig& cfg) {
    const std::vector<double> response = high_pass(image, cfg);
    BinaryMask mask = BinaryMask::zeros(image.height(), image.width());
    for (std::size_t i = 0; i < response.size(); ++i) {
        mask.values[i] = response[i] > cfg.mu ? 1 : 0;
    }
    return mask;
}

BudgetMap combine_budget(const BinaryMask& sticker, const BinaryMask& highpass, float eps,
                         float eps_boosted) {
    if (sticker.height != highpass.height || sticker.width != highpass.width) {
        raise(ErrorKind::ShapeMismatch, "focusing", "focus masks disagree on shape");
    }
    if (eps > eps_boosted) {
        raise(ErrorKind::OutOfRange, "focusing", "eps must not exceed eps_A");
    }
    std::vector<float> values(sticker.values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = (sticker.values[i] || highpass.values[i]) ? eps_boosted : eps;
    }
    return BudgetMap(sticker.height, sticker.width, std::move(values), eps, eps_boosted);
}

void validate_attention_config(const AttentionConfig& cfg) {
    if (!(cfg.init_low >= 0.0) || !(cfg.init_low <= cfg.init_high)) {
        raise(ErrorKind::OutOfRange, "focusing", "attention init bounds must satisfy 0 ≤ low ≤ high");
    }
    if (cfg.clamp_low > cfg.init_low || cfg.clamp_high < cfg.init_high) {
        raise(ErrorKind::OutOfRange, "focusing", "attention clamp bounds must contain init bounds");
    }
    if (!(cfg.z_alpha >= 0.0)) {
        raise(ErrorKind::OutOfRange, "focusing", "attention learning rate must be non-negative");
    }
}

std::vector<double> init_attention(int height, int width, const AttentionConfig& cfg,
                                   std::uint64_t rng_seed) {
    validate_attention_config(cfg);
    Rng rng(rng_seed);
    std::vector<double> alpha(plane_size(height, width));
    for (double& v : alpha) v = rng.uniform(cfg.init_low, cfg.init_high);
    return alpha;
}

std::vector<double> update_attention(const std::vector<double>& alpha,
                                     const std::vector<double>& grad_alpha,
                                     const AttentionConfig& cfg) {
    if (alpha.size() != grad_alpha.size()) {
        raise(ErrorKind::ShapeMismatch, "focusing", "attention and gradient shapes differ");
    }
    double max_abs = 0.0;
    for (double g : grad_alpha) {
        if (!std::isfinite(g)) {
            raise(ErrorKind::NumericFailure, "focusing", "non-finite attention gradient");
        }
        max_abs = std::max(max_abs, std::fabs(g));
    }
    const double scale = cfg.z_alpha / std::max(max_abs, 1e-12);
    std::vector<double> out(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        out[i] = std::clamp(alpha[i] - scale * grad_alpha[i], cfg.clamp_low, cfg.clamp_high);
    }
    return out;
}

}  // namespace facecloak
