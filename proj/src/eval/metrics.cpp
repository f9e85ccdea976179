#include "facecloak/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "facecloak/error.hpp"

namespace facecloak {

namespace {

constexpr int kWindowRadius = 5;  // 11×11
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1·L)², L = 1
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> ssim_window() {
    std::vector<double> w(11);
    double sum = 0.0;
    for (int i = -kWindowRadius; i <= kWindowRadius; ++i) {
        w[i + kWindowRadius] = std::exp(-(static_cast<double>(i) * i) /
                                        (2.0 * kWindowSigma * kWindowSigma));
        sum += w[i + kWindowRadius];
    }
    for (double& v : w) v /= sum;
    return w;
}

// Separable weighted local filter over one channel, valid region only.
// Output dims: (h − 10) × (w − 10).
std::vector<double> filter_valid(const std::vector<double>& channel, int height, int width,
                                 const std::vector<double>& window) {
    const int out_w = width - 2 * kWindowRadius;
    std::vector<double> rows(static_cast<std::size_t>(height) * out_w);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 11; ++k) {
                acc += window[k] * channel[static_cast<std::size_t>(y) * width + x + k];
            }
            rows[static_cast<std::size_t>(y) * out_w + x] = acc;
        }
    }
    const int out_h = height - 2 * kWindowRadius;
    std::vector<double> out(static_cast<std::size_t>(out_h) * out_w);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 11; ++k) {
                acc += window[k] * rows[static_cast<std::size_t>(y + k) * out_w + x];
            }
            out[static_cast<std::size_t>(y) * out_w + x] = acc;
        }
    }
    return out;
}

}  // namespace

double ssim(const ImagePlane& a, const ImagePlane& b) {
    if (!a.same_shape(b)) {
        raise(ErrorKind::ShapeMismatch, "eval", "SSIM inputs disagree on shape");
    }
    if (a.height() < 11 || a.width() < 11) {
        raise(ErrorKind::OutOfRange, "eval", "SSIM needs at least an 11×11 image");
    }
    const std::vector<double> window = ssim_window();
    const int height = a.height();
    const int width = a.width();
    const std::size_t pixels = static_cast<std::size_t>(height) * width;

    double channel_sum = 0.0;
    std::vector<double> ca(pixels), cb(pixels), caa(pixels), cbb(pixels), cab(pixels);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t p = 0; p < pixels; ++p) {
            const double va = a.data()[p * 3 + c];
            const double vb = b.data()[p * 3 + c];
            ca[p] = va;
            cb[p] = vb;
            caa[p] = va * va;
            cbb[p] = vb * vb;
            cab[p] = va * vb;
        }
        const std::vector<double> mu_a = filter_valid(ca, height, width, window);
        const std::vector<double> mu_b = filter_valid(cb, height, width, window);
        const std::vector<double> m_aa = filter_valid(caa, height, width, window);
        const std::vector<double> m_bb = filter_valid(cbb, height, width, window);
        const std::vector<double> m_ab = filter_valid(cab, height, width, window);

        double acc = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double var_a = m_aa[i] - mu_a[i] * mu_a[i];
            const double var_b = m_bb[i] - mu_b[i] * mu_b[i];
            const double cov = m_ab[i] - mu_a[i] * mu_b[i];
            const double numerator =
                (2.0 * mu_a[i] * mu_b[i] + kC1) * (2.0 * cov + kC2);
            const double denominator =
                (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (var_a + var_b + kC2);
            acc += numerator / denominator;
        }
        channel_sum += acc / static_cast<double>(mu_a.size());
    }
    return channel_sum / 3.0;
}

double psnr(const ImagePlane& a, const ImagePlane& b) {
    if (!a.same_shape(b)) {
        raise(ErrorKind::ShapeMismatch, "eval", "PSNR inputs disagree on shape");
    }
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return -10.0 * std::log10(mse);
}

}  // namespace facecloak
