#pragma once

#include "facecloak/image.hpp"

namespace facecloak {

// Classical SSIM: 11×11 Gaussian window (σ = 1.5), K1 = 0.01, K2 = 0.03,
// dynamic range 1.0, valid-window region, averaged over the three channels.
double ssim(const ImagePlane& a, const ImagePlane& b);

// −10·log₁₀(MSE) for [0,1] data; +inf for identical images.
double psnr(const ImagePlane& a, const ImagePlane& b);

}  // namespace facecloak
