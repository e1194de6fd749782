#pragma once
#include "amir/image.hpp"

namespace amir {

// Peak signal-to-noise ratio with signal peak 1.0.
// Returns +infinity when the images are identical (MSE == 0).
double psnr(const Image& a, const Image& b);

// Mean local SSIM: 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03,
// peak 1.0, valid windows only, averaged over channels.
// Requires min(height, width) >= 11.
double ssim(const Image& a, const Image& b);

// 11-tap Gaussian window (sigma 1.5) normalized to sum 1.
const std::vector<double>& ssim_window();

}  // namespace amir
