// Image quality and message fidelity metrics.
#pragma once

#include <cstdint>
#include <vector>

#include "stegnet/image.hpp"

namespace stegnet {

// Peak signal-to-noise ratio over all subpixels, 8-bit scale
// (10*log10(255^2/MSE)). Identical images give +infinity.
double psnr_u8(const Image8& a, const Image8& b);

// Same formula for float tensors in [0,1]; the error is scaled to 8-bit
// units so values are comparable with psnr_u8.
double psnr01(const Tensor& a, const Tensor& b);

// Mean absolute error in 8-bit units.
double mae_u8(const Image8& a, const Image8& b);

// Fraction of mismatched bits (inputs are 0/1 vectors of equal length).
double bit_error_rate(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b);

// Mean SSIM on the BT.601 luma plane: 11x11 Gaussian window (sigma 1.5),
// K1=0.01, K2=0.03, L=255, valid windows only (no border padding).
// Images must be at least 11x11.
double ssim_u8(const Image8& a, const Image8& b);

// Absolute difference amplified by `gain`, saturating at 255.
Image8 diff_image(const Image8& a, const Image8& b, int gain = 15);

} // namespace stegnet
