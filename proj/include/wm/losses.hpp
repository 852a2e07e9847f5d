#pragma once

#include "wm/tensor.hpp"

namespace wm {

/// Single global SSIM over the whole patch (patch-wide means/variances/
/// covariance). Pixels are divided by `scale` first; the default constants
/// c1 = 1e-4, c2 = 9e-4 assume unit dynamic range.
double ssim(const Image& reference, const Image& distorted, double c1 = 1e-4, double c2 = 9e-4,
            double scale = 255.0);

/// d(SSIM)/d(distorted), in raw pixel units.
Image ssim_backward(const Image& reference, const Image& distorted, double c1 = 1e-4,
                    double c2 = 9e-4, double scale = 255.0);

/// Binary cross entropy summed over all watermark positions; log arguments
/// are floored at 1e-12 so exact 0/1 probabilities stay finite.
double bce_loss(const Image& probs, const BitGrid& bits);

/// d(BCE)/d(prob), consistent with the same clamping.
Image bce_backward(const Image& probs, const BitGrid& bits);

/// Minimized training objective: gamma * (1 - ssim) + (1 - gamma) * bce.
double combined_loss(double ssim_value, double bce_value, double gamma);

}  // namespace wm
