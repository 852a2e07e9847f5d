#include "wm/losses.hpp"

#include <algorithm>
#include <cmath>

#include "wm/errors.hpp"

namespace wm {

namespace {

struct SsimTerms {
    double mu_x = 0, mu_y = 0;
    double var_x = 0, var_y = 0, cov = 0;
    double a1 = 0, a2 = 0, b1 = 0, b2 = 0;
    double value = 0;
};

SsimTerms ssim_terms(const Image& xr, const Image& yr, double c1, double c2, double scale) {
    if (!xr.same_shape(yr)) throw ShapeError("ssim: shape mismatch");
    if (xr.size() == 0) throw ShapeError("ssim: empty image");
    const double inv = 1.0 / scale;
    const double n = static_cast<double>(xr.size());
    SsimTerms t;
    for (std::size_t i = 0; i < xr.size(); ++i) {
        t.mu_x += xr.pix[i] * inv;
        t.mu_y += yr.pix[i] * inv;
    }
    t.mu_x /= n;
    t.mu_y /= n;
    for (std::size_t i = 0; i < xr.size(); ++i) {
        const double dx = xr.pix[i] * inv - t.mu_x;
        const double dy = yr.pix[i] * inv - t.mu_y;
        t.var_x += dx * dx;
        t.var_y += dy * dy;
        t.cov += dx * dy;
    }
    t.var_x /= n;
    t.var_y /= n;
    t.cov /= n;
    t.a1 = 2.0 * t.mu_x * t.mu_y + c1;
    t.a2 = 2.0 * t.cov + c2;
    t.b1 = t.mu_x * t.mu_x + t.mu_y * t.mu_y + c1;
    t.b2 = t.var_x + t.var_y + c2;
    t.value = (t.a1 * t.a2) / (t.b1 * t.b2);
    return t;
}

}  // namespace

double ssim(const Image& reference, const Image& distorted, double c1, double c2, double scale) {
    return ssim_terms(reference, distorted, c1, c2, scale).value;
}

Image ssim_backward(const Image& reference, const Image& distorted, double c1, double c2,
                    double scale) {
    const SsimTerms t = ssim_terms(reference, distorted, c1, c2, scale);
    const double n = static_cast<double>(reference.size());
    const double inv = 1.0 / scale;
    const double common = 2.0 / (n * t.b1 * t.b2);
    Image grad(reference.height, reference.width);
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double dx = reference.pix[i] * inv - t.mu_x;
        const double dy = distorted.pix[i] * inv - t.mu_y;
        const double d = common * (t.mu_x * t.a2 + t.a1 * dx - t.value * (t.mu_y * t.b2 + t.b1 * dy));
        grad.pix[i] = d * inv;  // chain through the scale normalization
    }
    return grad;
}

double bce_loss(const Image& probs, const BitGrid& bits) {
    if (probs.height != bits.height || probs.width != bits.width)
        throw ShapeError("bce_loss: shape mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs.pix[i];
        const double y = static_cast<double>(bits.bits[i]);
        loss -= y * std::log(std::max(p, 1e-12)) + (1.0 - y) * std::log(std::max(1.0 - p, 1e-12));
    }
    return loss;
}

Image bce_backward(const Image& probs, const BitGrid& bits) {
    if (probs.height != bits.height || probs.width != bits.width)
        throw ShapeError("bce_backward: shape mismatch");
    Image grad(probs.height, probs.width);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs.pix[i];
        const double y = static_cast<double>(bits.bits[i]);
        double g = 0.0;
        if (p > 1e-12) g -= y / p;
        if (1.0 - p > 1e-12) g += (1.0 - y) / (1.0 - p);
        grad.pix[i] = g;
    }
    return grad;
}

double combined_loss(double ssim_value, double bce_value, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in [0, 1]");
    return gamma * (1.0 - ssim_value) + (1.0 - gamma) * bce_value;
}

}  // namespace wm
