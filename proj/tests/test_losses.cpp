#include <doctest.h>

#include <cmath>

#include "wm/gradcheck.hpp"
#include "wm/losses.hpp"
#include "wm/rng.hpp"

using namespace wm;

namespace {

Image random_image(int h, int w, RandomStream& rng, double lo, double hi) {
    Image img(h, w);
    for (double& v : img.pix) v = rng.uniform(lo, hi);
    return img;
}

}  // namespace

TEST_CASE("ssim of an image with itself is exactly 1") {
    RandomStream rng(1);
    const Image img = random_image(16, 16, rng, 0.0, 255.0);
    CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim on constant patches reduces to the closed-form scalar expression") {
    const double a = 80.0, b = 120.0;
    Image x(8, 8, a), y(8, 8, b);
    const double c1 = 1e-4, c2 = 9e-4;
    const double mx = a / 255.0, my = b / 255.0;
    // Variances and covariance vanish; only the luminance factor and the
    // structure constants remain.
    const double expect = ((2 * mx * my + c1) * c2) / ((mx * mx + my * my + c1) * c2);
    CHECK(ssim(x, y, c1, c2) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ssim is symmetric and at most 1") {
    RandomStream rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Image x = random_image(12, 12, rng, 0.0, 255.0);
        Image y = x;
        for (double& v : y.pix) v = std::clamp(v + rng.uniform(-30.0, 30.0), 0.0, 255.0);
        const double s1 = ssim(x, y);
        const double s2 = ssim(y, x);
        CHECK(s1 == doctest::Approx(s2).epsilon(1e-12));
        CHECK(s1 <= 1.0 + 1e-12);
    }
}

TEST_CASE("ssim gradient passes finite differences") {
    RandomStream rng(3);
    const Image x = random_image(8, 8, rng, 30.0, 225.0);
    Image y = x;
    for (double& v : y.pix) v += rng.uniform(-10.0, 10.0);
    const Image analytic = ssim_backward(x, y);
    auto f = [&](std::span<const double>) { return ssim(x, y); };
    const auto res = finite_difference_check(f, y.pix, analytic.pix, 1e-5);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("bce at matched hard labels is near zero") {
    Image probs(2, 2);
    BitGrid bits(2, 2);
    probs.pix = {1e-12, 1.0 - 1e-12, 1e-12, 1.0 - 1e-12};
    bits.bits = {0, 1, 0, 1};
    CHECK(bce_loss(probs, bits) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("bce of p = 0.5 on 16 positive labels is 16 ln 2") {
    Image probs(4, 4, 0.5);
    BitGrid bits(4, 4, 1);
    CHECK(bce_loss(probs, bits) == doctest::Approx(16.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("bce is invariant under position permutations and nonnegative") {
    RandomStream rng(4);
    Image probs(4, 4);
    BitGrid bits(4, 4);
    for (double& p : probs.pix) p = rng.uniform(0.05, 0.95);
    for (auto& b : bits.bits) b = rng.bernoulli(0.5) ? 1 : 0;
    const double base = bce_loss(probs, bits);
    CHECK(base >= 0.0);

    Image probs2 = probs;
    BitGrid bits2 = bits;
    std::swap(probs2.pix[0], probs2.pix[9]);
    std::swap(bits2.bits[0], bits2.bits[9]);
    CHECK(bce_loss(probs2, bits2) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("bce gradient passes finite differences") {
    RandomStream rng(5);
    Image probs(4, 4);
    BitGrid bits(4, 4);
    for (double& p : probs.pix) p = rng.uniform(0.1, 0.9);
    for (auto& b : bits.bits) b = rng.bernoulli(0.5) ? 1 : 0;
    const Image analytic = bce_backward(probs, bits);
    auto f = [&](std::span<const double>) { return bce_loss(probs, bits); };
    const auto res = finite_difference_check(f, probs.pix, analytic.pix, 1e-6);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("combined loss endpoints and convexity bound") {
    CHECK(combined_loss(0.8, 3.0, 1.0) == doctest::Approx(0.2));
    CHECK(combined_loss(0.8, 3.0, 0.0) == doctest::Approx(3.0));
    CHECK(combined_loss(1.0, 0.0, 0.5) == doctest::Approx(0.0));

    RandomStream rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const double s = rng.uniform(0.0, 1.0);
        const double b = rng.uniform(0.0, 5.0);
        const double g = rng.uniform(0.0, 1.0);
        const double L = combined_loss(s, b, g);
        const double lo = std::min(1.0 - s, b), hi = std::max(1.0 - s, b);
        CHECK(L >= lo - 1e-12);
        CHECK(L <= hi + 1e-12);
    }
}
