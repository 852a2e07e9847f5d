#include <doctest.h>

#include <cmath>
#include <set>

#include "wm/attacks.hpp"
#include "wm/errors.hpp"
#include "wm/rng.hpp"

using namespace wm;

namespace {

Image random_image(int h, int w, RandomStream& rng, double lo = 0.0, double hi = 255.0) {
    Image img(h, w);
    for (double& v : img.pix) v = rng.uniform(lo, hi);
    return img;
}

}  // namespace

TEST_CASE("gaussian attack with sigma 0 is the identity") {
    RandomStream rng(1);
    const Image img = random_image(16, 16, rng);
    const DiffAttack at = DiffAttack::make(AttackSpec::parse("gaussian(0)"), 16, 16, rng);
    const Image out = at.forward(img);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(out.pix[i] == img.pix[i]);
}

TEST_CASE("smoothing with a = 1 is the identity; a = 3 averages 3x3 neighborhoods") {
    RandomStream rng(2);
    const Image img = random_image(10, 12, rng);
    const DiffAttack a1 = DiffAttack::make(AttackSpec::parse("smooth(1)"), 10, 12, rng);
    const Image out1 = a1.forward(img);
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(out1.pix[i] == img.pix[i]);

    const DiffAttack a3 = DiffAttack::make(AttackSpec::parse("smooth(3)"), 10, 12, rng);
    const Image out3 = a3.forward(img);
    for (int y = 1; y < 9; ++y)
        for (int x = 1; x < 11; ++x) {
            double mean = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) mean += img.at(y + dy, x + dx);
            mean /= 9.0;
            CHECK(out3.at(y, x) == doctest::Approx(mean).epsilon(1e-12));
        }
}

TEST_CASE("jpeg_approx with zeroed noise is the identity within 1e-9") {
    RandomStream rng(3);
    const Image img = random_image(32, 32, rng);
    DiffAttack at = DiffAttack::make(AttackSpec::parse("jpeg(70)"), 32, 32, rng);
    at.zero_noise();
    const Image out = at.forward(img);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(std::abs(out.pix[i] - img.pix[i]) < 1e-9);
}

TEST_CASE("jpeg_approx perturbation is bounded by half the quantization step") {
    RandomStream rng(4);
    const Image img = random_image(16, 16, rng);
    const QuantMatrix q = build_quant_matrix(50);
    const DiffAttack at = DiffAttack::make(AttackSpec::parse("jpeg(50)"), 16, 16, rng);
    const Image out = at.forward(img);
    // Compare in the DCT domain, block by block.
    double in_block[64], out_block[64], cin[64], cout[64];
    for (int y0 = 0; y0 < 16; y0 += 8)
        for (int x0 = 0; x0 < 16; x0 += 8) {
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    in_block[y * 8 + x] = img.at(y0 + y, x0 + x) - 128.0;
                    out_block[y * 8 + x] = out.at(y0 + y, x0 + x) - 128.0;
                }
            jpeg_dct8x8(in_block, cin);
            jpeg_dct8x8(out_block, cout);
            for (int i = 0; i < 64; ++i)
                CHECK(std::abs(cout[i] - cin[i]) <= 0.5 * q.values[i] + 1e-9);
        }
}

TEST_CASE("real JPEG rounding error stays inside the simulated envelope") {
    RandomStream rng(5);
    for (int quality : {50, 70, 90}) {
        const QuantMatrix q = build_quant_matrix(quality);
        for (int trial = 0; trial < 50; ++trial) {
            double block[64], coeffs[64];
            for (double& v : block) v = rng.uniform(-128.0, 127.0);
            jpeg_dct8x8(block, coeffs);
            for (int i = 0; i < 64; ++i) {
                const double dequant = std::round(coeffs[i] / q.values[i]) * q.values[i];
                CHECK(std::abs(dequant - coeffs[i]) <= 0.5 * q.values[i] + 1e-9);
            }
        }
    }
}

TEST_CASE("quantization tables follow the quality scaling rule") {
    const QuantMatrix q50 = build_quant_matrix(50);
    // S = 100 reproduces the base table; spot-check corners.
    CHECK(q50.values[0] == 16);
    CHECK(q50.values[7] == 61);
    CHECK(q50.values[63] == 99);

    const QuantMatrix q100 = build_quant_matrix(100);
    for (int v : q100.values) CHECK(v == 1);

    const QuantMatrix q90 = build_quant_matrix(90);
    for (int i = 0; i < 64; ++i) CHECK(q90.values[i] <= q50.values[i]);

    CHECK_THROWS_AS(build_quant_matrix(0), ConfigError);
    CHECK_THROWS_AS(build_quant_matrix(101), ConfigError);
}

TEST_CASE("single-entry mixtures always return that attack") {
    RandomStream rng(6);
    const AttackMixture mix = AttackMixture::parse("jpeg(70)");
    for (int i = 0; i < 100; ++i) CHECK(sample_attack(mix, rng) == 0);
}

TEST_CASE("mixture sampling frequencies match the probabilities within 3 sigma") {
    RandomStream rng(7);
    const AttackMixture mix = AttackMixture::parse("identity:0.5,gaussian(3):0.3,jpeg(70):0.2");
    const int draws = 100000;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < draws; ++i) ++counts[sample_attack(mix, rng)];
    const double probs[] = {0.5, 0.3, 0.2};
    for (int i = 0; i < 3; ++i) {
        const double expect = draws * probs[i];
        const double sigma = std::sqrt(draws * probs[i] * (1 - probs[i]));
        CHECK(std::abs(counts[i] - expect) < 3.0 * sigma);
    }
}

TEST_CASE("the four-attack training mixture parses to equal quarters") {
    const AttackMixture mix =
        AttackMixture::parse("salt_pepper(0.04):0.25,gaussian(3):0.25,jpeg(70):0.25,smooth(3):0.25");
    REQUIRE(mix.entries.size() == 4);
    CHECK(mix.entries[0].first.kind == AttackSpec::Kind::salt_pepper);
    CHECK(mix.entries[0].first.value == doctest::Approx(0.04));
    CHECK(mix.entries[1].first.kind == AttackSpec::Kind::gaussian_noise);
    CHECK(mix.entries[1].first.value == doctest::Approx(3.0));
    CHECK(mix.entries[2].first.kind == AttackSpec::Kind::jpeg_approx);
    CHECK(mix.entries[2].first.value == doctest::Approx(70.0));
    CHECK(mix.entries[3].first.kind == AttackSpec::Kind::smoothing);
    CHECK(mix.entries[3].first.value == doctest::Approx(3.0));
    for (const auto& [spec, p] : mix.entries) CHECK(p == doctest::Approx(0.25));
}

TEST_CASE("mixtures reject probabilities that do not sum to one") {
    CHECK_THROWS_AS(AttackMixture::parse("identity:0.5,jpeg(70):0.4"), ConfigError);
}

TEST_CASE("block_crop suppresses exactly ceil(fraction * blocks) distinct blocks") {
    RandomStream rng(8);
    const int h = 32, w = 32;  // 16 blocks
    const DiffAttack at = DiffAttack::make(AttackSpec::parse("block_crop(0.3)"), h, w, rng);
    Image ones(h, w, 1.0);
    const Image out = at.forward(ones);
    int zero_blocks = 0;
    for (int by = 0; by < 4; ++by)
        for (int bx = 0; bx < 4; ++bx) {
            bool all_zero = true, all_one = true;
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    const double v = out.at(8 * by + y, 8 * bx + x);
                    all_zero = all_zero && v == 0.0;
                    all_one = all_one && v == 1.0;
                }
            CHECK((all_zero || all_one));
            if (all_zero) ++zero_blocks;
        }
    CHECK(zero_blocks == 5);  // ceil(0.3 * 16)
}

TEST_CASE("salt & pepper forces pixels to the rails and zeroes their gradient") {
    RandomStream rng(9);
    const Image img = random_image(32, 32, rng, 10.0, 245.0);
    const DiffAttack at = DiffAttack::make(AttackSpec::parse("salt_pepper(0.3)"), 32, 32, rng);
    const Image out = at.forward(img);
    Image grad(32, 32, 1.0);
    const Image gin = at.backward(grad);
    int forced = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (out.pix[i] == 0.0 || out.pix[i] == 255.0) {
            ++forced;
            CHECK(gin.pix[i] == 0.0);
        } else {
            CHECK(out.pix[i] == img.pix[i]);
            CHECK(gin.pix[i] == 1.0);
        }
    }
    CHECK(forced > 0);
}

TEST_CASE("attack realizations are deterministic given the seed") {
    const Image img = [] {
        RandomStream r(10);
        return random_image(32, 32, r);
    }();
    for (const char* spec : {"gaussian(2)", "salt_pepper(0.1)", "block_crop(0.25)", "jpeg(70)"}) {
        RandomStream r1(77), r2(77);
        const Image o1 = DiffAttack::make(AttackSpec::parse(spec), 32, 32, r1).forward(img);
        const Image o2 = DiffAttack::make(AttackSpec::parse(spec), 32, 32, r2).forward(img);
        for (std::size_t i = 0; i < o1.size(); ++i) CHECK(o1.pix[i] == o2.pix[i]);
    }
}

TEST_CASE("median on a constant image and resize at scale 1 are identities") {
    RandomStream rng(11);
    ImageU8 flat(24, 24, 99);
    RealAttackParams p;
    p.level = 3;
    const ImageU8 med = apply_real_attack(flat, RealAttack::median, p, rng);
    for (auto v : med.pix) CHECK(v == 99);

    ImageU8 img(24, 24);
    for (auto& v : img.pix) v = static_cast<std::uint8_t>(rng.below(256));
    p.level = 1.0;
    const ImageU8 rs = apply_real_attack(img, RealAttack::resize, p, rng);
    for (std::size_t i = 0; i < img.pix.size(); ++i) CHECK(rs.pix[i] == img.pix[i]);
}

TEST_CASE("grid_crop 30 percent zeroes floor(0.3 * 4096) blocks of a 512x512 image") {
    RandomStream rng(12);
    ImageU8 img(512, 512, 255);
    RealAttackParams p;
    p.level = 30;
    const ImageU8 out = apply_real_attack(img, RealAttack::grid_crop, p, rng);
    int zero_blocks = 0;
    for (int by = 0; by < 64; ++by)
        for (int bx = 0; bx < 64; ++bx) {
            bool all_zero = true;
            for (int y = 0; y < 8 && all_zero; ++y)
                for (int x = 0; x < 8; ++x)
                    if (out.at(8 * by + y, 8 * bx + x) != 0) {
                        all_zero = false;
                        break;
                    }
            if (all_zero) ++zero_blocks;
        }
    CHECK(zero_blocks == 1228);  // floor(0.3 * 4096)
}

TEST_CASE("pattern overlay writes 255 where the mask is set") {
    RandomStream rng(13);
    ImageU8 img(64, 64, 10);
    RealAttackParams p;
    p.level = 3;
    const ImageU8 out = apply_real_attack(img, RealAttack::pattern_lines, p, rng);
    int white = 0;
    for (auto v : out.pix) {
        CHECK((v == 10 || v == 255));
        if (v == 255) ++white;
    }
    CHECK(white > 0);

    // Explicit mask variant.
    ImageU8 mask(64, 64, 0);
    mask.at(5, 5) = 1;
    RealAttackParams pm;
    pm.overlay_mask = &mask;
    const ImageU8 out2 = apply_real_attack(img, RealAttack::pattern_lines, pm, rng);
    CHECK(out2.at(5, 5) == 255);
    CHECK(out2.at(0, 0) == 10);
}

TEST_CASE("real jpeg at quality 100 is nearly lossless on smooth content") {
    ImageU8 img(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) img.at(y, x) = static_cast<std::uint8_t>(100 + y + x);
    RandomStream rng(14);
    RealAttackParams p;
    p.level = 100;
    const ImageU8 out = apply_real_attack(img, RealAttack::jpeg, p, rng);
    for (std::size_t i = 0; i < img.pix.size(); ++i)
        CHECK(std::abs(static_cast<int>(out.pix[i]) - static_cast<int>(img.pix[i])) <= 1);
}

TEST_CASE("crop zeroes a contiguous region of roughly the requested share") {
    RandomStream rng(15);
    ImageU8 img(128, 128, 200);
    RealAttackParams p;
    p.level = 25;
    const ImageU8 out = apply_real_attack(img, RealAttack::crop, p, rng);
    std::size_t zeros = 0;
    for (auto v : out.pix)
        if (v == 0) ++zeros;
    const double share = static_cast<double>(zeros) / out.pix.size();
    CHECK(share == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("attack spec round-trips through text") {
    for (const char* s : {"identity", "gaussian(3)", "salt_pepper(0.04)", "jpeg(70)", "smooth(3)"}) {
        const AttackSpec spec = AttackSpec::parse(s);
        const AttackSpec again = AttackSpec::parse(spec.to_string());
        CHECK(again.kind == spec.kind);
        CHECK(again.value == spec.value);
    }
    CHECK_THROWS_AS(AttackSpec::parse("warp(3)"), ConfigError);
    CHECK_THROWS_AS(AttackSpec::parse("smooth(2)"), ConfigError);
}
